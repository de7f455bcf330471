# Periodic pseudospectral time stepping
