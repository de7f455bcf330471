# Collision experiments, certificates, persistence and the gkdvlab CLI
