# Solitary waves, linearized operator and approximate two-soliton solutions
