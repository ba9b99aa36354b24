# Model manifolds module
