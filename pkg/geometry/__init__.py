# Pointwise curvature module
