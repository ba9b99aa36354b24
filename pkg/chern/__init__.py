# Chern-Weil module
