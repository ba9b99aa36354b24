# Continuity equation module
