# Kaehler-Ricci flow module
