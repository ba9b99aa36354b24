# Scenario loading and output writers module
