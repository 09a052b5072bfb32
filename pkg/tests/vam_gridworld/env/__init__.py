# Gridworld environment tests
