# Gridworld benchmark: world, tasks, oracle planner, instructions, datasets
