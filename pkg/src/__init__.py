# VAM gridworld source root
