# vam_gridworld tests
