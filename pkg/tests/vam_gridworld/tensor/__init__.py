# Autodiff, optimizer and checkpoint tests
