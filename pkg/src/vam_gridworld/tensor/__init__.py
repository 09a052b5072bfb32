# Tensor core: autodiff, optimizer, checkpoints, gradient checks

from vam_gridworld.tensor.autodiff import Tensor, ComputationTape, backward

__all__ = ['Tensor', 'ComputationTape', 'backward']
