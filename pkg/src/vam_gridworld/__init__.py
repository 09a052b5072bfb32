"""
Gridworld benchmark and cross-modal agent for hierarchical instruction following.

Subpackages:
    tensor   reverse-mode autodiff, AdamW, checkpoints, finite-difference checks
    env      worlds, tasks, oracle planner, instructions, datasets
    agent    view-action matching model with an action-type gate
    harness  training, rollouts, metrics, ablation and gap studies
"""

__version__ = '0.1.0'
