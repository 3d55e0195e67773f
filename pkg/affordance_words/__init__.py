"""
affordance-words - Learn how actions, objects, effects and words relate, and
use recognized human gestures as evidence about them.

A discrete Bayesian network links robot actions, object features, motion
effects and spoken words; one left-right Gaussian-mixture HMM per action
recognizes the same actions from human hand trajectories.
"""

__version__ = "0.1.0"
