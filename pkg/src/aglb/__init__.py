"""Adaptive GRPO for synthetic mobile-GUI agents.

A small, fully deterministic testbed: procedurally generated screen-graph
tasks, a hashed linear softmax policy over candidate actions, and a trainer
combining length-shaped rewards, positive replay and failure curriculum
filtering on top of group-relative policy optimization.
"""

__version__ = "0.1.0"
