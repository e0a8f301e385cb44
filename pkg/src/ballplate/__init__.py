"""Deterministic simulator of a six-leg rotary platform balancing a rolling ball.

Subpackages cover leg geometry and servo inverse kinematics, two-link leg
dynamics, Mamdani fuzzy controllers, the ball-on-plate plant, a synthetic
camera pipeline, and the closed-loop experiment harness with its CLI.
"""

__version__ = "0.1.0"
