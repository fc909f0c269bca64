"""Shape-constrained robotic arm trajectories via differentiable kinematics."""

__version__ = "0.1.0"
