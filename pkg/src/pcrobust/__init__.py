"""LiDAR point-cloud corruption, ICP odometry and pose-error evaluation."""

__version__ = "0.1.0"
