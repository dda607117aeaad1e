"""Experience-based city mapping and visual positioning, at desk scale.

Synthetic experiences are split into submaps, reconstructed with GPS-prior
bundle adjustment, verified against INS and kinematics, fused into one
geo-aligned global map, and served to simulated edge devices that keep
their local odometry synchronized to the global frame over a simulated
mobile network.
"""

__version__ = "0.1.0"
