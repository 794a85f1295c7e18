"""Numerical laboratory for front acceleration in the cane toads equation.

u_t = theta u_xx + u_theta_theta + R(u) on x in R, theta >= theta_lower,
with local (u(1 - u)), non-local (n(1 - rho)) and linearized (u) reactions.
"""

from .grid import Field, GridSpec, RhoProfile, integrate_theta

__all__ = ["Field", "GridSpec", "RhoProfile", "integrate_theta"]
__version__ = "0.1.0"
