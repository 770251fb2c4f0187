"""Spacelike graph geometry in Minkowski space.

Curvature kernels for Cartesian and radial graphs over the future unit
hyperboloid, a Newton solver for the prescribed mean curvature Dirichlet
problem on hyperbolic geodesic balls, and verifiers for the associated
integral inequalities.
"""

__version__ = "0.1.0"
