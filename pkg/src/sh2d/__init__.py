"""Spectral toolkit for the 2D Hartree equation with a point interaction.

Modules
-------
specfun      K0, the point-interaction Green value, beta and e_alpha
grid         periodic grid, transforms, norms and field snapshots
pointop      the point-interaction operator, its resolvents and energy forms
rearrange    discrete symmetric decreasing rearrangement
potential    radial interaction kernels
groundstate  Weinstein-functional ground states and the interpolation constant
evolve       Strang-split time integration and a priori bounds
verify       randomized inequality suites
cli          the ``sh2d`` command
"""

__version__ = "0.1.0"
