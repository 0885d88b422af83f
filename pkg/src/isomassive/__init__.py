"""Massive Laplacian on isoradial graphs: elliptic weights, local Green function and rooted spanning forests."""

from .elliptic import EllipticContext, PoleError, complete_integrals
from .isograph import FiniteGraph, GraphError, PeriodicGraph, load_graph, preset, star_triangle
from .laplacian import conductance, laplacian_matrix, mass
from .green import green_local, green_neighbor, green_fourier, TruncatedGreen
from .forest import free_energy_closed, free_energy_fourier, marginal, transfer_impedance, wilson_sample

from . import asymptotics, elliptic, expfun, forest, green, isograph, laplacian, spectral, zinv

__version__ = "0.1.0"
