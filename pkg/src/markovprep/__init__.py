"""Dissipative preparation of pure states with quasi-local Markov processes.

Subpackages: ``operators`` (composite spaces, embedding), ``liouvillian``
(generator, spectrum, kernel), ``constructors`` (jump families),
``verification`` (stationarity and uniqueness certificates), ``dynamics``
(time evolution, gap scans), ``lattice`` (AKLT, bosons, fermions) and
``cli``.
"""
from .liouvillian import LindbladProcess, build_superoperator, spectrum, stationary_space

__all__ = ["LindbladProcess", "build_superoperator", "spectrum", "stationary_space"]
__version__ = "0.1.0"
