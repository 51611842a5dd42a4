"""Exact local computations for GL(2) newvectors and quaternion lattice counts."""

__version__ = "0.1.0"
