"""Vertex-weighted online bipartite matching under known i.i.d. arrivals.

Modules: :mod:`model` (instances and vectors), :mod:`lp` (benchmark LP and
ratio program), :mod:`rounding` (dependent rounding), :mod:`policies`,
:mod:`analytic` (exact Markov chains), :mod:`sim` (Monte Carlo),
:mod:`catalog` (canned structures), :mod:`verify` and :mod:`cli`.
"""

from .model import FracVector, Instance, RoundedVector, target_constants

__all__ = ["FracVector", "Instance", "RoundedVector", "target_constants"]
__version__ = "0.1.0"
