"""Numerics for the q-deformed Weyl-Heisenberg algebra, Bogoliubov pairs and theta-vacua."""

from .bogoliubov import BogoliubovPair, make_pair, pair_space, translate
from .dissipation import EvolutionTrace, ThetaSchedule, evolve
from .fock import (
    ConvergenceError,
    DensityMatrix,
    FockError,
    Operator,
    SpaceDescriptor,
    SpaceMismatchError,
    StateVector,
    make_space,
)
from .hopf import DeformationParameter, q_number
from .table import ResultTable
from .thermofield import ModeSpec, ThetaVacuum, stationary_theta, weights

__all__ = [
    "BogoliubovPair",
    "ConvergenceError",
    "DeformationParameter",
    "DensityMatrix",
    "EvolutionTrace",
    "FockError",
    "ModeSpec",
    "Operator",
    "ResultTable",
    "SpaceDescriptor",
    "SpaceMismatchError",
    "StateVector",
    "ThetaSchedule",
    "ThetaVacuum",
    "evolve",
    "make_pair",
    "make_space",
    "pair_space",
    "q_number",
    "stationary_theta",
    "translate",
    "weights",
]
