"""Quantum reservoir classifier of entangled teacher states read out through six-qubit singlets."""

from .dfs import SingletBasis, build_singlet_basis, singlet_count, singlet_projectors
from .dynamics import (
    CouplingParams,
    EvolutionConfig,
    Lindbladian,
    ReservoirParams,
    equilibrate,
    propagate,
    read_teacher,
)
from .readout import FeatureVector, ReadoutModel, classify, fit, relative_error
from .states import TeacherState, log_negativity

__version__ = "0.1.0"
