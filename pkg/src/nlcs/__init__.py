"""Nonlinear coherent states, their dual pairs and superpositions, and
Gazeau-Klauder states, with photon-statistics and squeezing indicators."""

from .errors import (
    ConvergenceError,
    DomainError,
    NLCSError,
    SingularNonlinearityError,
    TruncationError,
)
from .fock import FockState, canonical_commutator_check, displacement_apply, expectation, expm
from .nonclassicality import (
    MomentSet,
    NonclassicalityReport,
    evaluate,
    moments_closed_form,
    moments_oracle,
)
from .nonlinearity import (
    NonlinearityFunction,
    SpectrumModel,
    combined_nonlinearity,
    from_table,
    get_model,
    gk_combined_nonlinearity,
)
from .states import KINDS, StateSpec, build_state, canonical_coherent
from .sweep import PRESETS, SweepConfig, run_figure_sweep, verify

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "NLCSError",
    "SingularNonlinearityError",
    "TruncationError",
    "FockState",
    "canonical_commutator_check",
    "displacement_apply",
    "expectation",
    "expm",
    "MomentSet",
    "NonclassicalityReport",
    "evaluate",
    "moments_closed_form",
    "moments_oracle",
    "NonlinearityFunction",
    "SpectrumModel",
    "combined_nonlinearity",
    "from_table",
    "get_model",
    "gk_combined_nonlinearity",
    "KINDS",
    "StateSpec",
    "build_state",
    "canonical_coherent",
    "PRESETS",
    "SweepConfig",
    "run_figure_sweep",
    "verify",
]
