"""Uncertainty of quantum states with respect to a projective measurement.

Measures are functions of the diagonal of a density matrix in the reference
(computational) basis; see :mod:`quncertainty.measures`. Channel predicates
live in :mod:`quncertainty.channels` and the coherence-of-assistance search in
:mod:`quncertainty.assist`.
"""

from .core import (
    PureStateEnsemble,
    StructureError,
    dephase,
    eigendecompose,
    fidelity,
    matrix_sqrt,
    partial_trace,
    purify,
    sample_random,
)
from .measures import (
    MeasureReport,
    SymmetricConcaveFunction,
    entropy_function,
    f_max,
    f_var,
    geometric_coherence,
    get_function,
    is_maximally_uncertain,
    majorizes,
    register_function,
    u_entropy,
    u_geometric,
    u_var,
    uncertainty,
)
from .channels import (
    KrausChannel,
    apply,
    constant_diagonal_unitary,
    is_certain_operation,
    is_uncertainty_preserving,
    max_coherent_decomposition_of_uniform,
    uniform_diagonal_twirl,
)
from .assist import CaConfig, average_coherence, coherence_of_assistance, sandwich_check

__version__ = "0.1.0"
