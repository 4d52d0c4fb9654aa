"""Ordering ICA: unique, ordered independent components from many random starts.

Two interchangeable solvers are provided: :func:`ordering_ica_reference`
runs every candidate separately, :func:`ordering_ica_fast` advances all
candidates as one matrix in a shrinking complement space.
"""

from .contrast import gaussianity_threshold, kurtosis_alpha, upsilon
from .errors import *  # noqa: F401,F403
from .fast import complement_basis, ordering_ica_fast
from .metrics import cosine_divergence, fluctuation, ordering_error
from .reference import fastica_one_unit, ordering_ica_reference
from .result import SeparationResult
from .signal import Dataset, WhiteningModel, center, compose_unmixing, preprocess, whiten
from .sourcegen import SourceSpec, gen_dataset, gg_kurtosis, paper_rho_grid

__version__ = "0.1.0"
