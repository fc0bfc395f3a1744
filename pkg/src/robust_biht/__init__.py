"""Normalized binary iterative hard thresholding for 1-bit compressed sensing
with adversarially flipped responses."""

__version__ = "0.1.0"

from .adversary import CorruptionBudget, CorruptionPattern, corrupt, exhaustive_worst_case
from .biht import RecoveryTrace, biht_run, biht_step, h_f_map, h_f_restricted, h_map, h_restricted
from .ensemble import MeasurementMatrix, clean_responses, sample_gaussian_matrix, sample_sparse_unit
from .errors import DegenerateIterate, InvalidArgument, PreconditionError, ResourceError
from .linops import (
    SparseUnitVector,
    hamming_distance,
    sign_scalar,
    sign_vector,
    sphere_distance,
    subset_threshold,
    top_k_threshold,
)
from .theory import constants
