"""Stratonovich signatures of diffusion paths, and their inversion at desk scale.

Subpackage map:

- tensors: truncated tensor algebra, polyline signatures, shuffle checks
- integrals: iterated / extended Stratonovich integrals along sampled paths
- fields: polynomial-times-Gaussian vector-field calculus, Hörmander checks,
  bump 1-forms and the lifted-field construction
- sde: seeded Heun simulation of Stratonovich SDEs
- boxes: lattice box grids, hitting records, polygonal approximations
- trajectories: piecewise linear trajectories, Fréchet-type distance, squeeze
  parametrizations
- inversion: signature-only extraction of the maximal admissible word and the
  end-to-end reconstruction sweep
- cli: experiment harness (simulate / check-assumptions / tailbound /
  reconstruct / frechet)
"""

from .boxes import BoxGrid, HittingRecord, extract_hitting, polygonal_approx
from .fields import BracketFamily, OneForm, Poly, VectorField, hormander_rank, lie_bracket
from .integrals import SamplePath, extended_signature, strat_iterated_integral, strat_line_integral
from .inversion import ReconstructConfig, build_form_family, extract_word, reconstruct
from .sde import DiffusionSpec, SimConfig, simulate
from .tensors import TruncatedTensor, identity_tensor, plt_signature, segment_signature, shuffle_residual, tensor_mul
from .trajectories import PLT, Parametrization, build_squeeze_parametrization, trajectory_distance

__all__ = [
    "BoxGrid",
    "BracketFamily",
    "DiffusionSpec",
    "HittingRecord",
    "OneForm",
    "PLT",
    "Parametrization",
    "Poly",
    "ReconstructConfig",
    "SamplePath",
    "SimConfig",
    "TruncatedTensor",
    "VectorField",
    "build_form_family",
    "build_squeeze_parametrization",
    "extended_signature",
    "extract_hitting",
    "extract_word",
    "hormander_rank",
    "identity_tensor",
    "lie_bracket",
    "plt_signature",
    "polygonal_approx",
    "reconstruct",
    "segment_signature",
    "shuffle_residual",
    "simulate",
    "strat_iterated_integral",
    "strat_line_integral",
    "tensor_mul",
    "trajectory_distance",
]
