"""Non-linear filtered diagonal frame decompositions for linear inverse problems."""

__version__ = "0.1.0"

from .filters import FAMILY_NAMES, ScalarFilterFamily, check_filter_axioms, make_family
from .frame_core import DFD, Frame, dfd_diagonal, dfd_from_svd, dfd_pseudo_inverse, dfd_wavelet_vaguelette
from .problems import NoiseModel, add_noise, make_diagonal_problem, make_problem, make_radon_problem
from .reconstruction import Reconstructor, reconstruct

__all__ = [
    "DFD",
    "FAMILY_NAMES",
    "Frame",
    "NoiseModel",
    "Reconstructor",
    "ScalarFilterFamily",
    "add_noise",
    "check_filter_axioms",
    "dfd_diagonal",
    "dfd_from_svd",
    "dfd_pseudo_inverse",
    "dfd_wavelet_vaguelette",
    "make_diagonal_problem",
    "make_family",
    "make_problem",
    "make_radon_problem",
    "reconstruct",
]
