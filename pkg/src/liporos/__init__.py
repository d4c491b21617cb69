"""Porosity, well-separated families and Lipschitz-free space computations on finite metric data."""

from .errors import (BoundViolation, DomainError, ExtractionError, HypothesisNotMet, InputError, LiporosError,
                     NumericError, SolverDisagreement)
from .extraction import check_well_separated, extract_well_separated, shrink_balls
from .kalton import kalton_decompose
from .kr import Molecule, kr_norm, kr_solve
from .metric import LipFunction, PointCloud, lip_norm, quotient_metric
from .operators import glue, mcshane_extend, restrict
from .porosity import covering_radius, density_profile, largest_hole, porosity_profile
from .spaces import Ball, BallSequence, EuclideanSpace, FiniteMetricSpace, HeisenbergSpace, space_from_dict

__version__ = "0.1.0"

__all__ = [
    "Ball", "BallSequence", "BoundViolation", "DomainError", "EuclideanSpace", "ExtractionError",
    "FiniteMetricSpace", "HeisenbergSpace", "HypothesisNotMet", "InputError", "LipFunction", "LiporosError",
    "Molecule", "NumericError", "PointCloud", "SolverDisagreement", "check_well_separated", "covering_radius",
    "density_profile", "extract_well_separated", "glue", "kalton_decompose", "kr_norm", "kr_solve",
    "largest_hole", "lip_norm", "mcshane_extend", "porosity_profile", "quotient_metric", "restrict",
    "shrink_balls", "space_from_dict",
]
