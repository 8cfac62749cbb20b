"""fflab: exact incidence-geometry and sum-product statistics over GF(q)."""

__version__ = "0.1.0"

from .field import FieldSpec, FieldElement, SubfieldDesc, CosetScanResult
from .sets import FSet, PairGraph, generate_family
from .stats import Line, PointSet, StatReport

__all__ = [
    "FieldSpec",
    "FieldElement",
    "SubfieldDesc",
    "CosetScanResult",
    "FSet",
    "PairGraph",
    "generate_family",
    "Line",
    "PointSet",
    "StatReport",
    "__version__",
]
