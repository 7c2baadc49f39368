"""Geodesic flows on diffeomorphism groups of the 2-torus and numerical
checks of when the volume-preserving and symplectic subgroups are totally
geodesic."""

from .errors import GeoflowError
from .fields import GridSpec, MetricField, OneFormField, ScalarField, TwoFormField, VectorField

__version__ = "0.1.0"

__all__ = [
    "GeoflowError",
    "GridSpec",
    "MetricField",
    "OneFormField",
    "ScalarField",
    "TwoFormField",
    "VectorField",
]
