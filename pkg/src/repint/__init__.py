"""Finite-dimensional numerics for unitary interaction models: transfer
functions of the induced colligation, scattering decompositions on truncated
level spaces, and the characteristic function of the associated lifting."""
from .errors import RepintError
from .model import InteractionModel, load_model, random_model, trivial_model, validate

__all__ = [
    "InteractionModel",
    "RepintError",
    "load_model",
    "random_model",
    "trivial_model",
    "validate",
]
__version__ = "0.1.0"
