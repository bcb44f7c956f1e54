"""
Services package - Business logic layer
Geometry, random fields, Hamiltonians and Monte Carlo experiments
"""
from .geometry_service import GeometryService
from .field_service import FieldService
from .hamiltonian_service import HamiltonianService
from .experiment_service import ExperimentService

__all__ = [
    'GeometryService',
    'FieldService',
    'HamiltonianService',
    'ExperimentService',
]
