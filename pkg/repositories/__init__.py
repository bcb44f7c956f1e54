"""
Repositories package - Data access layer following Repository pattern
Experiment configs in, run artifacts out
"""
from .config_repository import ConfigRepository
from .run_repository import RunRepository

__all__ = [
    'ConfigRepository',
    'RunRepository'
]
