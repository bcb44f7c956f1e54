"""
Controllers Layer - Command-line handling and worker orchestration
"""
from .cli_controller import CLIController
from .trial_controller import TrialController, TrialWorker

__all__ = [
    'CLIController',
    'TrialController',
    'TrialWorker'
]
