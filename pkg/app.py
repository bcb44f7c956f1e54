"""
mpres - Multi-particle eigenvalue concentration experiments
Layered architecture with Controllers, Services, Repositories and Views
"""
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional

import config

# Repositories
from repositories.config_repository import ConfigRepository

# Services
from services.geometry_service import GeometryService
from services.field_service import FieldService
from services.hamiltonian_service import HamiltonianService
from services.experiment_service import ExperimentService

# Controllers
from controllers.cli_controller import CLIController


# Setup logging
def setup_logging():
    """Configure logging with file rotation; stdout is left to command output"""
    root_logger = logging.getLogger()
    if getattr(root_logger, '_mpres_configured', False):
        return

    formatter = logging.Formatter(config.LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')
    level = logging.DEBUG if config.DEBUG_MODE else getattr(logging, config.LOG_LEVEL.upper(), logging.INFO)

    # Console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(level)
    root_logger.addHandler(console_handler)

    # File handler with rotation
    try:
        Path(config.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            config.LOG_FILE,
            maxBytes=config.LOG_MAX_BYTES,
            backupCount=config.LOG_BACKUP_COUNT
        )
        file_handler.setFormatter(formatter)
        file_handler.setLevel(logging.DEBUG if config.DEBUG_MODE else logging.INFO)
        root_logger.addHandler(file_handler)
    except OSError as e:
        logging.warning(f"File logging disabled: {e}")

    root_logger.setLevel(min(level, logging.INFO))
    root_logger._mpres_configured = True
    logging.debug("Logging configured")


def build_controller() -> CLIController:
    """Wire repositories -> services -> controller"""
    config_repo = ConfigRepository()

    geometry = GeometryService(max_particles=config.MAX_PARTICLES)
    field = FieldService(min_bin_count=config.MIN_BIN_COUNT)
    hamiltonian = HamiltonianService(
        geometry,
        dim_cap=config.DIM_CAP,
        dense_cap=config.DENSE_CAP,
        laplacian_diagonal=config.LAPLACIAN_DIAGONAL,
        residual_check=config.RESIDUAL_CHECK,
    )
    experiment = ExperimentService(geometry, field, hamiltonian)

    return CLIController(geometry, field, hamiltonian, experiment, config_repo)


def main(argv: Optional[List[str]] = None) -> int:
    setup_logging()
    return int(build_controller().execute(argv))


if __name__ == '__main__':
    sys.exit(main())
