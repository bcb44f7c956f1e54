"""
Config Repository - Loads experiment configuration documents
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Tuple, Union

from models.errors import InvalidInputError
from models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ConfigRepository:
    """
    Repository for ExperimentConfig documents
    Configs are JSON files; the raw bytes are kept for hashing
    """

    def read_bytes(self, path: Union[str, Path]) -> bytes:
        try:
            return Path(path).read_bytes()
        except OSError as e:
            raise InvalidInputError(f"cannot read config {path}: {e.strerror or e}") from e

    def parse(self, raw: bytes, source: str = '<config>') -> ExperimentConfig:
        try:
            data = json.loads(raw.decode('utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise InvalidInputError(f"malformed JSON in {source}: {e}") from e
        return ExperimentConfig.from_dict(data)

    def load(self, path: Union[str, Path]) -> Tuple[ExperimentConfig, bytes]:
        """Load and validate a config; returns the config and its raw bytes"""
        raw = self.read_bytes(path)
        cfg = self.parse(raw, str(path))
        logger.info(f"Loaded {cfg.experiment} config from {path} (sha256 {sha256_hex(raw)[:12]})")
        return cfg, raw
