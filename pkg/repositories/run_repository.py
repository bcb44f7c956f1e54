"""
Run Repository - Persists run outputs: result tables, manifests, plots and exports
"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from scipy import io as scipy_io, sparse

from models.errors import InvalidInputError
from models.experiment import RunManifest
from models.operator import AssembledOperator
from repositories.config_repository import sha256_hex

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
CONFIG_NAME = 'config.json'


class RunRepository:
    """
    Repository for the files of one run directory
    Text files are written atomically (temp file + rename)
    """

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self._ensure_out_dir()

    def _ensure_out_dir(self):
        """Ensure output directory exists"""
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise InvalidInputError(f"cannot create output directory {self.out_dir}: {e}") from e

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _write(self, name: str, data: bytes) -> Path:
        target = self.path(name)
        tmp = target.with_name(target.name + '.tmp')
        tmp.write_bytes(data)
        os.replace(tmp, target)
        logger.debug(f"Wrote {target}")
        return target

    def write_text(self, name: str, text: str) -> Path:
        return self._write(name, text.encode('utf-8'))

    def write_bytes(self, name: str, data: bytes) -> Path:
        return self._write(name, data)

    def store_config(self, raw: bytes) -> str:
        """Byte copy of the run config; returns its sha256"""
        self._write(CONFIG_NAME, raw)
        return sha256_hex(raw)

    def save_manifest(self, manifest: RunManifest) -> Path:
        return self.write_text(MANIFEST_NAME, json.dumps(manifest.to_dict(), indent=2) + '\n')

    def load_manifest(self, path: Optional[Union[str, Path]] = None) -> RunManifest:
        target = Path(path) if path else self.path(MANIFEST_NAME)
        try:
            return RunManifest.from_dict(json.loads(target.read_text(encoding='utf-8')))
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidInputError(f"cannot read manifest {target}: {e}") from e

    @staticmethod
    def stored_config_for(manifest_path: Union[str, Path]) -> Path:
        """config.json stored next to a manifest"""
        return Path(manifest_path).parent / CONFIG_NAME

    def verify_manifest(self, manifest: RunManifest, config_path: Union[str, Path]) -> bool:
        """A finalized manifest's hash must match the stored config byte-for-byte"""
        try:
            raw = Path(config_path).read_bytes()
        except OSError as e:
            raise InvalidInputError(f"cannot read stored config {config_path}: {e}") from e
        return manifest.status == 'finalized' and sha256_hex(raw) == manifest.config_sha256

    def export_matrix(self, op: AssembledOperator, name: str) -> Path:
        """Matrix Market coordinate file of an assembled operator"""
        target = self.path(name)
        comment = json.dumps(op.metadata(), sort_keys=True)
        scipy_io.mmwrite(str(target), sparse.coo_matrix(op.matrix), comment=comment,
                         field='real', precision=17, symmetry='symmetric')
        logger.info(f"Exported operator of dimension {op.dimension} to {target}")
        return target

    def outputs(self, names: Dict[str, str]) -> Dict[str, Any]:
        return {key: str(self.path(name)) for key, name in names.items()}
