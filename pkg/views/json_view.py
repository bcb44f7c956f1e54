"""
JSON View - Format JSON command output and error envelopes
"""
import json
import math
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from models.errors import ExitCode, MpresError
from models.geometry import ClusterDecomposition, Occupancy, SeparabilityCertificate


def _clean(value: Any) -> Any:
    """Replace non-finite floats, which JSON cannot carry"""
    if isinstance(value, float) and not math.isfinite(value):
        return 'inf' if value > 0 else ('-inf' if value < 0 else 'nan')
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


class JSONView:
    """
    Command envelopes: results go to stdout under 'data', refusals and
    failures to stderr under 'error'. Both carry the process exit code.
    """

    @staticmethod
    def success(data: Any = None) -> Dict[str, Any]:
        """Envelope of a geom, spectrum or run result (exit code 0)"""
        response = {
            'success': True,
            'exit_code': int(ExitCode.OK),
            'generated_at': datetime.now(timezone.utc).isoformat(),
        }
        if data is not None:
            response['data'] = data
        return response

    @staticmethod
    def error(message: str, code: str = None, details: Any = None,
              exit_code: ExitCode = ExitCode.FAILURE) -> Dict[str, Any]:
        """
        Envelope of a refused or failed command

        code is the machine-readable error_code of the MpresError subclass
        ('INTERNAL_ERROR' for anything unexpected); details holds structured
        context such as the dimension and cap of a DimensionCapError.
        """
        response = {
            'success': False,
            'error': message,
            'exit_code': int(exit_code),
            'generated_at': datetime.now(timezone.utc).isoformat(),
        }
        if code:
            response['error_code'] = code
        if details:
            response['details'] = details
        return response

    @staticmethod
    def from_exception(exc: MpresError) -> Dict[str, Any]:
        data = exc.to_dict()
        return JSONView.error(data['error'], data.get('error_code'), data.get('details'), exc.exit_code)

    @staticmethod
    def dumps(payload: Dict[str, Any]) -> str:
        return json.dumps(_clean(payload), indent=2)

    # Geometry responses
    @staticmethod
    def decomposition(dec: ClusterDecomposition) -> Dict[str, Any]:
        return JSONView.success(dec.to_dict())

    @staticmethod
    def distance(name: str, value: int) -> Dict[str, Any]:
        return JSONView.success({name: value})

    @staticmethod
    def certificate(cert: Optional[SeparabilityCertificate],
                    occupancy: Optional[List[Occupancy]] = None) -> Dict[str, Any]:
        """Certificate (or null when none exists), with the occupancy table on request"""
        data: Dict[str, Any] = {'certificate': cert.to_dict() if cert else None}
        if occupancy is not None:
            data['occupancy'] = [row.to_dict() for row in occupancy]
        return JSONView.success(data)

    # Run responses
    @staticmethod
    def run_summary(result, outputs: Dict[str, str]) -> Dict[str, Any]:
        summary = result.to_dict()
        summary['outputs'] = outputs
        return JSONView.success(summary)
