"""
Error Models - Exception hierarchy and process exit codes
"""
from enum import IntEnum
from typing import Any, Dict, Optional


class ExitCode(IntEnum):
    """CLI exit codes"""
    OK = 0
    FAILURE = 1
    INVALID_INPUT = 2
    RESOURCE_CAP = 3
    HYPOTHESIS = 4


class MpresError(Exception):
    """Base class for all library errors"""
    exit_code = ExitCode.FAILURE
    error_code = 'MPRES_ERROR'

    def to_dict(self) -> Dict[str, Any]:
        return {'error': str(self), 'error_code': self.error_code}


class InvalidInputError(MpresError, ValueError):
    """Malformed or inconsistent input (dimension mismatch, empty set, bad config)"""
    exit_code = ExitCode.INVALID_INPUT
    error_code = 'INVALID_INPUT'


class CoverageError(InvalidInputError):
    """A field sample does not cover a lattice site an operator touches"""
    error_code = 'COVERAGE_GAP'


class DimensionCapError(MpresError):
    """Cube dimension (2L+1)^{Nd} exceeds the configured cap"""
    exit_code = ExitCode.RESOURCE_CAP
    error_code = 'DIMENSION_CAP'

    def __init__(self, dimension: int, cap: int, setting: str = 'MPRES_DIM_CAP'):
        self.dimension = dimension
        self.cap = cap
        super().__init__(f"cube dimension {dimension} exceeds cap {cap} (set {setting} to raise it)")

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data['details'] = {'dimension': self.dimension, 'cap': self.cap}
        return data


class HypothesisViolation(MpresError):
    """A theorem hypothesis does not hold; the run is refused"""
    exit_code = ExitCode.HYPOTHESIS
    error_code = 'HYPOTHESIS_VIOLATED'


class CertificateError(MpresError):
    """A separability certificate failed validation"""
    exit_code = ExitCode.INVALID_INPUT
    error_code = 'INVALID_CERTIFICATE'

    def __init__(self, message: str, report: Optional[Any] = None):
        self.report = report
        super().__init__(message)


class AssemblyError(MpresError):
    """An assembled operator violates its structural invariants"""
    error_code = 'ASSEMBLY_ERROR'
