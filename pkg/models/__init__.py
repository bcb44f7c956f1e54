"""
Models package - Data models following MVC pattern
"""
from .errors import (
    ExitCode, MpresError, InvalidInputError, CoverageError, DimensionCapError,
    HypothesisViolation, CertificateError, AssemblyError,
)
from .geometry import (
    Configuration, Parallelepiped, BoxUnion, MultiCube, SeparatingLayer, Cluster,
    ClusterDecomposition, Occupancy, SeparabilityCertificate, CertificateReport,
)
from .field import FieldModel, FieldSample, MeanFluctuationSplit, CcmConstants, BinEstimate
from .operator import InteractionSpec, CubeBasis, AssembledOperator, Spectrum, ShiftReport
from .experiment import (
    ResonanceRun, BoundCurve, EmpiricalCdf, CurvePoint, PartialResult, ExperimentResult,
    ExperimentConfig, RunManifest,
)

__all__ = [
    'ExitCode',
    'MpresError',
    'InvalidInputError',
    'CoverageError',
    'DimensionCapError',
    'HypothesisViolation',
    'CertificateError',
    'AssemblyError',
    'Configuration',
    'Parallelepiped',
    'BoxUnion',
    'MultiCube',
    'SeparatingLayer',
    'Cluster',
    'ClusterDecomposition',
    'Occupancy',
    'SeparabilityCertificate',
    'CertificateReport',
    'FieldModel',
    'FieldSample',
    'MeanFluctuationSplit',
    'CcmConstants',
    'BinEstimate',
    'InteractionSpec',
    'CubeBasis',
    'AssembledOperator',
    'Spectrum',
    'ShiftReport',
    'ResonanceRun',
    'BoundCurve',
    'EmpiricalCdf',
    'CurvePoint',
    'PartialResult',
    'ExperimentResult',
    'ExperimentConfig',
    'RunManifest',
]
