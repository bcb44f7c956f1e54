"""
Experiment Models - Runs, bound curves, empirical CDFs, configs and manifests
"""
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import InvalidInputError
from models.field import FieldModel
from models.geometry import Configuration, as_point
from models.operator import InteractionSpec
import config

EXPERIMENTS = ('theorem1', 'w1', 'w2', 'charge_demo', 'spectrum')
BOUND_MODES = ('worst_case', 'certificate')

# keys each experiment accepts besides the common ones
_EXPERIMENT_FIELDS = {
    'theorem1': {'u1', 'L1', 'u2', 'L2', 's_grid', 'trials', 'bound_mode', 'occupancy_factor'},
    'w1': {'u', 'L', 'E', 's_grid', 'trials'},
    'w2': {'u1', 'L1', 'u2', 'L2', 's_grid', 'trials'},
    'charge_demo': {'a', 'b', 'L', 's_grid', 'trials', 'shift_t', 'bound_mode', 'occupancy_factor'},
    'spectrum': {'u', 'L'},
}
_COMMON_FIELDS = {'schema_version', 'experiment', 'model', 'interaction', 'seed'}

DEFAULT_SHIFT_T = (0.0, 0.1, 0.37, 1.0)


def default_s_grid() -> Tuple[float, ...]:
    return tuple(float(s) for s in np.logspace(math.log10(config.DEFAULT_S_MIN),
                                               math.log10(config.DEFAULT_S_MAX),
                                               config.DEFAULT_S_GRID_SIZE))


def normalize_s_grid(values: Sequence[float]) -> Tuple[float, ...]:
    """Sorted grid restricted to (0, 1); an empty result is an error"""
    try:
        grid = sorted({float(s) for s in values})
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"s-grid must hold numbers: {e}") from e
    kept = tuple(s for s in grid if 0 < s < 1)
    if not kept:
        raise InvalidInputError("s-grid has no point in (0, 1)")
    return kept


@dataclass
class ResonanceRun:
    """Two-cube experiment: C_{L1}(u1) against C_{L2}(u2) under a common field"""
    model: FieldModel
    u1: Configuration
    L1: int
    u2: Configuration
    L2: int
    interaction: InteractionSpec = field(default_factory=InteractionSpec)
    s_grid: Tuple[float, ...] = field(default_factory=default_s_grid)
    trials: int = 10 ** 4
    master_seed: int = 0
    bound_mode: str = 'worst_case'
    occupancy_factor: bool = False

    def __post_init__(self):
        if self.u1.N != self.u2.N or self.u1.d != self.u2.d:
            raise InvalidInputError("both cube centers need the same N and d")
        for name in ('L1', 'L2'):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise InvalidInputError(f"{name} must be a non-negative integer, got {v!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidInputError(f"trials must be a positive integer, got {self.trials!r}")
        if self.bound_mode not in BOUND_MODES:
            raise InvalidInputError(f"bound mode must be one of {', '.join(BOUND_MODES)}")
        self.s_grid = normalize_s_grid(self.s_grid)

    @property
    def N(self) -> int:
        return self.u1.N

    @property
    def d(self) -> int:
        return self.u1.d

    @property
    def L(self) -> int:
        return max(self.L1, self.L2)


@dataclass
class BoundCurve:
    """Reference curve h(s) on the s-grid"""
    s: np.ndarray
    h: np.ndarray
    label: str
    fitted: bool = False
    details: Dict[str, Any] = field(default_factory=dict)

    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.h) >= 0))

    def to_dict(self) -> Dict[str, Any]:
        return {'label': self.label, 'fitted': self.fitted, 'details': self.details,
                's': [float(v) for v in self.s], 'h': [float(v) for v in self.h]}


@dataclass
class EmpiricalCdf:
    """Empirical CDF of observed distances with Wilson score intervals"""
    distances: np.ndarray
    z: float = field(default_factory=lambda: config.WILSON_Z)

    def __post_init__(self):
        self.distances = np.sort(np.asarray(self.distances, dtype=float))

    @property
    def count(self) -> int:
        return len(self.distances)

    def successes(self, s: float) -> int:
        return int(np.searchsorted(self.distances, s, side='right'))

    def evaluate(self, s: float) -> float:
        """P[dist <= s]; 0 for the empty CDF"""
        if self.count == 0:
            return 0.0
        return self.successes(s) / self.count

    def wilson(self, s: float) -> Tuple[float, float]:
        n = self.count
        if n == 0:
            return 0.0, 1.0
        p = self.evaluate(s)
        z2 = self.z * self.z
        denom = 1.0 + z2 / n
        center = (p + z2 / (2 * n)) / denom
        half = self.z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
        return max(0.0, center - half), min(1.0, center + half)


@dataclass
class CurvePoint:
    """One grid row: empirical probability, its Wilson interval and the reference bound"""
    s: float
    empirical_p: float
    ci_low: float
    ci_high: float
    bound_h: float

    @property
    def respected(self) -> bool:
        """p <= h up to the Wilson upper margin"""
        return self.empirical_p <= self.bound_h + (self.ci_high - self.empirical_p)

    def as_row(self) -> List[float]:
        return [self.s, self.empirical_p, self.ci_low, self.ci_high, self.bound_h]


@dataclass
class PartialResult:
    """Distances of one worker, trials [trial_start, trial_stop) in trial order"""
    trial_start: int
    trial_stop: int
    distances: np.ndarray

    def __post_init__(self):
        self.distances = np.asarray(self.distances, dtype=float)
        if self.trial_stop < self.trial_start:
            raise InvalidInputError("trial range is reversed")
        if len(self.distances) != self.trial_stop - self.trial_start:
            raise InvalidInputError("partial result needs one distance per trial")

    @property
    def count(self) -> int:
        return self.trial_stop - self.trial_start


@dataclass
class ExperimentResult:
    """Outcome of one experiment: grid rows plus experiment-specific extras"""
    experiment: str
    cdf: EmpiricalCdf
    curve: BoundCurve
    points: List[CurvePoint]
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def all_respected(self) -> bool:
        return all(p.respected for p in self.points)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'experiment': self.experiment,
            'trials': self.cdf.count,
            'all_respected': self.all_respected,
            'curve': {'label': self.curve.label, 'fitted': self.curve.fitted, 'details': self.curve.details},
            'points': [dict(zip(('s', 'empirical_p', 'ci_low', 'ci_high', 'bound_h'), p.as_row()),
                            respected=p.respected) for p in self.points],
            'extras': self.extras,
        }


def _configuration(data: Dict[str, Any], key: str) -> Configuration:
    if key not in data:
        raise InvalidInputError(f"config is missing {key!r}")
    return Configuration.from_list(data[key])


def _non_negative_int(data: Dict[str, Any], key: str) -> int:
    if key not in data:
        raise InvalidInputError(f"config is missing {key!r}")
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise InvalidInputError(f"{key} must be a non-negative integer, got {v!r}")
    return v


@dataclass
class ExperimentConfig:
    """
    Schema-versioned experiment document
    Unknown fields are rejected and every embedded type is re-validated on load
    """
    experiment: str
    model: FieldModel
    interaction: InteractionSpec
    params: Dict[str, Any]
    seed: Optional[int] = None
    schema_version: int = config.CONFIG_SCHEMA_VERSION

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        if not isinstance(data, dict):
            raise InvalidInputError("experiment config must be a JSON object")
        version = data.get('schema_version')
        if version != config.CONFIG_SCHEMA_VERSION:
            raise InvalidInputError(f"unsupported schema_version {version!r}, expected {config.CONFIG_SCHEMA_VERSION}")
        experiment = data.get('experiment')
        if experiment not in EXPERIMENTS:
            raise InvalidInputError(f"experiment must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}")
        unknown = set(data) - _COMMON_FIELDS - _EXPERIMENT_FIELDS[experiment]
        if unknown:
            raise InvalidInputError(f"unknown fields for {experiment}: {sorted(unknown)}")

        params: Dict[str, Any] = {}
        if experiment in ('theorem1', 'w2'):
            params.update(u1=_configuration(data, 'u1'), L1=_non_negative_int(data, 'L1'),
                          u2=_configuration(data, 'u2'), L2=_non_negative_int(data, 'L2'))
        elif experiment in ('w1', 'spectrum'):
            params.update(u=_configuration(data, 'u'), L=_non_negative_int(data, 'L'))
            if experiment == 'w1':
                try:
                    params['E'] = float(data.get('E', 0.0))
                except (TypeError, ValueError) as e:
                    raise InvalidInputError(f"E must be a number: {e}") from e
                if not math.isfinite(params['E']):
                    raise InvalidInputError(f"E must be finite, got {params['E']}")
        else:
            params.update(a=as_point(data.get('a') or ()), b=as_point(data.get('b') or ()),
                          L=_non_negative_int(data, 'L'))
            try:
                shift_t = tuple(float(t) for t in data.get('shift_t', DEFAULT_SHIFT_T))
            except (TypeError, ValueError) as e:
                raise InvalidInputError(f"shift_t must be an array of numbers: {e}") from e
            if not shift_t or not all(math.isfinite(t) for t in shift_t):
                raise InvalidInputError(f"shift_t must be a non-empty array of finite numbers, got {list(shift_t)}")
            params['shift_t'] = shift_t

        if experiment != 'spectrum':
            params['s_grid'] = normalize_s_grid(data['s_grid']) if 's_grid' in data else default_s_grid()
            params['trials'] = _non_negative_int(data, 'trials') if 'trials' in data else 10 ** 4
            if params['trials'] < 1:
                raise InvalidInputError("trials must be positive")
        if 'bound_mode' in data:
            if data['bound_mode'] not in BOUND_MODES:
                raise InvalidInputError(f"bound_mode must be one of {', '.join(BOUND_MODES)}")
            params['bound_mode'] = data['bound_mode']
        if 'occupancy_factor' in data:
            params['occupancy_factor'] = bool(data['occupancy_factor'])

        seed = data.get('seed')
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64):
            raise InvalidInputError(f"seed must be an integer in [0, 2^64), got {seed!r}")

        return cls(
            experiment=experiment,
            model=FieldModel.from_dict(data.get('model', {'law': 'gaussian'})),
            interaction=InteractionSpec.from_dict(data.get('interaction')),
            params=params,
            seed=seed,
        )

    def to_run(self, master_seed: int, trials: Optional[int] = None,
               s_grid: Optional[Sequence[float]] = None) -> ResonanceRun:
        """Two-cube run described by a theorem1 config"""
        if self.experiment != 'theorem1':
            raise InvalidInputError(f"{self.experiment} config does not describe a two-cube run")
        p = self.params
        return ResonanceRun(
            model=self.model, u1=p['u1'], L1=p['L1'], u2=p['u2'], L2=p['L2'],
            interaction=self.interaction,
            s_grid=tuple(s_grid) if s_grid is not None else p['s_grid'],
            trials=trials or p['trials'],
            master_seed=master_seed,
            bound_mode=p.get('bound_mode', 'worst_case'),
            occupancy_factor=p.get('occupancy_factor', False),
        )


@dataclass
class RunManifest:
    """Provenance record, written as 'started' and rewritten as 'finalized'"""
    experiment: str
    config_sha256: str
    master_seed: int
    tool_version: str = config.TOOL_VERSION
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finalized_at: Optional[str] = None
    status: str = 'started'
    overrides: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    runtime_seconds: Optional[float] = None
    summary: Dict[str, Any] = field(default_factory=dict)

    def finalize(self, outputs: Dict[str, str], runtime_seconds: float, summary: Dict[str, Any] = None):
        self.outputs = dict(outputs)
        self.runtime_seconds = runtime_seconds
        self.summary = summary or {}
        self.finalized_at = datetime.now(timezone.utc).isoformat()
        self.status = 'finalized'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'experiment': self.experiment,
            'config_sha256': self.config_sha256,
            'master_seed': self.master_seed,
            'tool_version': self.tool_version,
            'started_at': self.started_at,
            'finalized_at': self.finalized_at,
            'status': self.status,
            'overrides': self.overrides,
            'outputs': self.outputs,
            'runtime_seconds': self.runtime_seconds,
            'summary': self.summary,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunManifest':
        try:
            return cls(
                experiment=data['experiment'],
                config_sha256=data['config_sha256'],
                master_seed=int(data['master_seed']),
                tool_version=data.get('tool_version', config.TOOL_VERSION),
                started_at=data.get('started_at', ''),
                finalized_at=data.get('finalized_at'),
                status=data.get('status', 'started'),
                overrides=data.get('overrides', {}),
                outputs=data.get('outputs', {}),
                runtime_seconds=data.get('runtime_seconds'),
                summary=data.get('summary', {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"malformed manifest: {e}") from e
