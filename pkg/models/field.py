"""
Random Field Models - Marginal laws, field samples and the mean/fluctuation split
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from models.errors import CoverageError, InvalidInputError
from models.geometry import Parallelepiped, Point, as_point

LAWS = ('gaussian', 'uniform', 'piecewise_constant')

_LAW_FIELDS = {
    'gaussian': {'mean', 'variance'},
    'uniform': {'a', 'b'},
    'piecewise_constant': {'breakpoints', 'densities'},
}


@dataclass(frozen=True)
class FieldModel:
    """
    Single-site marginal law of an IID random field
    Parameters not used by the law keep their defaults
    """
    law: str
    mean: float = 0.0
    variance: float = 1.0
    a: float = 0.0
    b: float = 1.0
    breakpoints: Tuple[float, ...] = ()
    densities: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.law not in LAWS:
            raise InvalidInputError(f"unknown law {self.law!r}, expected one of {', '.join(LAWS)}")
        if self.law == 'gaussian':
            if not (math.isfinite(self.mean) and math.isfinite(self.variance)) or self.variance <= 0:
                raise InvalidInputError(f"gaussian law needs finite mean and variance > 0, got variance={self.variance}")
        elif self.law == 'uniform':
            if not (math.isfinite(self.a) and math.isfinite(self.b)) or self.a >= self.b:
                raise InvalidInputError(f"uniform law needs a < b, got a={self.a}, b={self.b}")
        else:
            bps = tuple(float(v) for v in self.breakpoints)
            dens = tuple(float(v) for v in self.densities)
            object.__setattr__(self, 'breakpoints', bps)
            object.__setattr__(self, 'densities', dens)
            if len(bps) < 2 or len(dens) != len(bps) - 1:
                raise InvalidInputError("piecewise law needs K+1 breakpoints and K densities")
            if any(not math.isfinite(v) for v in bps + dens):
                raise InvalidInputError("piecewise law parameters must be finite")
            if any(lo >= hi for lo, hi in zip(bps, bps[1:])):
                raise InvalidInputError("breakpoints must be strictly increasing")
            if any(p < 0 for p in dens):
                raise InvalidInputError("densities must be non-negative")
            mass = sum(p * (hi - lo) for p, lo, hi in zip(dens, bps, bps[1:]))
            if abs(mass - 1.0) > 1e-9:
                raise InvalidInputError(f"densities integrate to {mass}, not 1")

    @classmethod
    def gaussian(cls, mean: float = 0.0, variance: float = 1.0) -> 'FieldModel':
        return cls('gaussian', mean=float(mean), variance=float(variance))

    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0) -> 'FieldModel':
        return cls('uniform', a=float(a), b=float(b))

    @classmethod
    def piecewise_constant(cls, breakpoints: Sequence[float], densities: Sequence[float]) -> 'FieldModel':
        return cls('piecewise_constant', breakpoints=tuple(breakpoints), densities=tuple(densities))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def _cumulative(self) -> np.ndarray:
        bps = np.asarray(self.breakpoints)
        return np.concatenate(([0.0], np.cumsum(np.asarray(self.densities) * np.diff(bps))))

    def cdf(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.law == 'gaussian':
            return norm.cdf(t, loc=self.mean, scale=self.sigma)
        if self.law == 'uniform':
            return np.clip((t - self.a) / (self.b - self.a), 0.0, 1.0)
        return np.interp(t, self.breakpoints, self._cumulative())

    def ppf(self, u) -> np.ndarray:
        """Inverse CDF"""
        u = np.asarray(u, dtype=float)
        if self.law == 'gaussian':
            return norm.ppf(u, loc=self.mean, scale=self.sigma)
        if self.law == 'uniform':
            return self.a + u * (self.b - self.a)
        cum = self._cumulative()
        bps = np.asarray(self.breakpoints)
        dens = np.asarray(self.densities)
        k = np.clip(np.searchsorted(cum, u, side='right') - 1, 0, len(dens) - 1)
        # skip zero-density cells that searchsorted may land on
        live = np.flatnonzero(dens > 0)
        k = live[np.clip(np.searchsorted(live, k), 0, len(live) - 1)]
        return bps[k] + (u - cum[k]) / dens[k]

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """size IID draws; the i-th value is the i-th variate of the stream"""
        if self.law == 'gaussian':
            return self.mean + self.sigma * rng.standard_normal(size)
        if self.law == 'uniform':
            return rng.uniform(self.a, self.b, size)
        return self.ppf(rng.random(size))

    def continuity_modulus(self, s: float) -> float:
        """sup_t (F(t+s) - F(t)) of the marginal law"""
        if s < 0:
            raise InvalidInputError(f"s must be non-negative, got {s}")
        if self.law == 'gaussian':
            return float(2.0 * norm.cdf(s / (2.0 * self.sigma)) - 1.0)
        if self.law == 'uniform':
            return min(1.0, s / (self.b - self.a))
        # t -> F(t+s) - F(t) is piecewise linear with kinks at b_k and b_k - s
        bps = np.asarray(self.breakpoints)
        t = np.concatenate((bps, bps - s))
        return float(np.max(self.cdf(t + s) - self.cdf(t)))

    def max_density(self) -> float:
        if self.law == 'gaussian':
            return 1.0 / (self.sigma * math.sqrt(2.0 * math.pi))
        if self.law == 'uniform':
            return 1.0 / (self.b - self.a)
        return max(self.densities)

    def to_dict(self) -> Dict[str, Any]:
        if self.law == 'gaussian':
            return {'law': 'gaussian', 'mean': self.mean, 'variance': self.variance}
        if self.law == 'uniform':
            return {'law': 'uniform', 'a': self.a, 'b': self.b}
        return {'law': 'piecewise_constant', 'breakpoints': list(self.breakpoints),
                'densities': list(self.densities)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FieldModel':
        """Create from dictionary; fields foreign to the law are rejected"""
        if not isinstance(data, dict) or 'law' not in data:
            raise InvalidInputError("field model must be an object with a 'law' field")
        law = data['law']
        if law not in LAWS:
            raise InvalidInputError(f"unknown law {law!r}, expected one of {', '.join(LAWS)}")
        unknown = set(data) - _LAW_FIELDS[law] - {'law'}
        if unknown:
            raise InvalidInputError(f"unknown fields for {law} law: {sorted(unknown)}")
        try:
            if law == 'gaussian':
                return cls.gaussian(data.get('mean', 0.0), data.get('variance', 1.0))
            if law == 'uniform':
                return cls.uniform(data.get('a', 0.0), data.get('b', 1.0))
            return cls.piecewise_constant(data['breakpoints'], data['densities'])
        except InvalidInputError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"malformed {law} law: {e}") from e


@dataclass
class FieldSample:
    """
    One realization of V on a finite region
    Sites are held in lexicographic order, values[i] belongs to sites[i]
    """
    sites: Tuple[Point, ...]
    values: np.ndarray
    master_seed: int
    trial: int
    index: Dict[Point, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.sites) != len(self.values):
            raise InvalidInputError("field sample needs one value per site")
        if not self.index:
            self.index = {p: i for i, p in enumerate(self.sites)}

    @property
    def sample_id(self) -> str:
        return f"{self.master_seed}:{self.trial}"

    def __len__(self) -> int:
        return len(self.sites)

    def covers(self, sites: Iterable[Point]) -> bool:
        return all(p in self.index for p in sites)

    def rows(self, sites: Iterable[Point]) -> np.ndarray:
        """Row numbers of the given sites; CoverageError on the first missing one"""
        out = []
        for p in sites:
            i = self.index.get(p)
            if i is None:
                raise CoverageError(f"field sample {self.sample_id} does not cover site {p}")
            out.append(i)
        return np.asarray(out, dtype=np.intp)

    def value(self, site: Sequence[int]) -> float:
        return float(self.values[self.rows([as_point(site)])[0]])

    def values_at(self, sites: Iterable[Point]) -> np.ndarray:
        return self.values[self.rows(sites)]

    def shifted(self, Q: Parallelepiped, t: float) -> 'FieldSample':
        """Copy with V(x) + t on the sample sites inside Q"""
        rows = [i for i, p in enumerate(self.sites) if Q.contains(p)]
        values = self.values.copy()
        values[rows] += t
        return FieldSample(self.sites, values, self.master_seed, self.trial, self.index)

    def to_rows(self) -> List[List[float]]:
        return [list(p) + [float(v)] for p, v in zip(self.sites, self.values)]


@dataclass
class MeanFluctuationSplit:
    """V = xi + eta on Q, with sites of Q in lexicographic order"""
    Q: Parallelepiped
    xi: float
    sites: Tuple[Point, ...]
    eta: np.ndarray

    def eta_at(self, site: Sequence[int]) -> float:
        p = as_point(site)
        try:
            return float(self.eta[self.sites.index(p)])
        except ValueError:
            raise InvalidInputError(f"site {p} is not in Q") from None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'Q': self.Q.to_dict(),
            'xi': self.xi,
            'eta': [{'site': list(p), 'eta': float(e)} for p, e in zip(self.sites, self.eta)],
        }


@dataclass(frozen=True)
class CcmConstants:
    """
    Constants of the conditional-mean continuity condition:
    sup_t |F(t+s | F_Q) - F(t | F_Q)| <= C1 R^A1 s^b1 outside an event of
    probability at most C2 R^A2 s^b2. b2 = inf encodes an empty exceptional event.
    """
    C1: float
    A1: float
    b1: float
    C2: float
    A2: float
    b2: float
    fitted: bool = False
    R: Optional[int] = None

    def __post_init__(self):
        for name in ('C1', 'b1', 'C2', 'b2'):
            v = getattr(self, name)
            if not v > 0 or math.isnan(v):
                raise InvalidInputError(f"CCM constant {name} must be positive, got {v}")
        if self.A1 < 0 or self.A2 < 0:
            raise InvalidInputError("CCM exponents A1, A2 must be non-negative")

    @property
    def exceptional_never(self) -> bool:
        return math.isinf(self.b2)

    def modulus(self, s: float, R: float) -> float:
        return self.C1 * R ** self.A1 * s ** self.b1

    def exceptional_probability(self, s: float, R: float) -> float:
        if self.exceptional_never:
            return 0.0
        return self.C2 * R ** self.A2 * s ** self.b2

    def to_dict(self) -> Dict[str, Any]:
        return {
            'C1': self.C1, 'A1': self.A1, 'b1': self.b1,
            'C2': self.C2, 'A2': self.A2,
            'b2': 'never' if self.exceptional_never else self.b2,
            'fitted': self.fitted, 'R': self.R,
        }


@dataclass
class BinEstimate:
    """Monte Carlo estimate over one bin of the fluctuation half-range h"""
    h_lo: float
    h_hi: float
    count: int
    value: Optional[float]
    stderr: Optional[float]
    reference: Optional[float] = None
    xi_min: Optional[float] = None
    xi_max: Optional[float] = None
    undersampled: bool = False

    @property
    def h_center(self) -> float:
        return 0.5 * (self.h_lo + self.h_hi)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'h_lo': self.h_lo, 'h_hi': self.h_hi, 'count': self.count,
            'value': self.value, 'stderr': self.stderr, 'reference': self.reference,
            'xi_min': self.xi_min, 'xi_max': self.xi_max, 'undersampled': self.undersampled,
        }
