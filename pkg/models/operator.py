"""
Operator Models - Interactions, cube bases, assembled Hamiltonians and spectra
"""
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import InvalidInputError
from models.geometry import Configuration, MultiCube, Point, SeparabilityCertificate

INTERACTION_KINDS = ('none', 'pairwise_contact', 'pairwise_table', 'custom_bounded')


@dataclass(frozen=True)
class InteractionSpec:
    """
    Interaction potential U on N-particle configurations

    - none: U = 0
    - pairwise_contact: u0 per pair (i < j) with |x_i - x_j|_inf <= r0
    - pairwise_table: values[r] per pair at distance r, 0 beyond the table
    - custom_bounded: func(configuration tuple) -> float, |func| <= bound enforced
    """
    kind: str = 'none'
    u0: float = 0.0
    r0: int = 0
    values: Tuple[float, ...] = ()
    func: Optional[Callable[[Tuple[Point, ...]], float]] = field(default=None, compare=False)
    bound: Optional[float] = None
    symmetric: bool = True

    def __post_init__(self):
        if self.kind not in INTERACTION_KINDS:
            raise InvalidInputError(f"unknown interaction kind {self.kind!r}")
        if self.kind == 'pairwise_contact' and (int(self.r0) != self.r0 or self.r0 < 0):
            raise InvalidInputError(f"contact range r0 must be a non-negative integer, got {self.r0!r}")
        if self.kind == 'pairwise_table':
            object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
            if not self.values:
                raise InvalidInputError("pairwise table needs at least one value")
        if self.kind == 'custom_bounded':
            if not callable(self.func):
                raise InvalidInputError("custom interaction needs a callable")
            if self.bound is None or not self.bound >= 0:
                raise InvalidInputError("custom interaction needs a non-negative bound")

    @classmethod
    def contact(cls, u0: float, r0: int = 0) -> 'InteractionSpec':
        return cls('pairwise_contact', u0=float(u0), r0=int(r0))

    @classmethod
    def table(cls, values: Sequence[float]) -> 'InteractionSpec':
        return cls('pairwise_table', values=tuple(values))

    @classmethod
    def custom(cls, func: Callable, bound: float, symmetric: bool = False) -> 'InteractionSpec':
        return cls('custom_bounded', func=func, bound=float(bound), symmetric=symmetric)

    @property
    def is_custom(self) -> bool:
        return self.kind == 'custom_bounded'

    def sup_bound(self, N: int) -> float:
        """Bound on |U| for N particles"""
        pairs = N * (N - 1) // 2
        if self.kind == 'none':
            return 0.0
        if self.kind == 'pairwise_contact':
            return abs(self.u0) * pairs
        if self.kind == 'pairwise_table':
            return max(abs(v) for v in self.values) * pairs
        return float(self.bound)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """
        U on a batch of configurations, points shaped (M, N, d)
        """
        points = np.asarray(points)
        M, N = points.shape[0], points.shape[1]
        if self.kind == 'none':
            return np.zeros(M)
        if self.kind == 'custom_bounded':
            out = np.empty(M)
            for i in range(M):
                out[i] = float(self.func(tuple(tuple(int(c) for c in p) for p in points[i])))
            worst = float(np.max(np.abs(out))) if M else 0.0
            if worst > self.bound:
                raise InvalidInputError(f"custom interaction reached |U| = {worst}, above its bound {self.bound}")
            return out

        out = np.zeros(M)
        table = np.asarray(self.values) if self.kind == 'pairwise_table' else None
        for i, j in combinations(range(N), 2):
            r = np.abs(points[:, i, :] - points[:, j, :]).max(axis=1)
            if self.kind == 'pairwise_contact':
                out += np.where(r <= self.r0, self.u0, 0.0)
            else:
                inside = r < len(table)
                out += np.where(inside, table[np.minimum(r, len(table) - 1)], 0.0)
        return out

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'kind': self.kind, 'symmetric': self.symmetric}
        if self.kind == 'pairwise_contact':
            data.update(u0=self.u0, r0=self.r0)
        elif self.kind == 'pairwise_table':
            data['values'] = list(self.values)
        elif self.kind == 'custom_bounded':
            data.update(bound=self.bound, func=getattr(self.func, '__name__', repr(self.func)))
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'InteractionSpec':
        """Create from dictionary; custom interactions exist only in code"""
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise InvalidInputError("interaction must be an object")
        kind = data.get('kind', 'none')
        allowed = {'none': set(), 'pairwise_contact': {'u0', 'r0'},
                   'pairwise_table': {'values'}}.get(kind)
        if allowed is None:
            raise InvalidInputError(f"interaction kind {kind!r} cannot be loaded from a config file")
        unknown = set(data) - allowed - {'kind', 'symmetric'}
        if unknown:
            raise InvalidInputError(f"unknown fields for {kind} interaction: {sorted(unknown)}")
        symmetric = bool(data.get('symmetric', True))
        try:
            if kind == 'pairwise_contact':
                return cls('pairwise_contact', u0=float(data.get('u0', 0.0)), r0=int(data.get('r0', 0)),
                           symmetric=symmetric)
            if kind == 'pairwise_table':
                return cls('pairwise_table', values=tuple(data.get('values', ())), symmetric=symmetric)
        except (TypeError, ValueError) as e:
            raise InvalidInputError(f"malformed {kind} interaction: {e}") from e
        return cls(symmetric=symmetric)


@dataclass
class CubeBasis:
    """
    Lexicographic enumeration of C_L(u) in Z^{Nd}
    points[i] is the i-th configuration, shaped (N, d)
    """
    cube: MultiCube
    points: np.ndarray

    @property
    def dimension(self) -> int:
        return self.points.shape[0]

    @property
    def shape(self) -> Tuple[int, ...]:
        return (2 * self.cube.radius + 1,) * (self.cube.N * self.cube.d)

    def index_of(self, x: Configuration) -> int:
        center = np.asarray(self.cube.center.particles)
        offset = np.asarray(x.particles) - center + self.cube.radius
        if x.N != self.cube.N or x.d != self.cube.d or offset.min() < 0 or offset.max() > 2 * self.cube.radius:
            raise InvalidInputError(f"{x.to_list()} is not in the cube")
        return int(np.ravel_multi_index(tuple(offset.ravel()), self.shape))

    def configuration(self, i: int) -> Configuration:
        if not 0 <= i < self.dimension:
            raise InvalidInputError(f"basis index {i} outside [0, {self.dimension})")
        return Configuration(tuple(tuple(int(c) for c in p) for p in self.points[i]))

    def sites(self) -> List[Point]:
        """Lattice sites touched by the cube: the union of the 1-particle cubes"""
        found = set()
        for j in range(1, self.cube.N + 1):
            found.update(self.cube.particle_box(j).points())
        return sorted(found)


@dataclass
class AssembledOperator:
    """Dense real symmetric matrix of H on a cube with its basis and provenance"""
    basis: CubeBasis
    matrix: np.ndarray
    interaction: InteractionSpec
    sample_id: str

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def metadata(self) -> Dict[str, Any]:
        return {
            'u': self.basis.cube.center.to_list(),
            'L': self.basis.cube.radius,
            'N': self.basis.cube.N,
            'd': self.basis.cube.d,
            'dimension': self.dimension,
            'interaction': self.interaction.to_dict(),
            'field_sample': self.sample_id,
        }


@dataclass
class Spectrum:
    """Eigenvalues sorted ascending with multiplicity"""
    eigenvalues: np.ndarray

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def shifted(self, t: float) -> 'Spectrum':
        return Spectrum(self.eigenvalues + t)

    def to_rows(self) -> List[List[float]]:
        return [[i, float(v)] for i, v in enumerate(self.eigenvalues)]


@dataclass
class ShiftReport:
    """Result of the spectral shift check for one t"""
    t: float
    n_x: int
    n_y: int
    max_deviation_x: float
    max_deviation_y: float
    tolerance: float
    certificate: SeparabilityCertificate

    @property
    def max_deviation(self) -> float:
        return max(self.max_deviation_x, self.max_deviation_y)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t,
            'n_x': self.n_x,
            'n_y': self.n_y,
            'expected_shift_x': self.n_x * self.t,
            'expected_shift_y': self.n_y * self.t,
            'max_deviation_x': self.max_deviation_x,
            'max_deviation_y': self.max_deviation_y,
            'passed': self.passed,
        }
