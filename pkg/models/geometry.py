"""
Geometry Models - Configurations, lattice boxes, clusters and certificates
"""
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from models.errors import InvalidInputError

Point = Tuple[int, ...]
IndexSet = FrozenSet[int]


def as_point(coords: Iterable[Any]) -> Point:
    """Coerce a coordinate sequence to an integer lattice point"""
    if isinstance(coords, (str, bytes)):
        raise InvalidInputError(f"a lattice point is an array of integers, got {coords!r}")
    try:
        values = list(coords)
    except TypeError:
        raise InvalidInputError(f"a lattice point is an array of integers, got {coords!r}") from None
    point = []
    for c in values:
        try:
            ok = not isinstance(c, (bool, str)) and int(c) == c
        except (TypeError, ValueError, OverflowError):
            ok = False
        if not ok:
            raise InvalidInputError(f"lattice coordinates must be integers, got {c!r}")
        point.append(int(c))
    if not point:
        raise InvalidInputError("lattice points need at least one coordinate")
    return tuple(point)


def index_set(indices: Iterable[int]) -> IndexSet:
    return frozenset(int(i) for i in indices)


@dataclass(frozen=True)
class Configuration:
    """
    Ordered N-tuple of lattice points in Z^d
    Particles are distinguishable: the order of the tuple is significant
    """
    particles: Tuple[Point, ...]

    def __post_init__(self):
        if len(self.particles) < 1:
            raise InvalidInputError("a configuration needs at least one particle")
        points = tuple(as_point(p) for p in self.particles)
        dims = {len(p) for p in points}
        if len(dims) != 1:
            raise InvalidInputError(f"particles of one configuration must share the dimension, got {sorted(dims)}")
        object.__setattr__(self, 'particles', points)

    @property
    def N(self) -> int:
        return len(self.particles)

    @property
    def d(self) -> int:
        return len(self.particles[0])

    def __getitem__(self, j: int) -> Point:
        """1-based particle access, as in [[1,N]]"""
        if not 1 <= j <= self.N:
            raise InvalidInputError(f"particle index {j} outside [[1,{self.N}]]")
        return self.particles[j - 1]

    def __iter__(self) -> Iterator[Point]:
        return iter(self.particles)

    def __len__(self) -> int:
        return self.N

    def support(self) -> FrozenSet[Point]:
        return frozenset(self.particles)

    def permuted(self, tau: Sequence[int]) -> 'Configuration':
        """tau(x) = (x_{tau(1)}, ..., x_{tau(N)}) with a 0-based permutation tau"""
        if sorted(tau) != list(range(self.N)):
            raise InvalidInputError(f"{list(tau)} is not a permutation of {self.N} particles")
        return Configuration(tuple(self.particles[t] for t in tau))

    def shifted(self, offset: Sequence[int]) -> 'Configuration':
        return Configuration(tuple(tuple(c + o for c, o in zip(p, offset)) for p in self.particles))

    def to_list(self) -> List[List[int]]:
        return [list(p) for p in self.particles]

    @classmethod
    def from_list(cls, data: Any) -> 'Configuration':
        """Create from a JSON array of integer arrays"""
        if not isinstance(data, (list, tuple)) or not data:
            raise InvalidInputError("a configuration is a non-empty array of integer arrays")
        particles = []
        for p in data:
            if not isinstance(p, (list, tuple)):
                raise InvalidInputError(f"particle {p!r} is not an array of integers")
            particles.append(as_point(p))
        return cls(tuple(particles))


@dataclass(frozen=True)
class Parallelepiped:
    """
    Axis-aligned lattice box [lo_1, hi_1] x ... x [lo_d, hi_d], bounds inclusive
    """
    lo: Point
    hi: Point

    def __post_init__(self):
        lo, hi = as_point(self.lo), as_point(self.hi)
        if len(lo) != len(hi):
            raise InvalidInputError("box bounds must have equal dimension")
        if any(a > b for a, b in zip(lo, hi)):
            raise InvalidInputError(f"box bounds out of order: lo={lo}, hi={hi}")
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @classmethod
    def cube(cls, center: Point, radius: int) -> 'Parallelepiped':
        """The 1-particle cube C_L(center)"""
        return cls(tuple(c - radius for c in center), tuple(c + radius for c in center))

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> int:
        return max(b - a for a, b in zip(self.lo, self.hi))

    @property
    def cardinality(self) -> int:
        count = 1
        for a, b in zip(self.lo, self.hi):
            count *= b - a + 1
        return count

    def contains(self, point: Point) -> bool:
        return all(a <= c <= b for a, b, c in zip(self.lo, self.hi, point))

    def contains_box(self, other: 'Parallelepiped') -> bool:
        return all(a <= c and e <= b for a, b, c, e in zip(self.lo, self.hi, other.lo, other.hi))

    def gap(self, other: 'Parallelepiped') -> int:
        """Max-norm distance rho between the two boxes (0 if they intersect)"""
        return max(max(0, c - b, a - e) for a, b, c, e in zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other: 'Parallelepiped') -> bool:
        return self.gap(other) == 0

    def hull(self, other: 'Parallelepiped') -> 'Parallelepiped':
        """Canonical envelope of the union of two boxes"""
        return Parallelepiped(
            tuple(min(a, c) for a, c in zip(self.lo, other.lo)),
            tuple(max(b, e) for b, e in zip(self.hi, other.hi)),
        )

    def expanded(self, radius: int) -> 'Parallelepiped':
        return Parallelepiped(tuple(a - radius for a in self.lo), tuple(b + radius for b in self.hi))

    def points(self) -> Iterator[Point]:
        """Lattice points in lexicographic order"""
        return product(*(range(a, b + 1) for a, b in zip(self.lo, self.hi)))

    def to_dict(self) -> Dict[str, Any]:
        return {'lo': list(self.lo), 'hi': list(self.hi), 'diameter': self.diameter}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Parallelepiped':
        return cls(tuple(data['lo']), tuple(data['hi']))


@dataclass(frozen=True)
class BoxUnion:
    """
    Finite union of axis boxes in Z^d, used for cube projections
    The empty union stands for the empty projection
    """
    boxes: Tuple[Parallelepiped, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.boxes

    def contains(self, point: Point) -> bool:
        return any(box.contains(point) for box in self.boxes)

    def intersects(self, box: Parallelepiped) -> bool:
        return any(b.intersects(box) for b in self.boxes)

    def envelope(self) -> Optional[Parallelepiped]:
        if self.is_empty:
            return None
        env = self.boxes[0]
        for box in self.boxes[1:]:
            env = env.hull(box)
        return env

    def points(self) -> FrozenSet[Point]:
        return frozenset(p for box in self.boxes for p in box.points())


@dataclass(frozen=True)
class MultiCube:
    """
    Cube C_L(u) = {x in Z^{Nd} : |x - u|_inf <= L} in the N-particle space
    """
    center: Configuration
    radius: int

    def __post_init__(self):
        if int(self.radius) != self.radius or self.radius < 0:
            raise InvalidInputError(f"cube radius must be a non-negative integer, got {self.radius!r}")

    @property
    def N(self) -> int:
        return self.center.N

    @property
    def d(self) -> int:
        return self.center.d

    @property
    def cardinality(self) -> int:
        return (2 * self.radius + 1) ** (self.N * self.d)

    def particle_box(self, j: int) -> Parallelepiped:
        """Projection Pi_j C_L(u) = C_L(u_j), 1-based j"""
        return Parallelepiped.cube(self.center[j], self.radius)

    def to_dict(self) -> Dict[str, Any]:
        return {'center': self.center.to_list(), 'L': self.radius}


@dataclass(frozen=True)
class SeparatingLayer:
    """
    Slab between the hyperplanes z_axis = lower and z_axis = upper (upper - lower = R)
    The first set lies on the side {z_axis <= lower} iff first_below
    """
    axis: int
    lower: int
    upper: int
    first_below: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'axis': self.axis, 'lower': self.lower, 'upper': self.upper,
                'first_below': self.first_below}


@dataclass(frozen=True)
class Cluster:
    """An R-cluster: index set of its particles and the envelope of their points"""
    indices: IndexSet
    envelope: Parallelepiped

    @property
    def diameter(self) -> int:
        return self.envelope.diameter

    def to_dict(self) -> Dict[str, Any]:
        return {'indices': sorted(self.indices), 'envelope': self.envelope.to_dict()}


@dataclass(frozen=True)
class ClusterDecomposition:
    """R-clusters of a configuration, sorted by smallest member index"""
    R: int
    clusters: Tuple[Cluster, ...]

    def index_sets(self) -> List[IndexSet]:
        return [c.indices for c in self.clusters]

    def to_dict(self) -> Dict[str, Any]:
        return {'R': self.R, 'clusters': [c.to_dict() for c in self.clusters]}


@dataclass(frozen=True)
class Occupancy:
    """Occupancy numbers n_i(x), n_i(y) of one cluster box Q_i"""
    cluster: IndexSet
    Q: Parallelepiped
    n_x: int
    n_y: int

    def to_dict(self) -> Dict[str, Any]:
        return {'cluster': sorted(self.cluster), 'Q': self.Q.to_dict(), 'n_x': self.n_x, 'n_y': self.n_y}


@dataclass(frozen=True)
class SeparabilityCertificate:
    """
    Witness (Q, J1, J2) that C_L(first) is weakly separable from C_L(second)

    source == 'x' means the x-cube is separated from the y-cube (J1 indexes x,
    J2 indexes y); source == 'y' means the roles are swapped.
    """
    Q: Parallelepiped
    J1: IndexSet
    J2: IndexSet
    L: int
    source: str = 'x'
    method: str = 'cluster'

    @property
    def n1(self) -> int:
        return len(self.J1)

    @property
    def n2(self) -> int:
        return len(self.J2)

    def occupancy_for(self, side: str) -> int:
        """Number of particles of configuration `side` ('x' or 'y') held in Q"""
        return self.n1 if side == self.source else self.n2

    def to_dict(self) -> Dict[str, Any]:
        return {
            'Q': self.Q.to_dict(),
            'J1': sorted(self.J1),
            'J2': sorted(self.J2),
            'n1': self.n1,
            'n2': self.n2,
            'L': self.L,
            'source': self.source,
            'method': self.method,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SeparabilityCertificate':
        return cls(
            Q=Parallelepiped.from_dict(data['Q']),
            J1=index_set(data['J1']),
            J2=index_set(data['J2']),
            L=int(data['L']),
            source=data.get('source', 'x'),
            method=data.get('method', 'cluster'),
        )


@dataclass
class CertificateReport:
    """Outcome of certificate validation; clause names the first violated condition"""
    valid: bool
    clause: Optional[str] = None
    message: str = ''
    details: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.valid

    def to_dict(self) -> Dict[str, Any]:
        return {'valid': self.valid, 'clause': self.clause, 'message': self.message,
                'details': self.details}
