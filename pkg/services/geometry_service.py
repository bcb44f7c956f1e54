"""
Geometry Service - Deterministic geometry of N-particle configurations
Norms, distances, envelopes, projections, clusters, decoupling width and
weak-separability certificates
"""
import logging
from itertools import combinations, permutations
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.cluster.hierarchy import DisjointSet
from scipy.optimize import linear_sum_assignment

from models.errors import InvalidInputError
from models.geometry import (
    BoxUnion, CertificateReport, Cluster, ClusterDecomposition, Configuration,
    IndexSet, MultiCube, Occupancy, Parallelepiped, Point, SeparabilityCertificate,
    SeparatingLayer, as_point, index_set,
)
import config

logger = logging.getLogger(__name__)

PointSet = Iterable[Sequence[int]]


def _point_list(points: PointSet, what: str = 'point set') -> List[Point]:
    pts = [as_point(p) for p in points]
    if not pts:
        raise InvalidInputError(f"{what} must be non-empty")
    if len({len(p) for p in pts}) != 1:
        raise InvalidInputError(f"{what} mixes lattice dimensions")
    return pts


def _check_same_shape(x: Configuration, y: Configuration):
    if x.N != y.N or x.d != y.d:
        raise InvalidInputError(
            f"configurations differ in shape: N={x.N}, d={x.d} vs N={y.N}, d={y.d}"
        )


def _check_dimension(a: Sequence[Point], b: Sequence[Point]):
    if len(a[0]) != len(b[0]):
        raise InvalidInputError(f"dimension mismatch: d={len(a[0])} vs d={len(b[0])}")


def _check_scale(L: int, name: str = 'L'):
    if isinstance(L, bool) or int(L) != L or L < 0:
        raise InvalidInputError(f"{name} must be a non-negative integer, got {L!r}")


class GeometryService:
    """
    Configuration-space geometry
    All operations are pure functions of their (immutable) inputs
    """

    def __init__(self, max_particles: int = None):
        self.max_particles = max_particles or config.MAX_PARTICLES

    def _check_enumerable(self, N: int):
        if N > self.max_particles:
            raise InvalidInputError(
                f"N={N} exceeds the enumeration cap of {self.max_particles} particles"
            )

    # Norms and distances
    def max_norm(self, a: Union[Configuration, Sequence[int]],
                 b: Union[Configuration, Sequence[int], None] = None) -> int:
        """
        Max-norm |a - b|_inf over all coordinates (|a|_inf when b is omitted)
        Accepts two configurations or two lattice points
        """
        if isinstance(a, Configuration) or isinstance(b, Configuration):
            if not (isinstance(a, Configuration) and (b is None or isinstance(b, Configuration))):
                raise InvalidInputError("cannot mix configurations and lattice points")
            if b is not None:
                _check_same_shape(a, b)
                return max(self.max_norm(p, q) for p, q in zip(a, b))
            return max(self.max_norm(p) for p in a)
        p = as_point(a)
        if b is None:
            return max(abs(c) for c in p)
        q = as_point(b)
        if len(p) != len(q):
            raise InvalidInputError(f"dimension mismatch: d={len(p)} vs d={len(q)}")
        return max(abs(c - e) for c, e in zip(p, q))

    @staticmethod
    def _pair_distances(x: Configuration, y: Configuration) -> np.ndarray:
        xa = np.asarray(x.particles, dtype=np.int64)
        ya = np.asarray(y.particles, dtype=np.int64)
        return np.abs(xa[:, None, :] - ya[None, :, :]).max(axis=2)

    def sym_distance(self, x: Configuration, y: Configuration, method: str = 'assignment') -> int:
        """
        Symmetrized distance d_S(x, y) = min over tau of |tau(x) - y|_inf

        'assignment' solves the bottleneck assignment exactly: the smallest
        threshold admitting a perfect matching among pairs within it.
        'enumerate' scans all N! relabelings.
        """
        _check_same_shape(x, y)
        dist = self._pair_distances(x, y)
        if method == 'enumerate':
            self._check_enumerable(x.N)
            cols = np.arange(x.N)
            return int(min(dist[list(tau), cols].max() for tau in permutations(range(x.N))))
        if method != 'assignment':
            raise InvalidInputError(f"unknown d_S method {method!r}")

        thresholds = np.unique(dist)
        lo, hi = 0, len(thresholds) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            blocked = (dist > thresholds[mid]).astype(np.int64)
            rows, cols = linear_sum_assignment(blocked)
            if blocked[rows, cols].sum() == 0:
                hi = mid
            else:
                lo = mid + 1
        return int(thresholds[lo])

    def rho_distance(self, A: PointSet, B: PointSet) -> int:
        """rho(A, B): minimal max-norm distance between points of A and B"""
        a = _point_list(A, 'first point set')
        b = _point_list(B, 'second point set')
        _check_dimension(a, b)
        aa = np.asarray(a, dtype=np.int64)
        bb = np.asarray(b, dtype=np.int64)
        return int(np.abs(aa[:, None, :] - bb[None, :, :]).max(axis=2).min())

    def canonical_envelope(self, X: PointSet) -> Parallelepiped:
        """Minimal axis-aligned box Q(X) containing X"""
        pts = np.asarray(_point_list(X), dtype=np.int64)
        return Parallelepiped(tuple(int(v) for v in pts.min(axis=0)),
                              tuple(int(v) for v in pts.max(axis=0)))

    def dch_distance(self, X: PointSet, Y: PointSet) -> int:
        """d_CH(X, Y) = rho(Q(X), Q(Y)); zero whenever the envelopes meet"""
        qx = self.canonical_envelope(X)
        qy = self.canonical_envelope(Y)
        if qx.d != qy.d:
            raise InvalidInputError(f"dimension mismatch: d={qx.d} vs d={qy.d}")
        return qx.gap(qy)

    def separating_layer(self, X: PointSet, Y: PointSet, R: int) -> Optional[SeparatingLayer]:
        """
        Coordinate slab of width R separating X from Y, or None
        Exists iff d_CH(X, Y) >= R
        """
        if isinstance(R, bool) or int(R) != R or R < 1:
            raise InvalidInputError(f"layer width R must be an integer >= 1, got {R!r}")
        qx = self.canonical_envelope(X)
        qy = self.canonical_envelope(Y)
        if qx.d != qy.d:
            raise InvalidInputError(f"dimension mismatch: d={qx.d} vs d={qy.d}")
        for axis in range(qx.d):
            if qy.lo[axis] - qx.hi[axis] >= R:
                return SeparatingLayer(axis, qx.hi[axis], qx.hi[axis] + R, first_below=True)
            if qx.lo[axis] - qy.hi[axis] >= R:
                return SeparatingLayer(axis, qy.hi[axis], qy.hi[axis] + R, first_below=False)
        return None

    # Projections
    @staticmethod
    def _check_indices(N: int, J: Iterable[int]) -> IndexSet:
        J = index_set(J)
        bad = sorted(j for j in J if not 1 <= j <= N)
        if bad:
            raise InvalidInputError(f"indices {bad} outside [[1,{N}]]")
        return J

    def projections(self, x: Configuration, J: Iterable[int]) -> frozenset:
        """Pi_J x = {x_j : j in J}; the empty index set projects to the empty set"""
        J = self._check_indices(x.N, J)
        return frozenset(x[j] for j in J)

    def cube_projection(self, C: MultiCube, J: Iterable[int]) -> BoxUnion:
        """Pi_J C_L(u) as the union of the 1-particle boxes C_L(u_j), j in J"""
        J = self._check_indices(C.N, J)
        return BoxUnion(tuple(C.particle_box(j) for j in sorted(J)))

    # Clusters
    def cluster_decompose(self, x: Configuration, R: int) -> ClusterDecomposition:
        """
        R-clusters of x: the boxes C_R(x_i) are merged while the envelopes of
        their groups intersect; each resulting group is one cluster.

        R = 0 is accepted (clusters are then groups of coinciding points).
        """
        _check_scale(R, 'R')
        boxes = [Parallelepiped.cube(p, R) for p in x]
        groups = DisjointSet(range(x.N))

        merged = True
        while merged:
            merged = False
            subsets = sorted((sorted(s) for s in groups.subsets()), key=lambda s: s[0])
            envelopes = []
            for members in subsets:
                env = boxes[members[0]]
                for i in members[1:]:
                    env = env.hull(boxes[i])
                envelopes.append(env)
            for a, b in combinations(range(len(subsets)), 2):
                if envelopes[a].intersects(envelopes[b]):
                    groups.merge(subsets[a][0], subsets[b][0])
                    merged = True
                    break

        clusters = []
        for members in sorted((sorted(s) for s in groups.subsets()), key=lambda s: s[0]):
            clusters.append(Cluster(
                indices=index_set(i + 1 for i in members),
                envelope=self.canonical_envelope(x.particles[i] for i in members),
            ))
        logger.debug(f"{x.N} particles -> {len(clusters)} clusters at R={R}")
        return ClusterDecomposition(R=R, clusters=tuple(clusters))

    def _bipartitions(self, N: int):
        """Non-trivial bipartitions (J, J^c), each unordered pair once"""
        self._check_enumerable(N)
        rest = range(2, N + 1)
        everything = frozenset(range(1, N + 1))
        for size in range(0, N - 1):
            for extra in combinations(rest, size):
                J = frozenset((1,) + extra)
                yield J, everything - J

    def decoupling_width(self, x: Configuration) -> int:
        """D(x): largest d_CH between complementary non-empty subconfigurations"""
        if x.N < 2:
            raise InvalidInputError("decoupling width needs N >= 2")
        return max(
            self.dch_distance([x[j] for j in J], [x[j] for j in Jc])
            for J, Jc in self._bipartitions(x.N)
        )

    def decoupling_width_cube(self, C: MultiCube) -> int:
        """D(C_L(x)): as decoupling_width, between unions of 1-particle cubes"""
        if C.N < 2:
            raise InvalidInputError("decoupling width needs N >= 2")
        width = 0
        for J, Jc in self._bipartitions(C.N):
            qa = self.cube_projection(C, J).envelope()
            qb = self.cube_projection(C, Jc).envelope()
            width = max(width, qa.gap(qb))
        return width

    # Weak separability
    def occupancy_numbers(self, x: Configuration, y: Configuration, L: int) -> List[Occupancy]:
        """
        Boxes Q_i = Q(union of C_L(x_k) over the 2L-cluster i of x) with the
        particle counts n_i(x) = |{j : x_j in Q_i}| and n_i(y) likewise
        """
        _check_same_shape(x, y)
        _check_scale(L)
        table = []
        for cluster in self.cluster_decompose(x, 2 * L).clusters:
            Q = cluster.envelope.expanded(L)
            table.append(Occupancy(
                cluster=cluster.indices,
                Q=Q,
                n_x=sum(1 for p in x if Q.contains(p)),
                n_y=sum(1 for p in y if Q.contains(p)),
            ))
        return table

    def _cluster_certificates(self, first: Configuration, second: Configuration, L: int, source: str):
        for occ in self.occupancy_numbers(first, second, L):
            if occ.n_x > occ.n_y:
                yield SeparabilityCertificate(
                    Q=occ.Q,
                    J1=index_set(j for j in range(1, first.N + 1) if occ.Q.contains(first[j])),
                    J2=index_set(j for j in range(1, second.N + 1) if occ.Q.contains(second[j])),
                    L=L,
                    source=source,
                    method='cluster',
                )

    def _exhaustive_certificate(self, x: Configuration, y: Configuration,
                                L: int) -> Optional[SeparabilityCertificate]:
        """
        Scan envelopes of subsets of particle cubes. Complete: a valid Q can be
        shrunk to the envelope of the cubes it contains without breaking any clause.
        """
        points = sorted(set(x.particles) | set(y.particles))
        cubes = {p: Parallelepiped.cube(p, L) for p in points}
        seen = set()
        candidates = []
        for size in range(1, len(points) + 1):
            for subset in combinations(points, size):
                Q = self.canonical_envelope(subset).expanded(L)
                if Q in seen:
                    continue
                seen.add(Q)
                if Q.diameter > 2 * x.N * L:
                    continue
                if any(Q.intersects(c) and not Q.contains_box(c) for c in cubes.values()):
                    continue
                n_x = sum(1 for p in x if Q.contains(p))
                n_y = sum(1 for p in y if Q.contains(p))
                if n_x != n_y:
                    candidates.append((Q.diameter, 0 if n_x > n_y else 1, Q.lo, Q.hi, Q))
        if not candidates:
            return None
        _, flag, _, _, Q = min(candidates, key=lambda c: c[:4])
        first, second, source = (x, y, 'x') if flag == 0 else (y, x, 'y')
        return SeparabilityCertificate(
            Q=Q,
            J1=index_set(j for j in range(1, first.N + 1) if Q.contains(first[j])),
            J2=index_set(j for j in range(1, second.N + 1) if Q.contains(second[j])),
            L=L,
            source=source,
            method='exhaustive',
        )

    def weak_separability(self, x: Configuration, y: Configuration,
                          L: int) -> Optional[SeparabilityCertificate]:
        """
        Certificate that C_L(x) is weakly separable from C_L(y) (or vice versa)

        The cluster construction runs first: 2L-clusters of x give boxes Q_i and
        the first box with n_i(x) > n_i(y) is tried; then the same with x and y
        swapped. Only certificates passing every clause (a)-(e) are returned;
        if the cluster boxes fail, an exhaustive scan decides.
        """
        _check_same_shape(x, y)
        _check_scale(L)
        for first, second, source in ((x, y, 'x'), (y, x, 'y')):
            for cert in self._cluster_certificates(first, second, L, source):
                report = self.validate_certificate(cert, x, y, L)
                if report.valid:
                    logger.debug(f"Certificate from {source}-clusters: Q={cert.Q}, n1={cert.n1}, n2={cert.n2}")
                    return cert
                logger.debug(f"Cluster box {cert.Q} rejected, clause ({report.clause})")

        self._check_enumerable(2 * x.N)
        cert = self._exhaustive_certificate(x, y, L)
        if cert is None:
            logger.info(f"No separability certificate at L={L}")
        return cert

    def validate_certificate(self, cert: SeparabilityCertificate, x: Configuration,
                             y: Configuration, L: int) -> CertificateReport:
        """
        Exact box-arithmetic check of the certificate clauses:
        (c) n1 > n2; (a) J1-cubes of the first and J2-cubes of the second lie in Q;
        (b) the other cubes of the second miss Q; (d) the other cubes of the
        first miss Q; (e) diam(Q) <= 2NL
        """
        _check_same_shape(x, y)
        _check_scale(L)
        if cert.source not in ('x', 'y'):
            return CertificateReport(False, 'source', f"unknown certificate source {cert.source!r}")
        first, second = (x, y) if cert.source == 'x' else (y, x)
        everyone = frozenset(range(1, x.N + 1))
        if not (cert.J1 <= everyone and cert.J2 <= everyone):
            return CertificateReport(False, 'indices', f"index sets must lie in [[1,{x.N}]]")
        if cert.Q.d != x.d:
            return CertificateReport(False, 'indices', f"Q has dimension {cert.Q.d}, configurations {x.d}")

        if cert.n1 <= cert.n2:
            return CertificateReport(False, 'c', f"|J1| = {cert.n1} is not larger than |J2| = {cert.n2}")

        for label, conf, J in (('first', first, cert.J1), ('second', second, cert.J2)):
            for j in sorted(J):
                box = Parallelepiped.cube(conf[j], L)
                if not cert.Q.contains_box(box):
                    return CertificateReport(False, 'a', f"cube of particle {j} of the {label} configuration is not inside Q",
                                             {'particle': j, 'side': label, 'cube': box.to_dict()})

        for clause, label, conf, J in (('b', 'second', second, cert.J2), ('d', 'first', first, cert.J1)):
            for j in sorted(everyone - J):
                box = Parallelepiped.cube(conf[j], L)
                if cert.Q.intersects(box):
                    return CertificateReport(False, clause, f"cube of particle {j} of the {label} configuration meets Q",
                                             {'particle': j, 'side': label, 'cube': box.to_dict()})

        if cert.Q.diameter > 2 * x.N * L:
            return CertificateReport(False, 'e', f"diam(Q) = {cert.Q.diameter} exceeds 2NL = {2 * x.N * L}")

        return CertificateReport(True)

    def cube_distance(self, a: MultiCube, b: MultiCube) -> int:
        """Max-norm distance between two cubes in Z^{Nd}"""
        _check_same_shape(a.center, b.center)
        return max(0, self.max_norm(a.center, b.center) - a.radius - b.radius)
