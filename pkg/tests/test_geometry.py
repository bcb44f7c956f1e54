"""
Test Suite for configuration geometry
Run with: pytest tests/test_geometry.py -v
"""
import pytest
from itertools import combinations, permutations, product
from pathlib import Path
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from models.errors import InvalidInputError
from models.geometry import (
    BoxUnion, Configuration, MultiCube, Parallelepiped, SeparabilityCertificate, index_set,
)
from services.geometry_service import GeometryService


def conf(*particles):
    """Configuration from scalars (d=1) or tuples"""
    return Configuration(tuple((p,) if isinstance(p, int) else tuple(p) for p in particles))


def configurations(N, d, lo=-50, hi=50):
    point = st.tuples(*[st.integers(lo, hi)] * d)
    return st.lists(point, min_size=N, max_size=N).map(lambda ps: Configuration(tuple(ps)))


@st.composite
def config_pairs(draw, max_n=4, max_d=2, lo=-20, hi=20):
    N = draw(st.integers(1, max_n))
    d = draw(st.integers(1, max_d))
    return draw(configurations(N, d, lo, hi)), draw(configurations(N, d, lo, hi))


def brute_sym_distance(x, y):
    return min(max(max(abs(a - b) for a, b in zip(x.particles[t], q)) for t, q in zip(tau, y.particles))
               for tau in permutations(range(x.N)))


def slab_oracle(X, Y, R):
    """Exhaustive search over coordinate slabs of width R"""
    d = len(X[0])
    for axis in range(d):
        coords = [p[axis] for p in X] + [p[axis] for p in Y]
        for lower in range(min(coords) - R, max(coords) + 1):
            upper = lower + R
            if all(p[axis] <= lower for p in X) and all(q[axis] >= upper for q in Y):
                return True
            if all(q[axis] <= lower for q in Y) and all(p[axis] >= upper for p in X):
                return True
    return False


@pytest.fixture
def geometry():
    return GeometryService(max_particles=8)


class TestConfiguration:
    """Test configuration and box models"""

    def test_one_based_access(self):
        x = conf(0, 5, 10)
        assert x[1] == (0,)
        assert x[3] == (10,)
        with pytest.raises(InvalidInputError):
            x[0]

    def test_rejects_mixed_dimensions(self):
        with pytest.raises(InvalidInputError):
            Configuration(((0,), (1, 2)))

    def test_rejects_non_integer_coordinates(self):
        with pytest.raises(InvalidInputError):
            Configuration.from_list([[0.5]])
        with pytest.raises(InvalidInputError):
            Configuration.from_list([["a"]])

    def test_box_bounds_validated(self):
        with pytest.raises(InvalidInputError):
            Parallelepiped((3,), (1,))

    def test_box_points_lexicographic(self):
        box = Parallelepiped((0, 0), (1, 1))
        assert list(box.points()) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert box.cardinality == 4

    def test_certificate_round_trip_dict(self):
        cert = SeparabilityCertificate(Parallelepiped((-1,), (1,)), index_set([1, 2]), index_set([1]), L=1)
        again = SeparabilityCertificate.from_dict(cert.to_dict())
        assert again == cert
        assert again.n1 == 2 and again.n2 == 1


class TestNorms:
    """Test max-norm and distances"""

    def test_max_norm_examples(self, geometry):
        assert geometry.max_norm((0, 0), (0, 0)) == 0
        assert geometry.max_norm((3, -1), (0, 2)) == 3

    @given(x=configurations(3, 2), L=st.integers(0, 10))
    def test_max_norm_translation(self, x, L):
        geometry = GeometryService()
        assert geometry.max_norm(x, x.shifted((L, L))) == L

    def test_max_norm_dimension_mismatch(self, geometry):
        with pytest.raises(InvalidInputError):
            geometry.max_norm((0, 0), (0,))
        with pytest.raises(InvalidInputError):
            geometry.max_norm(conf(0, 1), conf(0))

    def test_sym_distance_example(self, geometry):
        assert geometry.sym_distance(conf(0, 0, 10), conf(0, 10, 10)) == 10
        assert geometry.sym_distance(conf(0, 0, 10), conf(0, 10, 10), method='enumerate') == 10

    def test_sym_distance_identity(self, geometry):
        x = conf((1, 2), (3, 4), (-5, 0))
        assert geometry.sym_distance(x, x) == 0

    @settings(max_examples=200, deadline=None)
    @given(pair=config_pairs())
    def test_sym_distance_matches_brute_force(self, pair):
        x, y = pair
        geometry = GeometryService()
        assert geometry.sym_distance(x, y) == brute_sym_distance(x, y)

    @settings(max_examples=100, deadline=None)
    @given(pair=config_pairs(), data=st.data())
    def test_sym_distance_relabeling_invariance(self, pair, data):
        x, y = pair
        geometry = GeometryService()
        tau = data.draw(st.permutations(range(x.N)))
        sigma = data.draw(st.permutations(range(x.N)))
        assert geometry.sym_distance(x.permuted(tau), y.permuted(sigma)) == geometry.sym_distance(x, y)

    def test_rho_examples(self, geometry):
        assert geometry.rho_distance([(0,)], [(5,)]) == 5
        assert geometry.rho_distance([(0,), (3,)], [(3,), (7,)]) == 0
        assert geometry.rho_distance([(0, 0)], [(3, 1)]) == 3

    def test_rho_empty_rejected(self, geometry):
        with pytest.raises(InvalidInputError):
            geometry.rho_distance([], [(1,)])

    def test_envelope(self, geometry):
        env = geometry.canonical_envelope([(0, 0), (3, 1)])
        assert env == Parallelepiped((0, 0), (3, 1))
        assert env.diameter == 3
        assert geometry.canonical_envelope([(2, 2)]).diameter == 0
        assert geometry.canonical_envelope(env.points()) == env

    def test_dch_examples(self, geometry):
        assert geometry.dch_distance([(0,), (2,)], [(10,)]) == 8
        assert geometry.dch_distance([(0,), (10,)], [(5,)]) == 0

    @settings(max_examples=200, deadline=None)
    @given(data=st.data())
    def test_dch_below_rho(self, data):
        d = data.draw(st.integers(1, 2))
        pts = st.lists(st.tuples(*[st.integers(-10, 10)] * d), min_size=1, max_size=4)
        X, Y = data.draw(pts), data.draw(pts)
        geometry = GeometryService()
        assert geometry.dch_distance(X, Y) <= geometry.rho_distance(X, Y)

    @settings(max_examples=200, deadline=None)
    @given(data=st.data())
    def test_touching_envelopes_bound_joint_diameter(self, data):
        d = data.draw(st.integers(1, 2))
        pts = st.lists(st.tuples(*[st.integers(-6, 6)] * d), min_size=1, max_size=3)
        X, Y = data.draw(pts), data.draw(pts)
        geometry = GeometryService()
        if geometry.dch_distance(X, Y) == 0:
            joint = geometry.canonical_envelope(X + Y).diameter
            assert joint <= geometry.canonical_envelope(X).diameter + geometry.canonical_envelope(Y).diameter


class TestSeparatingLayer:
    """Test separating slabs"""

    def test_examples(self, geometry):
        layer = geometry.separating_layer([(0,)], [(5,)], 5)
        assert layer is not None
        assert (layer.axis, layer.lower, layer.upper, layer.first_below) == (0, 0, 5, True)
        assert geometry.separating_layer([(0,)], [(5,)], 6) is None

    def test_rejects_zero_width(self, geometry):
        with pytest.raises(InvalidInputError):
            geometry.separating_layer([(0,)], [(5,)], 0)

    def test_exhaustive_line(self, geometry):
        """Every pair of 1- and 2-point sets on [-6, 6]"""
        sets = [[(a,)] for a in range(-6, 7)] + [[(a,), (b,)] for a, b in combinations(range(-6, 7), 2)]
        for X, Y in product(sets, repeat=2):
            for R in (1, 3, 6):
                layer = geometry.separating_layer(X, Y, R)
                assert (layer is not None) == (geometry.dch_distance(X, Y) >= R) == slab_oracle(X, Y, R)

    @settings(max_examples=500, deadline=None)
    @given(data=st.data())
    def test_plane_agrees_with_oracle(self, data):
        pts = st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=1, max_size=3)
        X, Y = data.draw(pts), data.draw(pts)
        R = data.draw(st.integers(1, 6))
        geometry = GeometryService()
        layer = geometry.separating_layer(X, Y, R)
        assert (layer is not None) == (geometry.dch_distance(X, Y) >= R) == slab_oracle(X, Y, R)
        if layer is not None:
            below, above = (X, Y) if layer.first_below else (Y, X)
            assert all(p[layer.axis] <= layer.lower for p in below)
            assert all(q[layer.axis] >= layer.upper for q in above)


class TestProjections:
    """Test coordinate projections"""

    def test_duplicate_collapse(self, geometry):
        x = conf(0, 0, 10)
        assert geometry.projections(x, {1, 2}) == frozenset({(0,)})
        assert geometry.projections(x, {1, 2, 3}) == x.support()
        assert geometry.projections(x, set()) == frozenset()

    def test_index_out_of_range(self, geometry):
        with pytest.raises(InvalidInputError):
            geometry.projections(conf(0, 1), {3})

    def test_cube_projection(self, geometry):
        C = MultiCube(conf((0, 0), (5, 5)), 1)
        union = geometry.cube_projection(C, {2})
        assert union.boxes == (Parallelepiped((4, 4), (6, 6)),)
        assert geometry.cube_projection(MultiCube(conf(3, 7), 0), {1, 2}).points() == {(3,), (7,)}
        assert geometry.cube_projection(C, set()).is_empty

    def test_cube_projection_membership(self, geometry):
        C = MultiCube(conf((0, 0), (3, 1)), 1)
        union = geometry.cube_projection(C, {1, 2})
        expected = {p for u in C.center for p in product(*(range(c - 1, c + 2) for c in u))}
        for p in product(range(-3, 7), range(-3, 5)):
            assert union.contains(p) == (p in expected)


class TestClusters:
    """Test cluster decomposition"""

    def test_example(self, geometry):
        dec = geometry.cluster_decompose(conf(0, 1, 10), 2)
        assert dec.index_sets() == [frozenset({1, 2}), frozenset({3})]

    def test_all_equal(self, geometry):
        dec = geometry.cluster_decompose(conf((4, 4), (4, 4), (4, 4)), 3)
        assert len(dec.clusters) == 1
        assert dec.clusters[0].diameter == 0

    def test_spread_gives_singletons(self, geometry):
        R, N = 2, 4
        x = conf(*(4 * (N - 1) * R * k for k in range(N)))
        assert len(geometry.cluster_decompose(x, R).clusters) == N

    def test_cluster_properties_random(self, geometry):
        """Partition, separation > 2R and diameter <= 2(N-1)R over 10^4 configurations"""
        rng = np.random.default_rng(20240501)
        for _ in range(10 ** 4):
            N = int(rng.integers(2, 5))
            d = int(rng.integers(1, 3))
            R = int(rng.integers(1, 6))
            x = Configuration(tuple(tuple(int(c) for c in p) for p in rng.integers(-50, 51, size=(N, d))))
            clusters = geometry.cluster_decompose(x, R).clusters

            members = [j for c in clusters for j in c.indices]
            assert sorted(members) == list(range(1, N + 1))
            for a, b in combinations(clusters, 2):
                assert a.envelope.gap(b.envelope) > 2 * R
            for c in clusters:
                assert c.diameter <= 2 * (N - 1) * R
                assert c.envelope == geometry.canonical_envelope([x[j] for j in c.indices])


class TestDecouplingWidth:
    """Test decoupling width"""

    def test_examples(self, geometry):
        assert geometry.decoupling_width(conf(0, 10)) == 10
        assert geometry.decoupling_width(conf(3, 3, 3)) == 0

    def test_needs_two_particles(self, geometry):
        with pytest.raises(InvalidInputError):
            geometry.decoupling_width(conf(0))

    @settings(max_examples=200, deadline=None)
    @given(x=configurations(3, 2, -20, 20))
    def test_matches_subset_oracle(self, x):
        geometry = GeometryService()
        best = 0
        for mask in range(1, 2 ** 3 - 1):
            A = [x.particles[i] for i in range(3) if mask >> i & 1]
            B = [x.particles[i] for i in range(3) if not mask >> i & 1]
            gap = max(max(0, min(q[k] for q in B) - max(p[k] for p in A),
                          min(p[k] for p in A) - max(q[k] for q in B)) for k in range(2))
            best = max(best, gap)
        assert geometry.decoupling_width(x) == best

    def test_cube_width(self, geometry):
        C = MultiCube(conf(0, 10), 2)
        assert geometry.decoupling_width_cube(C) == 6
        assert geometry.decoupling_width_cube(MultiCube(conf(0, 10), 0)) == 10


class TestWeakSeparability:
    """Test separability certificates"""

    def test_example_certificate(self, geometry):
        x, y = conf(0, 0, 20), conf(0, 20, 20)
        cert = geometry.weak_separability(x, y, 1)
        assert cert is not None
        assert cert.Q == Parallelepiped((-1,), (1,))
        assert cert.J1 == {1, 2}
        assert cert.J2 == {1}
        assert (cert.n1, cert.n2) == (2, 1)
        assert cert.source == 'x' and cert.method == 'cluster'
        assert geometry.validate_certificate(cert, x, y, 1).valid

    def test_equal_configurations_have_none(self, geometry):
        x = conf((0, 0), (7, 7), (30, -4))
        assert geometry.weak_separability(x, x, 1) is None

    def test_charge_transfer_pair(self, geometry):
        a, b = (0, 0), (13, 2)
        x, y = conf(a, a, b), conf(a, b, b)
        cert = geometry.weak_separability(x, y, 1)
        assert cert is not None
        assert cert.n1 - cert.n2 == 1

    def test_second_cluster_box(self, geometry):
        x, y = conf(0, 20, 20), conf(0, 0, 20)
        cert = geometry.weak_separability(x, y, 1)
        assert cert is not None
        assert geometry.validate_certificate(cert, x, y, 1).valid
        assert cert.occupancy_for('x') != cert.occupancy_for('y')

    def test_straddling_cube_skips_box(self, geometry):
        """A y-cube crossing the first cluster box moves the certificate elsewhere"""
        x, y = conf(0, 0, 100), conf(2, 100, 100)
        cert = geometry.weak_separability(x, y, 1)
        assert cert is not None
        assert cert.source == 'y'
        assert cert.Q == Parallelepiped((99,), (101,))
        assert geometry.validate_certificate(cert, x, y, 1).valid

    def test_exhaustive_scan_agrees(self, geometry):
        x, y = conf(0, 0, 20), conf(0, 20, 20)
        cert = geometry._exhaustive_certificate(x, y, 1)
        assert cert is not None
        assert cert.method == 'exhaustive'
        assert cert.Q.diameter == 2
        assert geometry.validate_certificate(cert, x, y, 1).valid

    def test_clause_c_reported(self, geometry):
        x, y = conf(0, 0, 20), conf(0, 20, 20)
        cert = SeparabilityCertificate(Parallelepiped((-1,), (1,)), index_set([1, 2]), index_set([1, 2]), L=1)
        report = geometry.validate_certificate(cert, x, y, 1)
        assert not report.valid
        assert report.clause == 'c'

    def test_clause_a_reported_after_shrinking(self, geometry):
        x, y = conf(0, 0, 20), conf(0, 20, 20)
        cert = geometry.weak_separability(x, y, 1)
        shrunk = SeparabilityCertificate(Parallelepiped((cert.Q.lo[0] + 1,), cert.Q.hi), cert.J1, cert.J2, L=1)
        report = geometry.validate_certificate(shrunk, x, y, 1)
        assert not report.valid
        assert report.clause == 'a'

    def test_clause_b_and_e_reported(self, geometry):
        x, y = conf(0, 0, 20), conf(0, 2, 20)
        cert = SeparabilityCertificate(Parallelepiped((-1,), (1,)), index_set([1, 2]), index_set([1]), L=1)
        assert geometry.validate_certificate(cert, x, y, 1).clause == 'b'
        wide = SeparabilityCertificate(Parallelepiped((-1,), (16,)), index_set([1, 2]), index_set([1]), L=1)
        assert geometry.validate_certificate(wide, conf(0, 0, 40), conf(0, 40, 40), 1).clause == 'e'

    def test_occupancy_identity(self, geometry):
        rng = np.random.default_rng(7)
        for _ in range(500):
            N, d, L = int(rng.integers(1, 5)), int(rng.integers(1, 3)), int(rng.integers(0, 4))
            x = Configuration(tuple(map(tuple, rng.integers(-30, 31, size=(N, d)).tolist())))
            y = Configuration(tuple(map(tuple, rng.integers(-30, 31, size=(N, d)).tolist())))
            table = geometry.occupancy_numbers(x, y, L)
            assert sum(row.n_x for row in table) == N
            assert sum(row.n_x - row.n_y for row in table) == N - sum(row.n_y for row in table) >= 0

    def test_certificate_existence_random(self, geometry):
        """Certificates exist and validate on 10^4 well-separated pairs"""
        rng = np.random.default_rng(31337)
        found = 0
        while found < 10 ** 4:
            N, d, L = int(rng.integers(1, 5)), int(rng.integers(1, 3)), int(rng.integers(0, 4))
            span = 4 * (N + 1) * max(L, 1) + 10
            x = Configuration(tuple(map(tuple, rng.integers(-span, span + 1, size=(N, d)).tolist())))
            y = Configuration(tuple(map(tuple, rng.integers(-span, span + 1, size=(N, d)).tolist())))
            if geometry.sym_distance(x, y) <= 2 * (N + 1) * L:
                continue
            found += 1
            cert = geometry.weak_separability(x, y, L)
            assert cert is not None, (x, y, L)
            report = geometry.validate_certificate(cert, x, y, L)
            assert report.valid, (x, y, L, report.clause)


class TestCubeDistance:
    """Test distances between multi-cubes"""

    def test_cube_distance(self, geometry):
        assert geometry.cube_distance(MultiCube(conf(0, 0), 1), MultiCube(conf(20, 20), 2)) == 17
        assert geometry.cube_distance(MultiCube(conf(0, 0), 3), MultiCube(conf(4, 0), 3)) == 0


class TestSeparatingLayerRandom:
    """Test separating slabs on seeded random plane sets"""

    def test_random_plane_sets(self, geometry):
        rng = np.random.default_rng(2718)
        for _ in range(10 ** 4):
            X = [tuple(int(c) for c in p) for p in rng.integers(-6, 7, size=(int(rng.integers(1, 4)), 2))]
            Y = [tuple(int(c) for c in p) for p in rng.integers(-6, 7, size=(int(rng.integers(1, 4)), 2))]
            R = int(rng.integers(1, 7))
            layer = geometry.separating_layer(X, Y, R)
            assert (layer is not None) == (geometry.dch_distance(X, Y) >= R) == slab_oracle(X, Y, R)
