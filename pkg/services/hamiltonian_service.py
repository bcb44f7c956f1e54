"""
Hamiltonian Service - Assembly and exact diagonalization of N-particle
Anderson Hamiltonians on cubes with Dirichlet conditions
"""
import logging
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import linalg, sparse

from models.errors import AssemblyError, CertificateError, DimensionCapError, InvalidInputError
from models.field import FieldSample
from models.geometry import Configuration, MultiCube, SeparabilityCertificate
from models.operator import AssembledOperator, CubeBasis, InteractionSpec, ShiftReport, Spectrum
from services.geometry_service import GeometryService
import config

logger = logging.getLogger(__name__)


@lru_cache(maxsize=8)
def hopping_matrix(N: int, d: int, L: int) -> sparse.csr_matrix:
    """
    Adjacency of C_L in Z^{Nd}: configurations differing in one particle by
    one nearest-neighbour step. Kronecker sum of Nd path graphs on 2L+1 sites;
    hops leaving the cube are dropped. The cached matrix is shared, callers copy.
    """
    side = 2 * L + 1
    path = sparse.diags([np.ones(side - 1), np.ones(side - 1)], [-1, 1], format='csr')
    eye = sparse.identity(side, format='csr')
    total = None
    for axis in range(N * d):
        term = sparse.identity(1, format='csr')
        for k in range(N * d):
            term = sparse.kron(term, path if k == axis else eye, format='csr')
        total = term if total is None else total + term
    return total.tocsr()


class HamiltonianService:
    """
    Finite-volume Hamiltonian business logic
    H = sum_j (Delta_j + V(x_j)) + U restricted to C_L(u)
    """

    def __init__(self, geometry: GeometryService, dim_cap: int = None, dense_cap: int = None,
                 laplacian_diagonal: bool = None, residual_check: bool = None):
        self.geometry = geometry
        self.dim_cap = dim_cap or config.DIM_CAP
        self.dense_cap = dense_cap or config.DENSE_CAP
        self.laplacian_diagonal = config.LAPLACIAN_DIAGONAL if laplacian_diagonal is None else laplacian_diagonal
        self.residual_check = config.RESIDUAL_CHECK if residual_check is None else residual_check

    def _check_cap(self, N: int, d: int, L: int) -> int:
        dimension = (2 * L + 1) ** (N * d)
        if dimension > self.dim_cap:
            raise DimensionCapError(dimension, self.dim_cap)
        return dimension

    def enumerate_cube(self, u: Configuration, L: int) -> CubeBasis:
        """Lexicographic enumeration of the (2L+1)^{Nd} points of C_L(u)"""
        if isinstance(L, bool) or int(L) != L or L < 0:
            raise InvalidInputError(f"L must be a non-negative integer, got {L!r}")
        self._check_cap(u.N, u.d, L)
        cube = MultiCube(u, int(L))
        shape = (2 * L + 1,) * (u.N * u.d)
        offsets = np.indices(shape).reshape(len(shape), -1).T - L
        points = offsets.reshape(-1, u.N, u.d) + np.asarray(u.particles, dtype=np.int64)
        return CubeBasis(cube=cube, points=points)

    def assemble(self, u: Configuration, L: int, sample: FieldSample,
                 inter: Optional[InteractionSpec] = None) -> AssembledOperator:
        """
        M[a][b] = 1 for nearest-neighbour hops of one particle inside the cube,
        M[a][a] = sum_j V(a_j) + U(a)
        """
        inter = inter or InteractionSpec()
        basis = self.enumerate_cube(u, L)
        if basis.dimension > self.dense_cap:
            raise DimensionCapError(basis.dimension, self.dense_cap, 'MPRES_DENSE_CAP')
        N, d = u.N, u.d
        side = 2 * L + 1
        offsets = (basis.points - np.asarray(u.particles)[None, :, :] + L)

        diagonal = inter.evaluate(basis.points)
        for j in range(N):
            box = basis.cube.particle_box(j + 1)
            local = sample.values_at(box.points())
            idx = np.ravel_multi_index(tuple(offsets[:, j, :].T), (side,) * d)
            diagonal = diagonal + local[idx]
        if self.laplacian_diagonal:
            diagonal = diagonal - 2 * d * N

        matrix = hopping_matrix(N, d, int(L)).toarray()
        matrix[np.diag_indices_from(matrix)] = diagonal
        logger.debug(f"Assembled operator of dimension {basis.dimension} at u={u.to_list()}, L={L}")
        return AssembledOperator(basis=basis, matrix=matrix, interaction=inter, sample_id=sample.sample_id)

    def spectrum(self, op: AssembledOperator) -> Spectrum:
        """All eigenvalues, sorted ascending with multiplicity"""
        M = op.matrix
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise AssemblyError(f"operator matrix is not square: {M.shape}")
        if M.shape[0] > self.dense_cap:
            raise DimensionCapError(M.shape[0], self.dense_cap, 'MPRES_DENSE_CAP')
        if not np.array_equal(M, M.T):
            raise AssemblyError("operator matrix is not symmetric")

        if not self.residual_check:
            return Spectrum(linalg.eigh(M, eigvals_only=True))

        w, v = linalg.eigh(M)
        scale = max(float(np.max(np.abs(w))), 1.0)
        for k in {0, len(w) - 1}:
            residual = float(np.linalg.norm(M @ v[:, k] - w[k] * v[:, k]))
            if residual > config.RESIDUAL_TOLERANCE * scale:
                raise AssemblyError(f"eigenpair {k} residual {residual:.3e} exceeds tolerance")
        return Spectrum(w)

    def spectral_distance(self, a: Spectrum, b: Spectrum) -> float:
        """
        min |lambda_i - mu_j| by one sweep over the merged sorted lists:
        the minimum is attained by neighbours carrying different labels
        """
        if len(a) == 0 or len(b) == 0:
            raise InvalidInputError("spectral distance needs two non-empty spectra")
        merged = np.concatenate((a.eigenvalues, b.eigenvalues))
        labels = np.concatenate((np.zeros(len(a), dtype=bool), np.ones(len(b), dtype=bool)))
        order = np.argsort(merged, kind='stable')
        merged, labels = merged[order], labels[order]
        gaps = np.diff(merged)[labels[1:] != labels[:-1]]
        return float(gaps.min())

    def energy_distance(self, E: float, spec: Spectrum) -> float:
        """dist(E, spectrum)"""
        if len(spec) == 0:
            raise InvalidInputError("empty spectrum")
        return float(np.min(np.abs(spec.eigenvalues - E)))

    def pair_spectra(self, u_x: Configuration, L1: int, u_y: Configuration, L2: int,
                     sample: FieldSample, inter: InteractionSpec):
        return (self.spectrum(self.assemble(u_x, L1, sample, inter)),
                self.spectrum(self.assemble(u_y, L2, sample, inter)))

    def shift_decomposition_check(self, u_x: Configuration, L1: int, u_y: Configuration, L2: int,
                                  cert: SeparabilityCertificate, sample: FieldSample,
                                  inter: Optional[InteractionSpec], t: float,
                                  tolerance: float = None) -> ShiftReport:
        """
        Add t to V on Q and recompute both spectra. A valid certificate puts
        exactly n particles of every configuration of a cube inside Q, so the
        spectra move rigidly by n1 t and n2 t.
        """
        tolerance = config.SHIFT_TOLERANCE if tolerance is None else tolerance
        L = max(L1, L2)
        report = self.geometry.validate_certificate(cert, u_x, u_y, L)
        if not report.valid:
            raise CertificateError(f"certificate fails clause ({report.clause}): {report.message}", report)

        base_x, base_y = self.pair_spectra(u_x, L1, u_y, L2, sample, inter)
        moved_x, moved_y = self.pair_spectra(u_x, L1, u_y, L2, sample.shifted(cert.Q, t), inter)
        n_x, n_y = cert.occupancy_for('x'), cert.occupancy_for('y')
        expected_x, expected_y = base_x.shifted(n_x * t), base_y.shifted(n_y * t)

        result = ShiftReport(
            t=float(t),
            n_x=n_x,
            n_y=n_y,
            max_deviation_x=float(np.max(np.abs(moved_x.eigenvalues - expected_x.eigenvalues))),
            max_deviation_y=float(np.max(np.abs(moved_y.eigenvalues - expected_y.eigenvalues))),
            tolerance=tolerance,
            certificate=cert,
        )
        if not result.passed:
            logger.warning(f"Spectral shift check failed at t={t}: deviation {result.max_deviation:.3e}")
        return result
