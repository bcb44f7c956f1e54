"""
Experiment Service - Monte Carlo eigenvalue-concentration experiments
Two-cube bound, single-volume and two-volume Wegner checks, charge-transfer demo
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Set

import numpy as np

from models.errors import HypothesisViolation, InvalidInputError
from models.experiment import (
    BoundCurve, CurvePoint, EmpiricalCdf, ExperimentResult, PartialResult, ResonanceRun,
    default_s_grid, normalize_s_grid, DEFAULT_SHIFT_T,
)
from models.field import FieldModel
from models.geometry import Configuration, MultiCube, Parallelepiped, Point, SeparabilityCertificate, as_point
from models.operator import InteractionSpec
from services.field_service import FieldService
from services.geometry_service import GeometryService
from services.hamiltonian_service import HamiltonianService

logger = logging.getLogger(__name__)

# t-scan of the charge-transfer demo
SCAN_POINTS = 11
SCAN_STEP = 1e-6


@dataclass(frozen=True)
class TrialTask:
    """
    Per-trial work unit shipped to workers
    kind 'pair': dist(spec H_{C_L1(u1)}, spec H_{C_L2(u2)}); kind 'energy': dist(E, spec H_{C_L1(u1)})
    """
    kind: str
    model: FieldModel
    interaction: InteractionSpec
    master_seed: int
    u1: Configuration
    L1: int
    u2: Optional[Configuration] = None
    L2: Optional[int] = None
    E: float = 0.0

    @property
    def needs_threads(self) -> bool:
        return self.interaction.is_custom


Runner = Callable[[TrialTask, int], List[PartialResult]]


class ExperimentService:
    """
    Resonance experiment business logic
    Trials are independent; the field of trial k depends only on (seed, k)
    """

    def __init__(self, geometry: GeometryService, field: FieldService, hamiltonian: HamiltonianService):
        self.geometry = geometry
        self.field = field
        self.hamiltonian = hamiltonian

    # Trials
    @staticmethod
    def _cube_sites(u: Configuration, L: int) -> Set[Point]:
        cube = MultiCube(u, L)
        sites = set()
        for j in range(1, u.N + 1):
            sites.update(cube.particle_box(j).points())
        return sites

    def task_region(self, task: TrialTask) -> List[Point]:
        """Union of the 1-particle supports of the cubes of a task"""
        sites = self._cube_sites(task.u1, task.L1)
        if task.kind == 'pair':
            sites |= self._cube_sites(task.u2, task.L2)
        return sorted(sites)

    def distances(self, task: TrialTask, start: int, stop: int) -> PartialResult:
        """Distances of trials [start, stop) in trial order"""
        region = self.task_region(task)
        out = np.empty(stop - start)
        for k, trial in enumerate(range(start, stop)):
            sample = self.field.sample_field(task.model, region, task.master_seed, trial)
            if task.kind == 'pair':
                sx, sy = self.hamiltonian.pair_spectra(task.u1, task.L1, task.u2, task.L2,
                                                       sample, task.interaction)
                out[k] = self.hamiltonian.spectral_distance(sx, sy)
            else:
                op = self.hamiltonian.assemble(task.u1, task.L1, sample, task.interaction)
                out[k] = self.hamiltonian.energy_distance(task.E, self.hamiltonian.spectrum(op))
        logger.debug(f"Trials [{start}, {stop}) done")
        return PartialResult(start, stop, out)

    def _sequential(self, task: TrialTask, trials: int) -> List[PartialResult]:
        return [self.distances(task, 0, trials)]

    def aggregate(self, partials: Sequence[PartialResult]) -> EmpiricalCdf:
        """Merge worker results; ranges must be disjoint, order does not matter"""
        ordered = sorted(partials, key=lambda p: (p.trial_start, p.trial_stop))
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.trial_start < prev.trial_stop:
                raise InvalidInputError(
                    f"overlapping trial ranges [{prev.trial_start}, {prev.trial_stop}) "
                    f"and [{cur.trial_start}, {cur.trial_stop})"
                )
        if not ordered:
            return EmpiricalCdf(np.empty(0))
        return EmpiricalCdf(np.concatenate([p.distances for p in ordered]))

    def _collect(self, task: TrialTask, trials: int, runner: Optional[Runner]) -> EmpiricalCdf:
        partials = (runner or self._sequential)(task, trials)
        cdf = self.aggregate(partials)
        if cdf.count != trials:
            raise InvalidInputError(f"workers returned {cdf.count} trials, expected {trials}")
        return cdf

    @staticmethod
    def _points(cdf: EmpiricalCdf, curve: BoundCurve) -> List[CurvePoint]:
        points = []
        for s, h in zip(curve.s, curve.h):
            lo, hi = cdf.wilson(s)
            points.append(CurvePoint(float(s), cdf.evaluate(s), lo, hi, float(h)))
        return points

    # Two-cube bound
    def check_hypothesis(self, run: ResonanceRun) -> int:
        """d_S(u', u'') > 2(N+1)L, L = max(L', L''); returns d_S"""
        d_s = self.geometry.sym_distance(run.u1, run.u2)
        threshold = 2 * (run.N + 1) * run.L
        if d_s <= threshold:
            logger.warning(f"Run refused: d_S = {d_s} <= 2(N+1)L = {threshold}")
            raise HypothesisViolation(
                f"separation hypothesis violated: d_S(u', u'') = {d_s} <= 2(N+1)L = {threshold} "
                f"(N={run.N}, L={run.L})"
            )
        return d_s

    def check_w2_hypothesis(self, u1: Configuration, L1: int, u2: Configuration, L2: int) -> int:
        """Two-particle cubes at distance >= 8 max(L1, L2); returns the cube distance"""
        if u1.N != 2 or u2.N != 2:
            raise InvalidInputError("the two-volume bound is stated for two-particle cubes")
        big = max(L1, L2)
        gap = self.geometry.cube_distance(MultiCube(u1, L1), MultiCube(u2, L2))
        if gap < 8 * big:
            logger.warning(f"W2 run refused: cube distance {gap} < 8L = {8 * big}")
            raise HypothesisViolation(f"two-volume hypothesis violated: dist(C, C') = {gap} < 8L = {8 * big}")
        return gap

    def check_charge_demo_hypothesis(self, a: Sequence[int], b: Sequence[int], L: int) -> int:
        """|a - b| > 2(N+1)L with N = 3; returns |a - b|"""
        a, b = as_point(a), as_point(b)
        if len(a) != len(b):
            raise InvalidInputError("a and b must share the lattice dimension")
        threshold = 2 * (3 + 1) * L
        separation = self.geometry.max_norm(a, b)
        if separation <= threshold:
            logger.warning(f"Charge-transfer demo refused: |a-b| = {separation} <= 2(N+1)L = {threshold}")
            raise HypothesisViolation(
                f"separation hypothesis violated: |a - b| = {separation} <= 2(N+1)L = {threshold}"
            )
        return separation

    def bound_curve(self, run: ResonanceRun, cert: Optional[SeparabilityCertificate] = None,
                    fit_trials: int = 10 ** 4) -> BoundCurve:
        """
        h(s) = |C_L'| |C_L''| nu(2s) with nu the conditional continuity modulus of xi_Q

        gaussian: nu(2s) <= sqrt|Q| 2s / (sigma sqrt(2 pi)), |Q| = (2NL+1)^d in
        worst_case mode or the certificate box in certificate mode (optionally
        divided by |n1 - n2|). Other laws use fitted constants and are labeled so.
        """
        s = np.asarray(run.s_grid)
        M1 = (2 * run.L1 + 1) ** (run.N * run.d)
        M2 = (2 * run.L2 + 1) ** (run.N * run.d)
        if run.bound_mode == 'certificate':
            if cert is None:
                raise InvalidInputError("certificate bound mode needs a certificate")
            Q = cert.Q
        else:
            Q = Parallelepiped.cube((0,) * run.d, run.N * run.L)
        factor = 1.0
        if run.occupancy_factor and cert is not None:
            factor = 1.0 / abs(cert.n1 - cert.n2)

        details = {'M1': M1, 'M2': M2, 'Q_cardinality': Q.cardinality, 'Q_diameter': Q.diameter,
                   'mode': run.bound_mode, 'occupancy_factor': factor}
        if run.model.law == 'gaussian':
            density = self.field.gaussian_density_bound(run.model, Q.cardinality)
            h = M1 * M2 * factor * density * 2.0 * s
            details['density_bound'] = density
            return BoundCurve(s=s, h=h, label='gaussian', fitted=False, details=details)

        grid = [v for v in 2.0 * s if v < 1.0]
        if len(grid) < 2:
            grid = list(s)
        constants = self.field.fit_ccm_constants(run.model, Q, grid, fit_trials, run.master_seed)
        R = max(Q.diameter, 1)
        h = np.array([M1 * M2 * factor * constants.modulus(2.0 * v, R)
                      + constants.exceptional_probability(2.0 * v, R) for v in s])
        details['ccm_constants'] = constants.to_dict()
        return BoundCurve(s=s, h=np.maximum.accumulate(h), label='fitted', fitted=True, details=details)

    def run_theorem1(self, run: ResonanceRun, runner: Optional[Runner] = None) -> ExperimentResult:
        """Empirical P[dist(spec, spec) <= s] against the bound curve on the s-grid"""
        d_s = self.check_hypothesis(run)
        cert = self.geometry.weak_separability(run.u1, run.u2, run.L)
        if cert is None:
            # unreachable under the hypothesis; kept as a hard failure
            raise HypothesisViolation("no separability certificate although d_S > 2(N+1)L")
        logger.info(f"Run started: N={run.N}, d={run.d}, L'={run.L1}, L''={run.L2}, "
                    f"d_S={d_s}, trials={run.trials}, seed={run.master_seed}")

        curve = self.bound_curve(run, cert)
        task = TrialTask('pair', run.model, run.interaction, run.master_seed,
                         run.u1, run.L1, run.u2, run.L2)
        cdf = self._collect(task, run.trials, runner)
        points = self._points(cdf, curve)

        result = ExperimentResult('theorem1', cdf, curve, points, extras={
            'd_S': d_s,
            'hypothesis': f"d_S = {d_s} > 2(N+1)L = {2 * (run.N + 1) * run.L}",
            'certificate': cert.to_dict(),
        })
        logger.info(f"Run finished: bound respected on {sum(p.respected for p in points)}/{len(points)} grid points")
        return result

    # Single-volume Wegner check
    def run_w1(self, model: FieldModel, u: Configuration, L: int, E: float,
               eps_grid: Sequence[float], trials: int, seed: int,
               interaction: Optional[InteractionSpec] = None,
               runner: Optional[Runner] = None) -> ExperimentResult:
        """
        Empirical P[dist(E, spec H_{C_L(u)}) <= eps]. For N = 1 the reference is
        the Wegner bound 2 eps |Lambda| sup(density); otherwise the fitted
        linear slope through the origin (diagnostic only).
        """
        eps = np.asarray(normalize_s_grid(eps_grid))
        interaction = interaction or InteractionSpec()
        task = TrialTask('energy', model, interaction, seed, u, L, E=float(E))
        cdf = self._collect(task, trials, runner)

        p = np.array([cdf.evaluate(e) for e in eps])
        small = eps <= 0.05
        if not small.any():
            small = np.ones_like(eps, dtype=bool)
        slope = float(np.dot(eps[small], p[small]) / np.dot(eps[small], eps[small]))

        volume = (2 * L + 1) ** (u.N * u.d)
        extras = {'fitted_slope': slope, 'volume': volume, 'E': float(E)}
        if u.N == 1:
            constant = 2.0 * volume * model.max_density()
            curve = BoundCurve(s=eps, h=constant * eps, label='wegner', details={'constant': constant})
            extras['wegner_constant'] = constant
        else:
            curve = BoundCurve(s=eps, h=slope * eps, label='fitted_linear', fitted=True,
                               details={'slope': slope})
        logger.info(f"W1 run finished: fitted slope {slope:.4g} over {trials} trials")
        return ExperimentResult('w1', cdf, curve, self._points(cdf, curve), extras=extras)

    # Two-volume, two-particle Wegner check
    def run_w2(self, model: FieldModel, u1: Configuration, L1: int, u2: Configuration, L2: int,
               eps_grid: Sequence[float], trials: int, seed: int,
               interaction: Optional[InteractionSpec] = None,
               runner: Optional[Runner] = None) -> ExperimentResult:
        """
        Two-particle cubes at distance >= 8 max(L1, L2); reference
        (2L+1)^{2d} (2L'+1)^d nu(2 eps) with L >= L' and nu the marginal modulus
        """
        gap = self.check_w2_hypothesis(u1, L1, u2, L2)
        big, small_L = max(L1, L2), min(L1, L2)

        eps = np.asarray(normalize_s_grid(eps_grid))
        d = u1.d
        prefactor = (2 * big + 1) ** (2 * d) * (2 * small_L + 1) ** d
        h = np.array([prefactor * model.continuity_modulus(2.0 * e) for e in eps])
        curve = BoundCurve(s=eps, h=h, label='two_volume', details={'prefactor': prefactor})

        task = TrialTask('pair', model, interaction or InteractionSpec(), seed, u1, L1, u2, L2)
        cdf = self._collect(task, trials, runner)
        logger.info(f"W2 run finished over {trials} trials")
        return ExperimentResult('w2', cdf, curve, self._points(cdf, curve),
                                extras={'cube_distance': gap})

    # Charge transfer
    def run_charge_transfer_demo(self, a: Sequence[int], b: Sequence[int], L: int, model: FieldModel,
                                 trials: int, seed: int,
                                 interaction: Optional[InteractionSpec] = None,
                                 s_grid: Optional[Sequence[float]] = None,
                                 shift_t: Sequence[float] = DEFAULT_SHIFT_T,
                                 bound_mode: str = 'worst_case', occupancy_factor: bool = False,
                                 runner: Optional[Runner] = None) -> ExperimentResult:
        """
        x = (a, a, b) against y = (a, b, b): certificate, exact spectral shifts,
        t-scan of the spectral distance and the two-cube bound for the pair
        """
        a, b = as_point(a), as_point(b)
        self.check_charge_demo_hypothesis(a, b, L)
        interaction = interaction or InteractionSpec()
        x = Configuration((a, a, b))
        y = Configuration((a, b, b))

        cert = self.geometry.weak_separability(x, y, L)
        if cert is None:
            raise HypothesisViolation("no separability certificate for the charge-transfer pair")
        logger.info(f"Charge-transfer certificate: Q={cert.Q.to_dict()}, n1={cert.n1}, n2={cert.n2}")

        task = TrialTask('pair', model, interaction, seed, x, L, y, L)
        sample = self.field.sample_field(model, self.task_region(task), seed, 0)
        shifts = [self.hamiltonian.shift_decomposition_check(x, L, y, L, cert, sample, interaction, t)
                  for t in shift_t]

        expected = abs(cert.occupancy_for('x') - cert.occupancy_for('y'))
        scan = []
        for t in np.linspace(0.0, 1.0, SCAN_POINTS):
            base = self._shifted_distance(x, y, L, sample, cert.Q, t, interaction)
            ahead = self._shifted_distance(x, y, L, sample, cert.Q, t + SCAN_STEP, interaction)
            slope = (ahead - base) / SCAN_STEP
            scan.append({'t': float(t), 'distance': base, 'slope': slope,
                         'stable': abs(abs(slope) - expected) <= 1e-3})

        run = ResonanceRun(model=model, u1=x, L1=L, u2=y, L2=L, interaction=interaction,
                           s_grid=tuple(s_grid) if s_grid is not None else default_s_grid(),
                           trials=trials, master_seed=seed, bound_mode=bound_mode,
                           occupancy_factor=occupancy_factor)
        result = self.run_theorem1(run, runner)
        result.experiment = 'charge_demo'
        result.extras.update(
            x=x.to_list(), y=y.to_list(),
            occupancy_difference=cert.n1 - cert.n2,
            shift_checks=[r.to_dict() for r in shifts],
            t_scan=scan,
        )
        return result

    def _shifted_distance(self, x: Configuration, y: Configuration, L: int, sample, Q: Parallelepiped,
                          t: float, interaction: InteractionSpec) -> float:
        sx, sy = self.hamiltonian.pair_spectra(x, L, y, L, sample.shifted(Q, t), interaction)
        return self.hamiltonian.spectral_distance(sx, sy)
