"""
Field Service - IID disorder sampling and conditional-mean statistics
"""
import logging
import math
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from models.errors import InvalidInputError
from models.field import BinEstimate, CcmConstants, FieldModel, FieldSample, MeanFluctuationSplit
from models.geometry import Parallelepiped, Point, as_point
import config

logger = logging.getLogger(__name__)

SEED_LIMIT = 2 ** 64


def trial_generator(master_seed: int, trial: int, *stream: int) -> np.random.Generator:
    """Counter-based stream of one trial: Philox keyed by (master_seed, trial, *stream)"""
    if isinstance(master_seed, bool) or int(master_seed) != master_seed or not 0 <= master_seed < SEED_LIMIT:
        raise InvalidInputError(f"master seed must be an integer in [0, 2^64), got {master_seed!r}")
    if int(trial) != trial or trial < 0:
        raise InvalidInputError(f"trial index must be a non-negative integer, got {trial!r}")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial),) + tuple(stream))
    return np.random.Generator(np.random.Philox(seq))


class FieldService:
    """
    Random field business logic
    Samplers are pure functions of (model, region, seed, trial)
    """

    def __init__(self, min_bin_count: int = None):
        self.min_bin_count = min_bin_count or config.MIN_BIN_COUNT

    def sample_field(self, model: FieldModel, region: Iterable[Sequence[int]],
                     master_seed: int, trial: int) -> FieldSample:
        """
        IID draws over a finite region
        Sites are ranked lexicographically and the rank-i site receives the
        i-th variate of the trial stream
        """
        sites = tuple(sorted({as_point(p) for p in region}))
        if sites and len({len(p) for p in sites}) != 1:
            raise InvalidInputError("field region mixes lattice dimensions")
        rng = trial_generator(master_seed, trial)
        values = model.draw(rng, len(sites))
        return FieldSample(sites, values, int(master_seed), int(trial))

    def mean_fluctuation_split(self, sample: FieldSample, Q: Parallelepiped) -> MeanFluctuationSplit:
        """xi = mean of V over Q, eta(x) = V(x) - xi"""
        sites = tuple(Q.points())
        if not sites:
            raise InvalidInputError("Q is empty")
        values = sample.values_at(sites)
        xi = float(values.mean())
        return MeanFluctuationSplit(Q=Q, xi=xi, sites=sites, eta=values - xi)

    # Gaussian law: analytic constants
    @staticmethod
    def _require_gaussian(model: FieldModel):
        if model.law != 'gaussian':
            raise InvalidInputError(f"analytic CCM constants exist only for the gaussian law, got {model.law}")

    def gaussian_density_bound(self, model: FieldModel, cardinality: int) -> float:
        """Maximal density of xi_Q: |Q|^{1/2} / (sigma sqrt(2 pi))"""
        self._require_gaussian(model)
        if cardinality < 1:
            raise InvalidInputError("|Q| must be at least 1")
        return math.sqrt(cardinality) / (model.sigma * math.sqrt(2.0 * math.pi))

    def gaussian_ccm_constants(self, model: FieldModel, d: int, N: int) -> CcmConstants:
        """
        xi_Q is independent of the fluctuations and has density at most
        (R+1)^{d/2} / (sigma sqrt(2 pi)) for diam Q = R, so the modulus is
        Lipschitz with C1 = 1/(sigma sqrt(2 pi)), A1 = d/2, b1 = 1 and the
        exceptional event is empty (b2 = inf)
        """
        self._require_gaussian(model)
        if d < 1 or N < 1:
            raise InvalidInputError("d and N must be positive")
        return CcmConstants(
            C1=1.0 / (model.sigma * math.sqrt(2.0 * math.pi)), A1=d / 2.0, b1=1.0,
            C2=1.0, A2=0.0, b2=math.inf,
        )

    # Monte Carlo estimators
    def _draw_block(self, model: FieldModel, cardinality: int, trials: int, seed: int):
        if cardinality < 1:
            raise InvalidInputError("|Q| must be at least 1")
        if trials < 1:
            raise InvalidInputError("trials must be positive")
        # estimator draws use a stream disjoint from every field trial
        rng = trial_generator(seed, 0, 1)
        V = model.draw(rng, trials * cardinality).reshape(trials, cardinality)
        xi = V.mean(axis=1)
        eta = V - xi[:, None]
        # half-range of the fluctuations; equals |eta_x| when |Q| = 2
        h = 0.5 * (eta.max(axis=1) - eta.min(axis=1))
        return xi, h

    @staticmethod
    def _bin_edges(h: np.ndarray, bin_width: float) -> np.ndarray:
        if not bin_width > 0:
            raise InvalidInputError("bin width must be positive")
        top = float(h.max()) if h.size else 0.0
        return bin_width * np.arange(math.floor(top / bin_width) + 2)

    @staticmethod
    def _max_window_fraction(xs: np.ndarray, s: float) -> float:
        """Largest fraction of sorted values inside any window [t, t+s]"""
        ends = np.searchsorted(xs, xs + s, side='right')
        return float(np.max(ends - np.arange(len(xs)))) / len(xs)

    @staticmethod
    def _cardinality(Q: Union[Parallelepiped, int]) -> int:
        return Q.cardinality if isinstance(Q, Parallelepiped) else int(Q)

    def empirical_conditional_modulus(self, model: FieldModel, Q: Union[Parallelepiped, int], s: float,
                                      bin_width: float, trials: int, seed: int) -> List[BinEstimate]:
        """
        Per-bin estimate of sup_t P(t <= xi_Q <= t + s | h), binning on the
        half-range h of the fluctuations over Q. Undersampled bins are returned
        with undersampled=True and no value.
        """
        if not s > 0:
            raise InvalidInputError(f"s must be positive, got {s}")
        if trials < 10 ** 4:
            raise InvalidInputError(f"empirical modulus needs at least 10^4 trials, got {trials}")
        card = self._cardinality(Q)
        xi, h = self._draw_block(model, card, trials, seed)
        edges = self._bin_edges(h, bin_width)
        which = np.digitize(h, edges) - 1

        estimates = []
        for k in range(len(edges) - 1):
            xs = np.sort(xi[which == k])
            est = BinEstimate(h_lo=float(edges[k]), h_hi=float(edges[k + 1]), count=len(xs),
                              value=None, stderr=None)
            est.reference = self._reference_modulus(model, card, s, est.h_center)
            if len(xs) < self.min_bin_count:
                est.undersampled = True
                if len(xs):
                    logger.debug(f"Bin [{est.h_lo:.3f}, {est.h_hi:.3f}) undersampled: {len(xs)} draws")
            else:
                p = self._max_window_fraction(xs, s)
                est.value = p
                est.stderr = math.sqrt(max(p * (1.0 - p), 1.0 / len(xs)) / len(xs))
                est.xi_min, est.xi_max = float(xs[0]), float(xs[-1])
            estimates.append(est)
        return estimates

    @staticmethod
    def _reference_modulus(model: FieldModel, cardinality: int, s: float, h: float) -> Optional[float]:
        if model.law == 'gaussian':
            # xi_Q ~ N(mean, sigma^2/|Q|), independent of eta
            return FieldModel.gaussian(model.mean, model.variance / cardinality).continuity_modulus(s)
        if model.law == 'uniform':
            # given the fluctuations, xi_Q is uniform on an interval of length (b-a) - 2h
            width = (model.b - model.a) - 2.0 * h
            return 1.0 if width <= s else s / width
        return None

    def conditional_density(self, model: FieldModel, cardinality: int, bin_width: float,
                            trials: int, seed: int) -> List[BinEstimate]:
        """
        Conditional density of xi_Q per fluctuation bin, averaged over the
        inner window [a + h_hi, b - h_hi] where every draw of the bin has support.
        For uniform(0,1) and |Q| = 2 the reference is (1 - 2h)^{-1}.
        """
        if model.law != 'uniform':
            raise InvalidInputError("conditional density windows are defined for the uniform law")
        xi, h = self._draw_block(model, cardinality, trials, seed)
        edges = self._bin_edges(h, bin_width)
        which = np.digitize(h, edges) - 1
        span = model.b - model.a

        estimates = []
        for k in range(len(edges) - 1):
            xs = xi[which == k]
            est = BinEstimate(h_lo=float(edges[k]), h_hi=float(edges[k + 1]), count=len(xs),
                              value=None, stderr=None)
            if len(xs):
                est.xi_min, est.xi_max = float(xs.min()), float(xs.max())
            width = span - 2.0 * est.h_hi
            if span - 2.0 * est.h_center > 0:
                est.reference = 1.0 / (span - 2.0 * est.h_center)
            if len(xs) < self.min_bin_count or width <= 0:
                est.undersampled = True
            else:
                inside = np.count_nonzero((xs >= model.a + est.h_hi) & (xs <= model.b - est.h_hi))
                q = inside / len(xs)
                est.value = q / width
                est.stderr = math.sqrt(max(q * (1.0 - q), 1.0 / len(xs)) / len(xs)) / width
            estimates.append(est)
        return estimates

    def fit_ccm_constants(self, model: FieldModel, Q: Parallelepiped, s_grid: Sequence[float],
                          trials: int, seed: int, bin_width: float = 0.05) -> CcmConstants:
        """
        Empirical CCM constants, labeled fitted

        For each s the (1-s)-quantile m_s of the per-bin moduli is taken; b1 is the
        log-log slope of m_s and C1 the smallest constant with C1 s^b1 >= m_s on
        the grid. The excluded mass is charged to the exceptional part C2 = 1, b2 = 1.
        """
        grid = sorted(float(s) for s in s_grid if 0 < s < 1)
        if len(grid) < 2:
            raise InvalidInputError("fitting needs at least two grid points in (0, 1)")

        quantiles = []
        for s in grid:
            bins = self.empirical_conditional_modulus(model, Q, s, bin_width, trials, seed)
            values = [b.value for b in bins if not b.undersampled]
            if not values:
                raise InvalidInputError("every fluctuation bin is undersampled; raise the trial count")
            quantiles.append(float(np.quantile(values, 1.0 - s)))

        m = np.asarray(quantiles)
        s_arr = np.asarray(grid)
        positive = m > 0
        if positive.sum() >= 2:
            slope = float(np.polyfit(np.log(s_arr[positive]), np.log(m[positive]), 1)[0])
        else:
            slope = 1.0
        b1 = min(max(slope, 1e-6), 1.0)
        C1 = float(np.max(m / s_arr ** b1))
        constants = CcmConstants(C1=max(C1, 1e-12), A1=0.0, b1=b1, C2=1.0, A2=0.0, b2=1.0,
                                 fitted=True, R=Q.diameter)
        logger.info(f"Fitted CCM constants for {model.law}: C1={constants.C1:.4g}, b1={constants.b1:.4g}")
        return constants
