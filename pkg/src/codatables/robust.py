"""Location/scatter estimation and Mahalanobis outlier flags.

The robust estimator is the Minimum Covariance Determinant (MCD): the mean and
covariance of the h observations whose covariance matrix has the smallest
determinant. It is computed with FAST-MCD (random elemental starts refined by
concentration steps), or by exhaustive enumeration when the number of
h-subsets is small enough.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy import stats

from .errors import DegenerateData, InvalidData, RankDeficient

N_STARTS = 500
N_INITIAL_CSTEPS = 2
N_REFINED = 10
MAX_CSTEPS = 100
CONVERGENCE_RTOL = 1e-9
EXACT_LIMIT = 20_000
REWEIGHT_QUANTILE = 0.975
# condition-number bound below which a covariance matrix counts as singular
SINGULAR_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class ScatterEstimate:
    center: np.ndarray
    scatter: np.ndarray
    method: str
    h: int | None = None
    support_mask: np.ndarray | None = None
    seed: int | None = None
    raw_center: np.ndarray | None = None
    raw_scatter: np.ndarray | None = None
    raw_subset: np.ndarray | None = None
    raw_determinant: float | None = None
    exact: bool = False

    @property
    def p(self) -> int:
        return self.center.size


@dataclass(frozen=True, eq=False)
class OutlierReport:
    distances: np.ndarray
    cutoff: float
    flags: np.ndarray
    quantile_level: float
    df: int
    estimate: ScatterEstimate

    @property
    def n_outliers(self) -> int:
        return int(self.flags.sum())


def _as_data(Z: ArrayLike) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise InvalidData(f"expected an n x p data matrix, got shape {Z.shape}")
    if not np.all(np.isfinite(Z)):
        raise InvalidData("data matrix contains non-finite values")
    return Z


def moments(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Arithmetic mean and sample covariance (denominator n - 1)."""
    center = Z.mean(axis=0)
    X = Z - center
    return center, (X.T @ X) / (Z.shape[0] - 1)


def classical_estimate(Z: ArrayLike) -> ScatterEstimate:
    Z = _as_data(Z)
    n, p = Z.shape
    if n <= p:
        raise RankDeficient(f"classical estimate needs n > p, got n={n}, p={p}")
    center, scatter = moments(Z)
    return ScatterEstimate(center, scatter, "classical")


def is_singular(C: np.ndarray) -> bool:
    eig = np.linalg.eigvalsh(C)
    return not eig[-1] > 0 or eig[0] <= SINGULAR_RCOND * eig[-1]


def _logdet(C: np.ndarray) -> float:
    if is_singular(C):
        return -math.inf
    return float(np.linalg.slogdet(C)[1])


def _sq_distances(Z: np.ndarray, center: np.ndarray, C: np.ndarray) -> np.ndarray:
    X = Z - center
    L = np.linalg.cholesky(C)
    Y = np.linalg.solve(L, X.T)
    return np.einsum("ij,ij->j", Y, Y)


def default_h(n: int, p: int, alpha: float) -> int:
    """Subset size ``floor(alpha n)`` clamped to ``[floor((n+p+1)/2), n]``."""
    if not 0.5 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0.5, 1], got {alpha}")
    return min(max(int(math.floor(alpha * n)), (n + p + 1) // 2), n)


def consistency_factor(fraction: float, p: int) -> float:
    """Factor making an MCD covariance consistent at the normal model."""
    if fraction >= 1:
        return 1.0
    q = stats.chi2.ppf(fraction, p)
    return fraction / stats.chi2.cdf(q, p + 2)


def c_step(Z: np.ndarray, subset: np.ndarray, h: int) -> tuple[np.ndarray, float]:
    """One concentration step.

    Takes the h observations closest to the mean/covariance of ``subset``
    (index array) and returns them, sorted, with the log-determinant of their
    covariance. A singular starting subset is returned unchanged with
    log-determinant ``-inf``.
    """
    center, C = moments(Z[subset])
    if is_singular(C):
        return np.sort(subset), -math.inf
    d2 = _sq_distances(Z, center, C)
    new = np.sort(np.argsort(d2, kind="stable")[:h])
    return new, _logdet(moments(Z[new])[1])


def _elemental_start(Z: np.ndarray, h: int, rng: np.random.Generator) -> np.ndarray | None:
    n, p = Z.shape
    perm = rng.permutation(n)
    size = p + 1
    while True:
        center, C = moments(Z[perm[:size]])
        if not is_singular(C):
            break
        if size == n:
            return None
        size += 1
    d2 = _sq_distances(Z, center, C)
    return np.sort(np.argsort(d2, kind="stable")[:h])


def _iterate(Z: np.ndarray, subset: np.ndarray, logdet: float, h: int, max_steps: int) -> tuple[np.ndarray, float]:
    for _ in range(max_steps):
        if logdet == -math.inf:
            break
        new, new_logdet = c_step(Z, subset, h)
        assert new_logdet <= logdet + 1e-10 * max(1.0, abs(logdet)), "C-step increased the determinant"
        converged = np.array_equal(new, subset) or (
            new_logdet > -math.inf and abs(math.expm1(new_logdet - logdet)) < CONVERGENCE_RTOL
        )
        subset, logdet = new, new_logdet
        if converged:
            break
    return subset, logdet


def _fast_mcd(Z: np.ndarray, h: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    candidates = []
    for start in range(N_STARTS):
        subset = _elemental_start(Z, h, rng)
        if subset is None:
            raise DegenerateData("every subset of the data has a singular covariance matrix")
        logdet = _logdet(moments(Z[subset])[1])
        subset, logdet = _iterate(Z, subset, logdet, h, N_INITIAL_CSTEPS)
        candidates.append((logdet, start, subset))
    candidates.sort(key=lambda c: (c[0], c[1]))
    refined = []
    for logdet, start, subset in candidates[:N_REFINED]:
        subset, logdet = _iterate(Z, subset, logdet, h, MAX_CSTEPS)
        refined.append((logdet, start, subset))
    logdet, _, subset = min(refined, key=lambda c: (c[0], c[1]))
    return subset, logdet


def _exact_mcd(Z: np.ndarray, h: int, chunk: int = 4096) -> tuple[np.ndarray, float]:
    n, p = Z.shape
    best_logdet, best_subset = math.inf, None
    combos = itertools.combinations(range(n), h)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if block.size == 0:
            break
        X = Z[block]
        X = X - X.mean(axis=1, keepdims=True)
        C = np.einsum("mhi,mhj->mij", X, X) / (h - 1)
        eig = np.linalg.eigvalsh(C)
        singular = ~(eig[:, -1] > 0) | (eig[:, 0] <= SINGULAR_RCOND * eig[:, -1])
        logdets = np.where(singular, -math.inf, np.linalg.slogdet(C)[1])
        k = int(np.argmin(logdets))
        if logdets[k] < best_logdet:
            best_logdet, best_subset = float(logdets[k]), block[k]
    return best_subset, best_logdet


def n_subsets(n: int, h: int) -> int:
    return math.comb(n, h)


def mcd_estimate(
    Z: ArrayLike,
    alpha: float = 0.75,
    seed: int | None = 0,
    reweight: bool = True,
    exact: bool | None = None,
) -> ScatterEstimate:
    """Minimum Covariance Determinant location and scatter.

    Args:
        Z: n x p data matrix.
        alpha: fraction of observations in the MCD subset; ``h`` is
            ``floor(alpha n)`` clamped to ``[floor((n+p+1)/2), n]``.
        seed: seed of the PCG64 generator drawing the random starts.
        reweight: apply one reweighting step at the 0.975 chi-squared cutoff.
        exact: enumerate every h-subset instead of FAST-MCD. ``None`` picks
            enumeration when there are at most 20,000 subsets.

    Raises:
        RankDeficient: if ``n <= p``.
        DegenerateData: if the best h-subset has a singular covariance.
    """
    Z = _as_data(Z)
    n, p = Z.shape
    if n <= p:
        raise RankDeficient(f"MCD needs n > p, got n={n}, p={p}")
    h = default_h(n, p, alpha)

    if h == n:
        # the only h-subset is the whole sample
        center, scatter = moments(Z)
        if is_singular(scatter):
            raise DegenerateData("sample covariance is singular")
        mask = np.ones(n, dtype=bool)
        return ScatterEstimate(
            center, scatter, "mcd_raw", h, mask, seed, center, scatter, mask,
            float(np.linalg.det(scatter)), exact=True,
        )

    if exact is None:
        exact = n_subsets(n, h) <= EXACT_LIMIT
    if exact:
        subset, logdet = _exact_mcd(Z, h)
    else:
        subset, logdet = _fast_mcd(Z, h, np.random.default_rng(seed))
    if logdet == -math.inf:
        raise DegenerateData(f"an h-subset (h={h}) of the data has a singular covariance (exact fit)")

    raw_center, raw_cov = moments(Z[subset])
    raw_det = float(np.linalg.det(raw_cov))
    raw_scatter = raw_cov * consistency_factor(h / n, p)
    raw_mask = np.zeros(n, dtype=bool)
    raw_mask[subset] = True

    center, scatter, mask, method = raw_center, raw_scatter, raw_mask, "mcd_raw"
    if reweight:
        d2 = _sq_distances(Z, raw_center, raw_scatter)
        mask = d2 <= stats.chi2.ppf(REWEIGHT_QUANTILE, p)
        if mask.sum() <= p:
            raise DegenerateData("too few observations survive reweighting")
        center, scatter = moments(Z[mask])
        if is_singular(scatter):
            raise DegenerateData("reweighted covariance is singular")
        scatter = scatter * consistency_factor(REWEIGHT_QUANTILE, p)
        method = "mcd_reweighted"

    return ScatterEstimate(
        center, scatter, method, h, mask, seed, raw_center, raw_scatter, raw_mask, raw_det, exact=bool(exact)
    )


def mahalanobis_distances(Z: ArrayLike, est: ScatterEstimate) -> np.ndarray:
    """``sqrt((z - t)' C^-1 (z - t))`` for every row of ``Z``."""
    Z = _as_data(Z)
    if Z.shape[1] != est.p:
        raise InvalidData(f"data has {Z.shape[1]} columns, estimate has {est.p}")
    if is_singular(est.scatter):
        raise RankDeficient("scatter matrix is singular")
    return np.sqrt(np.maximum(_sq_distances(Z, est.center, est.scatter), 0.0))


def chi2_cutoff(quantile_level: float, df: int) -> float:
    return float(np.sqrt(stats.chi2.ppf(quantile_level, df)))


def detect_outliers(
    Z: ArrayLike,
    alpha: float = 0.75,
    quantile_level: float = 0.975,
    seed: int | None = 0,
    reweight: bool = True,
    estimate: ScatterEstimate | None = None,
) -> OutlierReport:
    """Flag rows whose robust distance exceeds ``sqrt(chi2_p(quantile_level))``."""
    Z = _as_data(Z)
    if not 0 < quantile_level <= 1:
        raise ValueError(f"quantile_level must lie in (0, 1], got {quantile_level}")
    if estimate is None:
        estimate = mcd_estimate(Z, alpha=alpha, seed=seed, reweight=reweight)
    d = mahalanobis_distances(Z, estimate)
    p = Z.shape[1]
    cutoff = chi2_cutoff(quantile_level, p)
    return OutlierReport(d, cutoff, d > cutoff, quantile_level, p, estimate)
