"""Marginal and conditional independence tests.

Three tests with one result type:

* ``hsic_test`` — Hilbert-Schmidt independence criterion with Gaussian
  kernels; detects arbitrary nonlinear dependence without distributional
  assumptions. The null is approximated by a moment-matched gamma
  distribution; a permutation null is available as a verification mode.
* ``kernel_ci_test`` — conditional version: both variables are
  residualized on the conditioning set by kernel ridge regression and the
  residual pair is handed to ``hsic_test``.
* ``fisher_z_test`` — the classical linear baseline: partial correlation
  of regression residuals with the Fisher variance-stabilizing transform.

All tests are pure functions of their inputs (plus the explicit seed in
permutation mode) and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import cho_factor, cho_solve

MEDIAN_HEURISTIC_CAP = 1000


@dataclass(frozen=True)
class CiTestResult:
    """Outcome of one (in)dependence query."""

    statistic: float
    p_value: float
    independent: bool
    test_name: str
    conditioning_size: int


@dataclass(frozen=True)
class KernelConfig:
    """Kernel test parameters.

    ``bandwidth`` is either the string ``"median"`` (median pairwise
    distance, the default) or a fixed positive width. ``regularization``
    is the per-sample ridge used when residualizing on a conditioning
    set; the linear system solved is (K + n * regularization * I).
    """

    bandwidth: float | str = "median"
    regularization: float = 1e-3

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median":
                raise ValueError(f"unknown bandwidth rule {self.bandwidth!r}")
        elif self.bandwidth <= 0:
            raise ValueError("fixed bandwidth must be positive")
        if self.regularization <= 0:
            raise ValueError("regularization must be positive")


def _subsample(n: int) -> np.ndarray | slice:
    if n <= MEDIAN_HEURISTIC_CAP:
        return slice(None)
    return np.linspace(0, n - 1, MEDIAN_HEURISTIC_CAP).astype(int)


def median_heuristic(x) -> float:
    """Median of pairwise absolute differences.

    For long vectors the pairs are taken over an evenly spaced subsample
    of at most 1000 points, keeping the O(n^2) enumeration bounded while
    staying deterministic.
    """
    x = np.asarray(x, dtype=float).ravel()
    if len(x) < 2:
        raise ValueError("median heuristic needs at least 2 values")
    sub = x[_subsample(len(x))]
    diffs = np.abs(sub[:, None] - sub[None, :])
    med = float(np.median(diffs[np.triu_indices(len(sub), k=1)]))
    if med <= 0.0:
        raise ValueError("constant vector: median pairwise difference is zero")
    return med


def _median_heuristic_rows(z: np.ndarray) -> float:
    """Median pairwise Euclidean distance between rows, same cap."""
    sub = z[_subsample(z.shape[0])]
    sq = np.sum(sub**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * sub @ sub.T, 0.0)
    d = np.sqrt(d2[np.triu_indices(len(sub), k=1)])
    med = float(np.median(d))
    if med <= 0.0:
        raise ValueError("conditioning rows are constant: zero median distance")
    return med


def _bandwidth(x: np.ndarray, cfg: KernelConfig) -> float:
    if cfg.bandwidth == "median":
        return median_heuristic(x)
    return float(cfg.bandwidth)


def _rbf_gram(x: np.ndarray, bandwidth: float) -> np.ndarray:
    d2 = (x[:, None] - x[None, :]) ** 2
    return np.exp(-d2 / (2.0 * bandwidth**2))


def _center(K: np.ndarray) -> np.ndarray:
    row = K.mean(axis=1, keepdims=True)
    col = K.mean(axis=0, keepdims=True)
    return K - row - col + K.mean()


def _check_pair(x, y, min_n: int = 5) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < min_n:
        raise ValueError(f"need at least {min_n} samples, got {len(x)}")
    return x, y


def hsic_statistic(x, y, cfg: KernelConfig = KernelConfig()) -> float:
    """Biased HSIC estimate: trace(K H L H) / n^2 with Gaussian kernels.

    Symmetric in its arguments and nonnegative up to rounding.
    """
    x, y = _check_pair(x, y)
    K = _rbf_gram(x, _bandwidth(x, cfg))
    L = _rbf_gram(y, _bandwidth(y, cfg))
    n = len(x)
    return float(np.sum(_center(K) * _center(L)) / n**2)


def _gamma_pvalue(Kc: np.ndarray, Lc: np.ndarray, K: np.ndarray, L: np.ndarray) -> float:
    """Moment-matched gamma tail probability for n * HSIC under the null."""
    n = K.shape[0]
    if n < 6:
        raise ValueError("gamma null approximation needs n >= 6; use the "
                         "permutation null for tiny samples")
    test_stat = float(np.sum(Kc * Lc) / n)

    mu_x = (K.sum() - np.trace(K)) / (n * (n - 1))
    mu_y = (L.sum() - np.trace(L)) / (n * (n - 1))
    mean_h = (1.0 + mu_x * mu_y - mu_x - mu_y) / n

    prod = (Kc * Lc / 6.0) ** 2
    var_h = (prod.sum() - np.trace(prod)) / (n * (n - 1))
    var_h *= 72.0 * (n - 4) * (n - 5) / (n * (n - 1) * (n - 2) * (n - 3))
    var_h = max(var_h, 1e-300)

    shape = mean_h**2 / var_h
    scale = n * var_h / mean_h
    return float(stats.gamma.sf(test_stat, a=shape, scale=scale))


def hsic_test(x, y, level: float = 0.05, cfg: KernelConfig = KernelConfig(), *,
              null: str = "gamma", permutations: int = 200, seed: int = 0) -> CiTestResult:
    """HSIC independence test.

    ``null="gamma"`` (default) matches the first two moments of the null
    distribution of n * HSIC; ``null="permutation"`` recomputes the
    statistic under ``permutations`` seeded shuffles of ``y`` and is the
    slow reference mode.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    x, y = _check_pair(x, y)
    n = len(x)
    K = _rbf_gram(x, _bandwidth(x, cfg))
    L = _rbf_gram(y, _bandwidth(y, cfg))
    Kc = _center(K)
    Lc = _center(L)
    statistic = float(np.sum(Kc * Lc) / n**2)

    if null == "gamma":
        p_value = _gamma_pvalue(Kc, Lc, K, L)
    elif null == "permutation":
        rng = np.random.default_rng(seed)
        count = 0
        for _ in range(permutations):
            perm = rng.permutation(n)
            perm_stat = float(np.sum(Kc * Lc[np.ix_(perm, perm)]) / n**2)
            if perm_stat >= statistic:
                count += 1
        p_value = (1.0 + count) / (1.0 + permutations)
    else:
        raise ValueError(f"unknown null mode {null!r}")

    return CiTestResult(statistic=statistic, p_value=p_value,
                        independent=p_value > level, test_name="hsic",
                        conditioning_size=0)


def _standardize_conditioners(given: list[np.ndarray], n: int) -> np.ndarray:
    cols = []
    for j, z in enumerate(given):
        if len(z) != n:
            raise ValueError("conditioning vector length mismatch")
        sd = z.std(ddof=1)
        if sd <= 0:
            raise ValueError(f"conditioning vector {j} is constant")
        cols.append((z - z.mean()) / sd)
    return np.column_stack(cols)


def _conditioner_factor(zmat: np.ndarray, ridge: float):
    """Gram matrix of the conditioning rows and its ridge factorization."""
    bw = _median_heuristic_rows(zmat)
    sq = np.sum(zmat**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * zmat @ zmat.T, 0.0)
    K = np.exp(-d2 / (2.0 * bw**2))
    n = K.shape[0]
    factor = cho_factor(K + n * ridge * np.eye(n), lower=True)
    return K, factor


def _kernel_residual(target: np.ndarray, K: np.ndarray, factor) -> np.ndarray:
    centered = target - target.mean()
    return centered - K @ cho_solve(factor, centered)


def kernel_ci_test(x, y, given, level: float = 0.05,
                   cfg: KernelConfig = KernelConfig(), *,
                   null: str = "gamma", permutations: int = 200,
                   seed: int = 0) -> CiTestResult:
    """Conditional independence test by residualization.

    Both variables are regressed on the conditioning set with Gaussian
    kernel ridge regression (conditioning columns standardized first,
    bandwidth from the median pairwise row distance), then the residual
    pair is tested with ``hsic_test``. An empty conditioning set
    delegates to ``hsic_test`` unchanged.
    """
    given = [np.asarray(z, dtype=float).ravel() for z in given]
    if not given:
        return hsic_test(x, y, level, cfg, null=null, permutations=permutations,
                         seed=seed)
    x, y = _check_pair(x, y)
    zmat = _standardize_conditioners(given, len(x))
    K, factor = _conditioner_factor(zmat, cfg.regularization)
    rx = _kernel_residual(x, K, factor)
    ry = _kernel_residual(y, K, factor)
    inner = hsic_test(rx, ry, level, cfg, null=null, permutations=permutations,
                      seed=seed)
    return CiTestResult(statistic=inner.statistic, p_value=inner.p_value,
                        independent=inner.independent, test_name="kernel_ci",
                        conditioning_size=len(given))


def fisher_z_test(x, y, given=(), level: float = 0.05) -> CiTestResult:
    """Partial-correlation test with the Fisher z transform.

    Residualizes both variables on the conditioning set by ordinary least
    squares (with intercept), correlates the residuals, and compares
    sqrt(n - |Z| - 3) * atanh(r) against a standard normal (two-sided).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    x, y = _check_pair(x, y, min_n=2)
    given = [np.asarray(z, dtype=float).ravel() for z in given]
    k = len(given)
    n = len(x)
    if n <= k + 3:
        raise ValueError(f"need n > |Z| + 3 ({k + 3}), got n = {n}")

    design = np.column_stack([np.ones(n)] + given) if given else np.ones((n, 1))
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise ValueError("conditioning set is perfectly collinear")
    coef_x, *_ = np.linalg.lstsq(design, x, rcond=None)
    coef_y, *_ = np.linalg.lstsq(design, y, rcond=None)
    res_x = x - design @ coef_x
    res_y = y - design @ coef_y

    sx = float(np.sqrt(np.dot(res_x, res_x)))
    sy = float(np.sqrt(np.dot(res_y, res_y)))
    if sx == 0.0 or sy == 0.0:
        r = 0.0
    else:
        r = float(np.dot(res_x, res_y) / (sx * sy))
    r = min(max(r, -1.0 + 1e-12), 1.0 - 1e-12)

    statistic = float(np.sqrt(n - k - 3) * np.arctanh(r))
    p_value = float(2.0 * stats.norm.sf(abs(statistic)))
    return CiTestResult(statistic=statistic, p_value=p_value,
                        independent=p_value > level, test_name="fisher_z",
                        conditioning_size=k)
