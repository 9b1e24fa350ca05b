"""Data preparation and the sufficient-statistic linear algebra.

Everything downstream of :func:`compute_suffstats` works on p-dimensional
Gram quantities, so the cost of evaluating one candidate model does not grow
with the sample size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import NonFinite, NotPositiveDefinite, RankDeficient, ValidationError

#: Centered Z is rejected when sigma_min <= RANK_RTOL * sigma_max.
RANK_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class Dataset:
    """Centered outcome ``y``, exposure ``d`` and instrument matrix ``Z``."""

    y: np.ndarray
    d: np.ndarray
    Z: np.ndarray

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True, eq=False)
class SufficientStats:
    ZtZ: np.ndarray
    Ztd: np.ndarray
    Zty: np.ndarray
    dtd: float
    dty: float
    yty: float
    n: int

    @property
    def p(self) -> int:
        return self.ZtZ.shape[0]

    @cached_property
    def chol_ZtZ(self) -> np.ndarray:
        """Lower Cholesky factor L with L L' = Z'Z."""
        return cholesky(self.ZtZ)

    @cached_property
    def white_d(self) -> np.ndarray:
        """L^{-1} Z'd, so that d'P_Z d = |white_d|^2."""
        return solve_triangular(self.chol_ZtZ, self.Ztd, lower=True)

    @cached_property
    def white_y(self) -> np.ndarray:
        """L^{-1} Z'y."""
        return solve_triangular(self.chol_ZtZ, self.Zty, lower=True)

    @cached_property
    def white_Z(self) -> np.ndarray:
        """L^{-1} Z'Z, which is just L'."""
        return np.ascontiguousarray(self.chol_ZtZ.T)

    @cached_property
    def logdet_ZtZ_over_n(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol_ZtZ)))) - self.p * np.log(self.n)


def _as_float_array(x, ndim: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim == 1 and ndim == 2:
        arr = arr[:, None]
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return arr


def check_rank(Z: np.ndarray, rtol: float = RANK_RTOL) -> None:
    n, p = Z.shape
    if p < 1 or n <= p:
        raise RankDeficient(f"need n > p >= 1, got n={n}, p={p}")
    s = np.linalg.svd(Z, compute_uv=False)
    if not s[-1] > rtol * s[0]:
        ratio = s[-1] / s[0] if s[0] > 0 else 0.0
        raise RankDeficient(f"instrument matrix is rank deficient (sigma_min/sigma_max = {ratio:.3g})")


def center(raw_y, raw_d, raw_Z) -> Dataset:
    """Subtract column means and validate the instrument matrix.

    >>> ds = center([1, 3], [2, 2], [[1], [5]])
    >>> ds.y.tolist(), ds.d.tolist(), ds.Z.tolist()
    ([-1.0, 1.0], [0.0, 0.0], [[-2.0], [2.0]])
    """
    y = _as_float_array(raw_y, 1, "y")
    d = _as_float_array(raw_d, 1, "d")
    Z = _as_float_array(raw_Z, 2, "Z")
    n = Z.shape[0]
    if y.shape[0] != n or d.shape[0] != n:
        raise ValidationError(f"length mismatch: y={y.shape[0]}, d={d.shape[0]}, Z={n}")
    if n < 2:
        raise ValidationError("need at least two observations")
    y = y - y.mean()
    d = d - d.mean()
    Z = Z - Z.mean(axis=0)
    check_rank(Z)
    return Dataset(y=y, d=d, Z=Z)


def compute_suffstats(data: Dataset) -> SufficientStats:
    Z, d, y = data.Z, data.d, data.y
    ZtZ = Z.T @ Z
    ZtZ = 0.5 * (ZtZ + ZtZ.T)
    return SufficientStats(
        ZtZ=ZtZ,
        Ztd=Z.T @ d,
        Zty=Z.T @ y,
        dtd=float(d @ d),
        dty=float(d @ y),
        yty=float(y @ y),
        n=data.n,
    )


def cholesky(A: np.ndarray, sym_rtol: float = 1e-10) -> np.ndarray:
    """Lower Cholesky factor, with no jitter: failure raises."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A - A.T), initial=0.0) > sym_rtol * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.isfinite(L)) or np.any(np.diag(L) <= 0.0):
        raise NotPositiveDefinite("Cholesky factor has a non-positive pivot")
    return L


def spd_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``A X = B`` for symmetric positive definite ``A``."""
    L = cholesky(A)
    B = np.asarray(B, dtype=float)
    W = solve_triangular(L, B, lower=True)
    return solve_triangular(L.T, W, lower=False)


def logdet_spd(A: np.ndarray) -> float:
    L = cholesky(A)
    return 2.0 * float(np.sum(np.log(np.diag(L))))
