"""Two-sample t-tests and logistic regression by IRLS."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DegenerateSampleError(ValueError):
    pass


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz continued fraction for the incomplete beta
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    lbt = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(lbt)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * betainc(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    pvalue: float
    n_a: int
    n_b: int
    mean_a: float
    mean_b: float


def welch_t_test(a: Sequence[float], b: Sequence[float], equal_var: bool = False) -> TTestResult:
    """Two-sided two-sample t-test (Welch unless ``equal_var``)."""
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise DegenerateSampleError("each group needs at least two observations")
    ma, mb = math.fsum(a) / na, math.fsum(b) / nb
    va = math.fsum((v - ma) ** 2 for v in a) / (na - 1)
    vb = math.fsum((v - mb) ** 2 for v in b) / (nb - 1)
    if va == 0.0 and vb == 0.0:
        raise DegenerateSampleError("both groups have zero variance")
    if equal_var:
        df = na + nb - 2.0
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    else:
        sa, sb = va / na, vb / nb
        se = math.sqrt(sa + sb)
        # ratios keep the squares from underflowing for tiny variances
        ra, rb = sa / max(sa, sb), sb / max(sa, sb)
        df = (ra + rb) ** 2 / (ra * ra / (na - 1) + rb * rb / (nb - 1))
    if se == 0.0:
        raise DegenerateSampleError("standard error underflows to zero")
    t = (ma - mb) / se
    p = min(1.0, 2.0 * t_cdf(-abs(t), df))
    return TTestResult(t, df, p, na, nb, ma, mb)


@dataclass(frozen=True)
class LogisticFit:
    status: str  # converged | separation | singular | max_iter
    names: tuple
    coef: tuple
    se: tuple
    z: tuple
    pvalues: tuple
    iterations: int
    loglik: float
    n: int

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "n": self.n,
            "iterations": self.iterations,
            "loglik": self.loglik,
            "coefficients": {
                name: {"coef": c, "se": s, "z": z, "p": p}
                for name, c, s, z, p in zip(self.names, self.coef, self.se, self.z, self.pvalues)
            },
        }


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def _loglik(y: np.ndarray, eta: np.ndarray) -> float:
    # sum y*eta - log(1 + e^eta), stable for large |eta|
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def _result(status, names, beta, cov, it, y, eta) -> LogisticFit:
    p = len(names)
    if cov is None:
        nan = (math.nan,) * p
        return LogisticFit(status, names, tuple(map(float, beta)), nan, nan, nan, it, _loglik(y, eta), len(y))
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    z = beta / se
    pv = [math.erfc(abs(v) / math.sqrt(2.0)) for v in z]
    return LogisticFit(status, names, tuple(map(float, beta)), tuple(map(float, se)),
                       tuple(map(float, z)), tuple(pv), it, _loglik(y, eta), len(y))


def logistic_fit(X, y, names: Sequence[str] | None = None, max_iter: int = 100, tol: float = 1e-10) -> LogisticFit:
    """Maximum-likelihood logistic regression by iteratively reweighted least squares.

    ``X`` must already contain an intercept column if one is wanted. Stops when
    the largest coefficient step is below ``tol``. Complete or quasi-complete
    separation shows up as diverging linear predictors and is reported as
    status ``"separation"`` rather than as converged coefficients.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-d with one row per outcome")
    n, p = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(p))
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise ValueError("outcomes must be 0/1")
    beta = np.zeros(p)
    eta = X @ beta
    if n <= p or np.linalg.matrix_rank(X) < p:
        return _result("singular", names, beta, None, 0, y, eta)
    if y.min() == y.max():
        return _result("separation", names, beta, None, 0, y, eta)
    for it in range(1, max_iter + 1):
        mu = _sigmoid(eta)
        w = mu * (1.0 - mu)
        info = X.T @ (X * w[:, None])
        grad = X.T @ (y - mu)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            return _result("singular", names, beta, None, it, y, eta)
        if not np.all(np.isfinite(step)):
            return _result("singular", names, beta, None, it, y, eta)
        beta = beta + step
        eta = X @ beta
        if np.max(np.abs(eta)) > 30.0:
            # fitted probabilities pinned at 0/1: the MLE does not exist
            return _result("separation", names, beta, None, it, y, eta)
        if np.max(np.abs(step)) < tol:
            mu = _sigmoid(eta)
            w = mu * (1.0 - mu)
            info = X.T @ (X * w[:, None])
            try:
                cov = np.linalg.inv(info)
            except np.linalg.LinAlgError:
                return _result("singular", names, beta, None, it, y, eta)
            return _result("converged", names, beta, cov, it, y, eta)
    return _result("max_iter", names, beta, None, max_iter, y, eta)


def score_gradient(X, y, coef) -> np.ndarray:
    """X'(y - mu) at ``coef``; zero at the maximum-likelihood estimate."""
    X = np.asarray(X, dtype=float)
    return X.T @ (np.asarray(y, dtype=float) - _sigmoid(X @ np.asarray(coef, dtype=float)))
