"""Divergences between class-probability vectors and their integrated risks.

Pointwise functions act on the last axis, so a stack of vectors with shape
``(..., K)`` is handled in one call. Natural logarithms throughout.

Integrals against the product of label counting measure and the input law
are computed as input-law quadrature of label-weighted sums; there is no
separate measure object.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DataError
from .quadrature import DEFAULT_CELLS, midpoint_grid
from .rng import substream

SIMPLEX_TOL = 1e-9
MC_BUDGET = 100_000


@dataclass(frozen=True)
class RiskEstimate:
    value: float
    error: float
    method: str
    samples: int

    def __float__(self):
        return float(self.value)


def as_simplex(p, tol=SIMPLEX_TOL, name="p"):
    """Validate stacked simplex vectors; tiny negative round-off is clipped to 0."""
    p = np.asarray(p, dtype=float)
    if p.ndim == 0:
        raise ArgumentError(f"{name} must have a class axis")
    if not np.all(np.isfinite(p)):
        raise DataError(f"{name} has non-finite entries")
    if np.any(p < -tol):
        raise DataError(f"{name} has negative entries (min {p.min():.3g})")
    dev = np.abs(p.sum(axis=-1) - 1.0)
    if np.any(dev > tol):
        raise DataError(f"{name} rows do not sum to 1 (max deviation {dev.max():.3g})")
    return np.clip(p, 0.0, None)


def _pair(p, q):
    p = as_simplex(p, name="p")
    q = as_simplex(q, name="q")
    if p.shape[-1] != q.shape[-1]:
        raise ArgumentError(f"class count mismatch: {p.shape[-1]} vs {q.shape[-1]}")
    return p, q


def hellinger_sq(p, q):
    """Squared Hellinger distance 0.5 * sum_k (sqrt p_k - sqrt q_k)^2."""
    p, q = _pair(p, q)
    return 0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2, axis=-1)


def kl(p, q):
    """KL(p || q); ``inf`` when p puts mass where q has none."""
    p, q = _pair(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)
    return np.sum(terms, axis=-1)


def truncated_kl(p, q, B):
    """sum_k p_k * min(B, log(p_k / q_k)); finite for every pair."""
    if not B > 0:
        raise ArgumentError("truncation level B must be positive")
    p, q = _pair(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log(p) - np.log(q)
        terms = np.where(p > 0, p * np.minimum(B, ratio), 0.0)
    return np.sum(terms, axis=-1)


def midpoint(p, q):
    """The averaged conditional-probability function x -> (p(x) + q(x)) / 2."""

    def avg(X):
        return 0.5 * (p(X) + q(X))

    return avg


def gp_function(p, ptilde):
    """g_p(x, e_k) = 0.5 * log((p_k + ptilde_k) / (2 ptilde_k)) on {ptilde_k > 0}, else 0.

    The returned callable maps an (N, d) input array to the (N, K) matrix of
    values at every label.
    """

    def g(X):
        a = np.asarray(p(X), dtype=float)
        b = np.asarray(ptilde(X), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 0.5 * np.log((a + b) / (2.0 * b))
        return np.where(b > 0, val, 0.0)

    return g


# --------------------------------------------------------------------------
# expectations over P_X


def _quad_value(fn, px, cells):
    X, w = midpoint_grid(px.d, cells)
    vals = np.asarray(fn(X), dtype=float)
    return float(np.sum(w * px.density(X) * vals))


def expectation(fn, px, budget=None, seed=0, method=None):
    """E_X[fn(X)] for a pointwise integrand, by midpoint quadrature or Monte Carlo.

    The quadrature error is the Richardson estimate |Q_h - Q_2h| / 3.
    """
    if budget is not None and budget < 1:
        raise ArgumentError("budget must be at least 1")
    d = px.d
    if method is None:
        method = "quadrature" if d <= 3 else "mc"
    if method == "quadrature":
        if budget is None:
            if d not in DEFAULT_CELLS:
                raise ArgumentError(f"no default quadrature grid for d={d}; use method='mc'")
            cells = DEFAULT_CELLS[d]
        else:
            cells = max(2, int(round(budget ** (1.0 / d))))
        cells += cells % 2
        fine = _quad_value(fn, px, cells)
        if not np.isfinite(fine):
            return RiskEstimate(float(fine), float("nan"), "quadrature", cells**d)
        coarse = _quad_value(fn, px, cells // 2)
        return RiskEstimate(fine, abs(fine - coarse) / 3.0, "quadrature", cells**d)
    if method == "mc":
        n = MC_BUDGET if budget is None else int(budget)
        X = px.sample(substream(seed, "risk-mc"), n)
        vals = np.asarray(fn(X), dtype=float)
        mean = float(vals.mean())
        if not np.isfinite(mean):
            return RiskEstimate(mean, float("nan"), "mc", n)
        se = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
        return RiskEstimate(mean, se, "mc", n)
    raise ArgumentError(f"unknown method {method!r}")


def _checked(fn, name):
    def wrapped(X):
        out = np.asarray(fn(X), dtype=float)
        as_simplex(out, name=name)
        return out

    return wrapped


def risk(eta, phat, px, budget=None, seed=0, method=None):
    """Hellinger risk E_X[H^2(eta(X), phat(X))]."""
    e, p = _checked(eta, "eta"), _checked(phat, "phat")
    return expectation(lambda X: hellinger_sq(e(X), p(X)), px, budget, seed, method)


def risk_kl(eta, phat, px, budget=None, seed=0, method=None):
    e, p = _checked(eta, "eta"), _checked(phat, "phat")
    return expectation(lambda X: kl(e(X), p(X)), px, budget, seed, method)


def risk_truncated_kl(eta, phat, B, px, budget=None, seed=0, method=None):
    e, p = _checked(eta, "eta"), _checked(phat, "phat")
    return expectation(lambda X: truncated_kl(e(X), p(X), B), px, budget, seed, method)


def bernstein_seminorm_sq(g, M, eta, px, budget=None, seed=0, method=None):
    """rho_M^2(g) = 2 M^2 E[exp(|g|/M) - 1 - |g|/M] under P = P_X x eta(X).

    ``g`` maps (N, d) inputs to an (N, K) matrix holding g(x, e_k).
    """
    if not M > 0:
        raise ArgumentError("M must be positive")

    def integrand(X):
        vals = np.asarray(g(X), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DataError("g returned non-finite values")
        u = np.abs(vals) / M
        return 2.0 * M**2 * np.sum(eta(X) * (np.expm1(u) - u), axis=-1)

    return expectation(integrand, px, budget, seed, method)


# --------------------------------------------------------------------------
# scalar inequality behind the Bernstein-norm control


def c_gamma(Gamma):
    """2(e^G - 1 - G) / (e^{-G} - 1)^2."""
    if not Gamma > 0:
        raise ArgumentError("Gamma must be positive")
    return float(2 * (np.expm1(Gamma) - Gamma) / np.expm1(-Gamma) ** 2)


def exp_moment_slack(x, Gamma):
    """c_G^2 (e^x - 1)^2 - 2(e^|x| - 1 - |x|), nonnegative for x >= -Gamma."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -Gamma):
        raise ArgumentError("inequality only claimed for x >= -Gamma")
    a = np.abs(x)
    return c_gamma(Gamma) ** 2 * np.expm1(x) ** 2 - 2 * (np.expm1(a) - a)
