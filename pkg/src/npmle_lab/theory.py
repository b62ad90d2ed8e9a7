"""Closed-form calculators for the bounds behind the convergence theory.

Unnamed universal constants are explicit keyword inputs (default 1) so every
evaluation is reproducible.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ArgumentError, AssumptionViolation
from .models import CompositionSpec, effective_smoothness, rate_phi_n
from .quadrature import midpoint_grid


@dataclass(frozen=True)
class BoundInputs:
    s: float
    L: float
    B: float
    m_inf: float
    K: int
    n: float
    c0_sq: float = 1.0
    A: float = 1.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not v > 0:
                raise ArgumentError(f"{name} must be positive")


def covering_bound_dnn(delta, L, m_inf, B, s):
    """log N(delta, F(L, m, s, B), sup-norm) <= 2sL log((B v 1)(m_inf+1)) + s log(L/delta)."""
    if not delta > 0:
        raise ArgumentError("delta must be positive")
    return 2 * s * L * math.log(max(B, 1.0) * (m_inf + 1)) + s * math.log(L / delta)


def bracketing_from_covering(delta, p, q_total, covering_log_fn):
    """Log bracketing number in L^p(Q) from a sup-norm covering bound at delta/(2 q^{1/p})."""
    if p < 1:
        raise ArgumentError("p must be at least 1")
    if not q_total > 0:
        raise ArgumentError("total measure must be positive")
    return covering_log_fn(delta / (2 * q_total ** (1.0 / p)))


def entropy_integral_bound(delta, s, L, A):
    if not 0 < delta < A:
        raise ArgumentError("need 0 < delta < A")
    return delta * math.sqrt(2 * s * L) * (math.sqrt(math.log(A / delta)) + math.sqrt(math.pi))


def critical_radius(s, L, A, n):
    arg = math.sqrt(n) * A
    if not arg > 1:
        raise ArgumentError("need sqrt(n) * A > 1")
    return math.sqrt(2 * s * L) * (math.sqrt(math.log(arg)) + math.sqrt(2 * math.pi)) / math.sqrt(n)


def oracle_rhs(c0_sq, delta_n, approx_risk, n, c=1.0):
    if min(c0_sq, delta_n, approx_risk, c) < 0 or n < 1:
        raise ArgumentError("inputs must be nonnegative and n >= 1")
    return 514 * (1 + c0_sq) * (delta_n**2 + approx_risk) + c**3 / n


def assumption_ratio(eta, ptilde, grid=None, cells=None):
    """max over probe points and classes of eta_k(x) / ptilde_k(x).

    ``grid`` is an (N, d) array of probe points; by default a midpoint grid.
    """
    if grid is None:
        d = eta.d
        grid, _ = midpoint_grid(d, cells or {1: 10_000, 2: 100, 3: 22}.get(d, 6))
    X = np.atleast_2d(np.asarray(grid, dtype=float))
    E = np.asarray(eta(X), dtype=float)
    P = np.asarray(ptilde(X), dtype=float)
    bad = np.argwhere(~(P > 0) & (E > 0))
    if bad.size:
        where = [(X[i].tolist(), int(k)) for i, k in bad[:20]]
        raise AssumptionViolation(f"ptilde vanishes at {len(bad)} probe (x, k) pairs", where)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(E > 0, E / P, 0.0)
    return float(ratio.max())


def _pairs(beta_star, t):
    beta_star = np.atleast_1d(np.asarray(beta_star, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if beta_star.shape != t.shape:
        raise ArgumentError("beta_star and t must have equal length")
    return beta_star, t


def A_constant(K, B, m_inf, L, N, beta_star, t):
    """sqrt(2)(K-1)sqrt(K)(B v 1)(m_inf+1)L divided by max_i N^{-beta_i*/t_i}."""
    if N < 2:
        raise ArgumentError("N must be at least 2")
    bs, tt = _pairs(beta_star, t)
    denom = max(float(N) ** (-b / ti) for b, ti in zip(bs, tt))
    return math.sqrt(2) * (K - 1) * math.sqrt(K) * max(B, 1.0) * (m_inf + 1) * L / denom


def _rate_max(spec, fn):
    bs = effective_smoothness(spec)
    return max(fn(b, t) for b, t in zip(bs, spec.t))


def svb_rate(alpha, spec, n):
    """Rate under a small-value bound with exponent alpha."""
    if alpha < 0:
        raise ArgumentError("alpha must be nonnegative")
    return _rate_max(spec, lambda b, t: n ** (-(1 + alpha) * b / ((1 + alpha) * b + t)))


def k_rate(spec, n, K=None):
    """phi_n with the explicit dependence on the number of classes."""
    K = spec.K if K is None else K
    return _rate_max(spec, lambda b, t: K ** ((2 * b + 3 * t) / (b + t)) * n ** (-b / (b + t)))


def besov_effective(beta):
    beta = np.asarray(beta, dtype=float)
    if beta.size == 0 or np.any(beta <= 0):
        raise ArgumentError("smoothness values must be positive")
    return float(1.0 / np.sum(1.0 / beta)), float(beta.max())


def besov_rate(beta_tilde, n):
    return float(n) ** (-1.0 / (beta_tilde + 1))


def theory_pipeline(spec: CompositionSpec, n, C=1.0, c0_sq=1.0, c=1.0):
    """Evaluate the oracle bound for the architecture used in the rate theorem.

    The network size is chosen with N^2 = max_i n^{t_i/(beta_i*+t_i)}, so that
    s = N^2 log N, L = log n, width N and the approximation error is
    K^2 (4 + C) max_i N^{-2 beta_i*/t_i}. Continuous (unrounded) sizes keep
    the output smooth in n.
    """
    bs = effective_smoothness(spec)
    K = spec.K
    N = max(float(n) ** (t / (2 * (b + t))) for b, t in zip(bs, spec.t))
    if N < 2:
        raise ArgumentError("n too small for N >= 2")
    L = math.log(n)
    s = N * N * math.log(N)
    phi, _ = rate_phi_n(spec, n)
    B = max((n * phi) ** ((2 * b + 2) / t) for b, t in zip(spec.beta, spec.t))
    A = A_constant(K, B, N, L, N, bs, spec.t)
    dn = critical_radius(s, L, A, n)
    approx = K * K * (4 + C) * max(N ** (-2 * b / t) for b, t in zip(bs, spec.t))
    return {"n": n, "N": N, "L": L, "s": s, "B": B, "A": A, "delta_n": dn,
            "approx_risk": approx, "phi_n": phi, "rhs": oracle_rhs(c0_sq, dn, approx, n, c)}


CALCULATORS = {
    "covering": lambda p: covering_bound_dnn(p["delta"], p["L"], p["m_inf"], p["B"], p["s"]),
    "bracketing": lambda p: bracketing_from_covering(
        p["delta"], p.get("p", 2), p["q_total"],
        lambda d: covering_bound_dnn(d, p["L"], p["m_inf"], p["B"], p["s"])),
    "entropy-integral": lambda p: entropy_integral_bound(p["delta"], p["s"], p["L"], p["A"]),
    "critical-radius": lambda p: critical_radius(p["s"], p["L"], p["A"], p["n"]),
    "oracle-rhs": lambda p: oracle_rhs(p["c0_sq"], p["delta_n"], p["approx_risk"], p["n"], p.get("c", 1.0)),
    "A-constant": lambda p: A_constant(p["K"], p["B"], p["m_inf"], p["L"], p["N"], p["beta_star"], p["t"]),
    "svb-rate": lambda p: svb_rate(p["alpha"], CompositionSpec.from_dict(p["spec"]), p["n"]),
    "k-rate": lambda p: k_rate(CompositionSpec.from_dict(p["spec"]), p["n"]),
    "phi-n": lambda p: rate_phi_n(CompositionSpec.from_dict(p["spec"]), p["n"])[0],
    "beta-star": lambda p: effective_smoothness(p["beta"]),
    "besov": lambda p: dict(zip(("beta_tilde", "beta_bar", "rate"), (
        *besov_effective(p["beta"]), besov_rate(besov_effective(p["beta"])[0], p["n"])))),
    "pipeline": lambda p: theory_pipeline(CompositionSpec.from_dict(p["spec"]), p["n"]),
}


def evaluate(name, params):
    """Dispatch a named calculator on a parameter dict (used by the CLI)."""
    try:
        fn = CALCULATORS[name]
    except KeyError:
        raise ArgumentError(f"unknown calculator {name!r}; choose from {sorted(CALCULATORS)}") from None
    try:
        return fn(params)
    except KeyError as exc:
        raise ArgumentError(f"missing parameter {exc.args[0]!r} for {name}") from None
