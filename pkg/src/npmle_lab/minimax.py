"""The hard-instance family behind the minimax lower bound, built and checked numerically.

Hypotheses are p_W = (f_{w_1}, ..., f_{w_{K-1}}, 1 - sum f) where each f_w
switches disjoint bumps psi_u^B on or off over a regular grid of cells.

The construction asks for the bump profile to have sup norm 1 (the source
writes this for a symbol S, read here as the profile xi) and also to lie in
the unit Hoelder ball after scaling by b. Both cannot hold for every beta*;
Hoelder membership wins, and the resulting sup norm is reported as
``BumpSpec.xi_sup``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .datagen import InputLaw
from .errors import ArgumentError, ConstructionError, NumericError, PackingNotFoundError
from .metrics import hellinger_sq, kl
from .models import holder_norm_scan
from .quadrature import gauss_legendre_cells, midpoint_grid, tensor_rule
from .rng import substream

PACKING_CAP = 64


def bump_xi(z, beta_star, b=1.0):
    """b 2^{2 beta} z^beta (1 - z)^beta on [0, 1], zero elsewhere."""
    z = np.asarray(z, dtype=float)
    inside = (z > 0) & (z < 1)
    zc = np.where(inside, z, 0.5)
    return np.where(inside, b * 4.0**beta_star * (zc * (1 - zc)) ** beta_star, 0.0)


def _xi_derivs(beta_star, b):
    """Callables for xi and its derivatives up to order ceil(beta) - 1 (at most 2 needed here)."""
    c = b * 4.0**beta_star

    def d0(z):
        return bump_xi(z, beta_star, b)

    def d1(z):
        z = np.asarray(z, dtype=float)
        inside = (z > 0) & (z < 1)
        zc = np.where(inside, z, 0.5)
        g = zc * (1 - zc)
        return np.where(inside, c * beta_star * g ** (beta_star - 1) * (1 - 2 * zc), 0.0)

    def d2(z):
        z = np.asarray(z, dtype=float)
        inside = (z > 0) & (z < 1)
        zc = np.where(inside, z, 0.5)
        g = zc * (1 - zc)
        val = beta_star * ((beta_star - 1) * g ** (beta_star - 2) * (1 - 2 * zc) ** 2 - 2 * g ** (beta_star - 1))
        return np.where(inside, c * val, 0.0)

    return (d0, d1, d2)


def bump_norm(beta_star, b=1.0, grid=None):
    """Empirical Hölder norm of xi on a probe grid that extends past its support."""
    if beta_star > 3:
        raise ArgumentError("bump Hölder scan implemented for beta* <= 3")
    if grid is None:
        grid = np.linspace(-0.25, 1.25, 6001)
    return holder_norm_scan(_xi_derivs(beta_star, b), beta_star, grid)


def bump_b(beta_star, grid=None):
    """Largest b whose bump passes the radius-1 Hölder scan (the norm is linear in b)."""
    return 1.0 / bump_norm(beta_star, 1.0, grid)


def xi_power_norms(beta_star, b, B_exp):
    """(||xi^B||_1, ||xi^B||_2^2) by adaptive 1-d quadrature."""
    f1 = lambda z: float(bump_xi(z, beta_star, b)) ** B_exp
    f2 = lambda z: float(bump_xi(z, beta_star, b)) ** (2 * B_exp)
    n1, e1 = integrate.quad(f1, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12)
    n2, e2 = integrate.quad(f2, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12)
    if max(e1, e2) > 1e-9:
        raise NumericError("bump norm quadrature did not converge")
    return n1, n2


def grid_m_n(rho, K, n, beta_dstar, t_star):
    if rho < 1:
        raise ArgumentError("rho must be at least 1")
    return math.ceil(rho * K ** (1.0 / beta_dstar) * n ** (1.0 / (beta_dstar + t_star)))


def smallness_rhs(Gamma, norm1, norm2_sq, t_star):
    return 1.0 / (144 * Gamma * math.log2(math.e) * (norm1**t_star + norm2_sq**t_star))


def smallness_holds(m, n, K, beta_dstar, t_star, Gamma, norm1, norm2_sq):
    h = 1.0 / m
    return n * (K - 1) * h ** (beta_dstar + t_star) <= smallness_rhs(Gamma, norm1, norm2_sq, t_star)


def choose_rho(n, K, beta_dstar, t_star, Gamma, norm1, norm2_sq):
    """Smallest rho >= 1 (up to the grid ceiling) for which the smallness inequality holds."""
    rhs = smallness_rhs(Gamma, norm1, norm2_sq, t_star)
    m_req = math.ceil((n * (K - 1) / rhs) ** (1.0 / (beta_dstar + t_star)))
    while not smallness_holds(m_req, n, K, beta_dstar, t_star, Gamma, norm1, norm2_sq):
        m_req += 1
    base = K ** (1.0 / beta_dstar) * n ** (1.0 / (beta_dstar + t_star))
    rho = max(1.0, m_req / base)
    # ceil(rho * base) may land one below m_req through rounding
    while grid_m_n(rho, K, n, beta_dstar, t_star) < m_req:
        rho = np.nextafter(rho, math.inf)
    return float(rho)


@dataclass(frozen=True)
class BumpSpec:
    beta_star: float
    t_star: int
    B_exp: float = 1.0
    b: Optional[float] = None  # None: computed from the Hölder scan
    rho: float = 1.0

    def __post_init__(self):
        if self.beta_star <= 0 or self.t_star < 1 or not 0 < self.B_exp <= 1:
            raise ArgumentError("need beta* > 0, t* >= 1 and 0 < B <= 1")
        if self.rho < 1:
            raise ArgumentError("rho must be at least 1")
        if self.b is None:
            object.__setattr__(self, "b", bump_b(self.beta_star))

    @property
    def beta_dstar(self):
        return self.beta_star * self.B_exp

    @property
    def xi_sup(self):
        return float(self.b)

    def norms(self):
        return xi_power_norms(self.beta_star, self.b, self.B_exp)

    def to_dict(self):
        return {"beta_star": self.beta_star, "beta_dstar": self.beta_dstar, "t_star": self.t_star,
                "B_exp": self.B_exp, "b": self.b, "rho": self.rho, "xi_sup": self.xi_sup}


def make_bump_spec(n, K, beta_star, t_star, B_exp=1.0, law=None):
    """BumpSpec with b from the Hölder scan and rho passing the smallness check."""
    law = law or InputLaw("uniform", t_star)
    probe = BumpSpec(beta_star, t_star, B_exp)
    n1, n2 = probe.norms()
    rho = choose_rho(n, K, probe.beta_dstar, t_star, law.Gamma, n1, n2)
    return BumpSpec(beta_star, t_star, B_exp, probe.b, rho)


def psi_u(x, u, h, beta_star, b):
    """h^beta prod_j xi((x_j - u_j)/h); supported on the cell u + [0, h]^t."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.asarray(u, dtype=float)
    return h**beta_star * np.prod(bump_xi((x - u) / h, beta_star, b), axis=1)


def hamming(a, b):
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def vg_packing(length, min_dist, target_size, budget=200_000, seed=0):
    """Greedy-random binary packing containing the all-ones string.

    Candidates are drawn uniformly and kept when at Hamming distance
    >= min_dist from every kept string.
    """
    if target_size < 2:
        raise ArgumentError("target size must be at least 2")
    if min_dist > length:
        raise ArgumentError("min_dist exceeds the string length")
    rng = substream(seed, "packing")
    kept = np.ones((1, length), dtype=np.int8)
    for _ in range(budget):
        if kept.shape[0] >= target_size:
            break
        cand = rng.integers(0, 2, size=length, dtype=np.int8)
        if np.min(np.count_nonzero(kept != cand, axis=1)) >= min_dist:
            kept = np.vstack([kept, cand])
    if kept.shape[0] < target_size:
        raise PackingNotFoundError(
            f"found {kept.shape[0]} of {target_size} strings at distance {min_dist} within budget {budget}")
    return [row.copy() for row in kept]


@dataclass(frozen=True)
class Hypothesis:
    """Evaluable p_W on [0,1]^d (only the first t* coordinates matter)."""

    hs: "HypothesisSet" = field(repr=False)
    index: int
    d: int
    label: str = ""

    def __call__(self, X):
        return self.hs.evaluate(self.index, X)

    @property
    def K(self):
        return self.hs.K


@dataclass(frozen=True)
class HypothesisSet:
    spec: BumpSpec
    n: int
    K: int
    m: int
    W: tuple  # (K-1, m^t) int8 arrays, base first
    base_index: int = 0
    d: int = 0

    @property
    def h(self):
        return 1.0 / self.m

    @property
    def size(self):
        return len(self.W)

    @property
    def cells(self):
        t = self.spec.t_star
        idx = np.indices((self.m,) * t).reshape(t, -1).T
        return idx * self.h

    def bump_values(self, X):
        """(cell index, psi^B) for each point; points share at most one active cell."""
        X = np.atleast_2d(np.asarray(X, dtype=float))[:, : self.spec.t_star]
        cell = np.clip(np.floor(X * self.m), 0, self.m - 1).astype(int)
        flat = np.ravel_multi_index(tuple(cell.T), (self.m,) * self.spec.t_star)
        psi = psi_u(X, cell * self.h, self.h, self.spec.beta_star, self.spec.b)
        return flat, psi**self.spec.B_exp

    def evaluate(self, index, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        flat, psiB = self.bump_values(X)
        f = self.W[index][:, flat].T * psiB[:, None]
        return np.column_stack([f, 1.0 - f.sum(axis=1)])

    def hypothesis(self, index):
        return Hypothesis(self, index, self.d or self.spec.t_star, f"minimax-W{index}")

    def describe(self):
        return {"n": self.n, "K": self.K, "m_n": self.m, "h_n": self.h, "size": self.size,
                "cells": self.m**self.spec.t_star, "min_distance": required_distance(self.m, self.K, self.spec.t_star),
                "spec": self.spec.to_dict(), "W": [w.ravel().tolist() for w in self.W]}


def required_distance(m, K, t_star):
    return math.ceil(m**t_star * (K - 1) / 8)


def build_hypotheses(n, K, spec: BumpSpec, cap=PACKING_CAP, seed=0, budget=200_000, probe=10_000, d=None,
                     max_length=200_000):
    """Grid, packing and evaluable hypotheses; every p_W is checked on a probe grid.

    With rho >= 1 the grid already gives (K-1) h^beta** <= (K-1)/K, so the
    positivity guard is a safety net for hand-built specs.
    """
    t = spec.t_star
    m = grid_m_n(spec.rho, K, n, spec.beta_dstar, t)
    h = 1.0 / m
    if not (K - 1) * h**spec.beta_dstar < 1:
        raise ConstructionError(f"positivity bound (K-1) h^beta** = {(K - 1) * h**spec.beta_dstar:.6g} is not below 1")
    cells = m**t
    length = (K - 1) * cells
    if length > max_length:
        raise ConstructionError(f"hypothesis strings of length {length} exceed the limit {max_length}")
    exponent = length / 8
    target = max(2, min(cap, math.ceil(2.0**exponent))) if exponent < 64 else max(2, cap)
    strings = vg_packing(length, required_distance(m, K, t), target, budget, seed)
    W = tuple(s.reshape(K - 1, cells) for s in strings)
    hs = HypothesisSet(spec, n, K, m, W, 0, d or t)
    per_axis = max(2, round(probe ** (1.0 / t)))
    X, _ = midpoint_grid(t, per_axis)
    top = h**spec.beta_dstar * spec.b ** (t * spec.B_exp)
    for i in range(hs.size):
        P = hs.evaluate(i, X)
        f = P[:, :-1]
        if np.any(f < 0) or np.any(f > top * (1 + 1e-12)) or np.any(f.sum(axis=1) >= 1):
            raise ConstructionError(f"hypothesis {i} leaves the simplex on the probe grid")
    return hs


def _rule(hs, order):
    """Composite Gauss-Legendre on the bump grid: kinks land on cell edges."""
    edges = np.linspace(0.0, 1.0, hs.m + 1)
    x, w = gauss_legendre_cells(edges, order)
    return tensor_rule(x, w, hs.spec.t_star)


def _integrate(hs, fn, law, order, tol):
    vals = []
    for q in (order, 2 * order):
        X, w = _rule(hs, q)
        vals.append(float(np.sum(w * law.density(X) * fn(X))))
    if abs(vals[1] - vals[0]) > tol:
        raise NumericError(f"quadrature did not settle: {vals[0]!r} vs {vals[1]!r}")
    return vals[1]


def separation_bounds(hs, ham, gamma):
    """Stated lower bound Ham h^{beta**+t} ||xi^B||_1^t gamma, and the same with the 1/2
    carried by the squared Hellinger distance."""
    n1, _ = hs.spec.norms()
    t = hs.spec.t_star
    stated = ham * hs.h ** (hs.spec.beta_dstar + t) * n1**t * gamma
    return stated, 0.5 * stated


def verify_separation(hs, i, j, law=None, order=16, tol=1e-6):
    law = law or InputLaw("uniform", hs.spec.t_star)
    ham = hamming(hs.W[i], hs.W[j])
    if i == j:
        return {"pair": [i, j], "ham": 0, "risk": 0.0, "stated_bound": 0.0, "corrected_bound": 0.0,
                "stated_ok": True, "corrected_ok": True}
    R = _integrate(hs, lambda X: hellinger_sq(hs.evaluate(i, X), hs.evaluate(j, X)), law, order, tol)
    stated, corrected = separation_bounds(hs, ham, law.gamma)
    return {"pair": [i, j], "ham": ham, "risk": R, "stated_bound": stated, "corrected_bound": corrected,
            "stated_ok": R >= stated - tol, "corrected_ok": R >= corrected - tol}


def verify_all_separation(hs, law=None, order=16, tol=1e-6):
    """All pairs of the (capped) packing, sharing one quadrature evaluation per hypothesis."""
    law = law or InputLaw("uniform", hs.spec.t_star)
    rules = [_rule(hs, q) for q in (order, 2 * order)]
    sqrt_P = [[np.sqrt(hs.evaluate(k, X)) for k in range(hs.size)] for X, _ in rules]
    dens = [w * law.density(X) for X, w in rules]
    pairs = []
    for i in range(hs.size):
        for j in range(i + 1, hs.size):
            vals = [float(np.sum(dw * 0.5 * np.sum((S[i] - S[j]) ** 2, axis=1))) for S, dw in zip(sqrt_P, dens)]
            if abs(vals[1] - vals[0]) > tol:
                raise NumericError(f"quadrature did not settle on pair ({i}, {j})")
            ham = hamming(hs.W[i], hs.W[j])
            stated, corrected = separation_bounds(hs, ham, law.gamma)
            pairs.append({"pair": [i, j], "ham": ham, "risk": vals[1], "stated_bound": stated,
                          "corrected_bound": corrected, "stated_ok": vals[1] >= stated - tol,
                          "corrected_ok": vals[1] >= corrected - tol})
    return {
        "pairs": len(pairs),
        "min_ham": min(p["ham"] for p in pairs),
        "required_ham": required_distance(hs.m, hs.K, hs.spec.t_star),
        "stated_failures": sum(not p["stated_ok"] for p in pairs),
        "corrected_failures": sum(not p["corrected_ok"] for p in pairs),
        "min_ratio_stated": min(p["risk"] / p["stated_bound"] for p in pairs),
        "min_ratio_corrected": min(p["risk"] / p["corrected_bound"] for p in pairs),
        "stated_ok": all(p["stated_ok"] for p in pairs),
        "corrected_ok": all(p["corrected_ok"] for p in pairs),
        "details": pairs,
    }


def kl_bound(hs, n, Gamma):
    """Per-hypothesis bound 2 n Gamma (K-1)^2 m^t h^{beta**+t} (||xi^B||_1^t + ||xi^B||_2^{2t})."""
    n1, n2 = hs.spec.norms()
    t = hs.spec.t_star
    return 2 * n * Gamma * (hs.K - 1) ** 2 * hs.m**t * hs.h ** (hs.spec.beta_dstar + t) * (n1**t + n2**t)


def verify_kl_budget(hs, n=None, law=None, order=16, tol=1e-6):
    n = hs.n if n is None else n
    law = law or InputLaw("uniform", hs.spec.t_star)
    base = hs.base_index
    bound = kl_bound(hs, n, law.Gamma)
    per = []
    for i in range(hs.size):
        if i == base:
            per.append(0.0)
            continue
        val = n * _integrate(hs, lambda X: kl(hs.evaluate(i, X), hs.evaluate(base, X)), law, order, tol / n)
        if not math.isfinite(val):
            raise NumericError(f"infinite KL for hypothesis {i}")
        per.append(val)
    size = hs.size
    total = float(np.sum(per))
    M = size - 1
    return {
        "per_hypothesis": per,
        "bound": bound,
        "per_ok": all(v <= bound + tol for v in per),
        "max_kl": max(per),
        "aggregate": total,
        "budget": size * math.log(size) / 9,
        "budget_strict": M * math.log(M) / 9 if M > 1 else 0.0,
        "aggregate_ok": total <= size * math.log(size) / 9,
        "aggregate_strict_ok": M > 1 and total <= M * math.log(M) / 9,
        "bound_within_budget": bound <= math.log(size) / 9,
    }
