"""Composition-structured truths eta: [0,1]^d -> simplex, with smoothness bookkeeping.

Hölder norms follow the convention where ``floor(beta)`` is the largest
integer *strictly* below beta, so beta = 1 means Lipschitz and the
fractional exponent ``beta - floor(beta)`` always lies in (0, 1].
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError
from .metrics import as_simplex


@dataclass(frozen=True)
class CompositionSpec:
    r: int
    d: tuple
    t: tuple
    beta: tuple
    Q: float
    K: int

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(v) for v in self.d))
        object.__setattr__(self, "t", tuple(int(v) for v in self.t))
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        if self.r < 0:
            raise ArgumentError("r must be nonnegative")
        if len(self.d) != self.r + 2 or len(self.t) != self.r + 1 or len(self.beta) != self.r + 1:
            raise ArgumentError("need len(d) = r+2 and len(t) = len(beta) = r+1")
        if any(ti < 1 or ti > di for ti, di in zip(self.t, self.d)):
            raise ArgumentError("each t_i must satisfy 1 <= t_i <= d_i")
        if any(b <= 0 for b in self.beta):
            raise ArgumentError("smoothness values must be positive")
        if self.K < 2:
            raise ArgumentError("K must be at least 2")
        if self.K * self.Q < 1:
            raise ArgumentError("need K*Q >= 1 for a nonempty class")

    @property
    def input_dim(self):
        return self.d[0]

    def to_dict(self):
        return {"r": self.r, "d": list(self.d), "t": list(self.t), "beta": list(self.beta),
                "Q": self.Q, "K": self.K}

    @classmethod
    def from_dict(cls, obj):
        return cls(int(obj["r"]), obj["d"], obj["t"], obj["beta"], float(obj["Q"]), int(obj["K"]))


def effective_smoothness(spec):
    """beta_i * prod_{l > i} min(beta_l, 1) for every stage i."""
    beta = spec.beta if isinstance(spec, CompositionSpec) else tuple(spec)
    out = []
    for i in range(len(beta)):
        out.append(beta[i] * math.prod(min(b, 1.0) for b in beta[i + 1:]))
    return out


def rate_exponents(spec):
    bs = effective_smoothness(spec)
    return [b / (b + t) for b, t in zip(bs, spec.t)]


def rate_phi_n(spec, n):
    """(max_i n^{-beta_i*/(beta_i*+t_i)}, argmax index); ties go to the smallest index."""
    if n < 1:
        raise ArgumentError("n must be at least 1")
    expo = rate_exponents(spec)
    slowest = min(expo)
    # argmax of n^{-e} is argmin of e; exact float ties are common (e.g. all 1/2)
    idx = next(i for i, e in enumerate(expo) if e <= slowest + 1e-15)
    return float(n) ** (-expo[idx]), idx


def composition_error_bound(Q, beta, eps):
    """Sup-norm error of a chain of rescaled stages given per-stage errors eps_i.

    Q_r * prod_{l<r} (2 Q_l)^{beta_{l+1}} * sum_{i=0}^r eps_i^{prod_{l>i} min(beta_l, 1)}
    """
    Q, beta, eps = list(Q), list(beta), list(eps)
    if not (len(Q) == len(beta) == len(eps)):
        raise ArgumentError("Q, beta and eps must have equal length")
    if any(e < 0 for e in eps):
        raise ArgumentError("eps must be nonnegative")
    r = len(Q) - 1
    lead = Q[r] * math.prod((2 * Q[l]) ** beta[l + 1] for l in range(r))
    total = 0.0
    for i in range(r + 1):
        power = math.prod(min(b, 1.0) for b in beta[i + 1:])
        total += eps[i] ** power
    return lead * total


# --------------------------------------------------------------------------
# Hölder building blocks


def holder_split(beta):
    """(k, alpha) with k the largest integer strictly below beta and alpha = beta - k."""
    k = math.ceil(beta) - 1
    return k, beta - k


def holder_quotient(values, grid, alpha, chunk=512):
    """max_{i != j} |v_i - v_j| / |x_i - x_j|^alpha over a 1-d probe grid."""
    v = np.asarray(values, dtype=float)
    x = np.asarray(grid, dtype=float)
    best = 0.0
    for s in range(0, x.size, chunk):
        dx = np.abs(x[s:s + chunk, None] - x[None, :])
        dv = np.abs(v[s:s + chunk, None] - v[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dx > 0, dv / dx**alpha, 0.0)
        best = max(best, float(q.max()))
    return best


def holder_norm_scan(derivs, beta, grid):
    """Empirical Hölder norm sum_{j<=k} ||f^(j)||_inf + [f^(k)]_alpha on ``grid``."""
    k, alpha = holder_split(beta)
    if len(derivs) < k + 1:
        raise ArgumentError(f"need derivatives up to order {k} for beta={beta}")
    grid = np.asarray(grid, dtype=float)
    sup = sum(float(np.max(np.abs(derivs[j](grid)))) for j in range(k + 1))
    return sup + holder_quotient(derivs[k](grid), grid, alpha)


@dataclass(frozen=True)
class HolderBlock:
    """A univariate function on [0,1] with declared smoothness and a radius bound."""

    name: str
    params: dict
    beta: float
    radius: float
    derivs: tuple = field(repr=False)

    def __call__(self, x):
        return self.derivs[0](np.asarray(x, dtype=float))

    def scan_norm(self, grid=None):
        if grid is None:
            grid = np.linspace(0.0, 1.0, 2001)
        return holder_norm_scan(self.derivs, self.beta, grid)

    def sup(self, grid=None):
        if grid is None:
            grid = np.linspace(0.0, 1.0, 2001)
        return float(np.max(np.abs(self(grid))))


def _polynomial(params):
    coeffs = [float(c) for c in params.get("coeffs", [0.0, 1.0])]
    beta = float(params.get("beta", 1.0))
    k, _ = holder_split(beta)
    poly = np.polynomial.Polynomial(coeffs)
    derivs = [poly.deriv(j) if j else poly for j in range(k + 2)]

    def bound(j):
        return sum(abs(c) * math.perm(i, j) for i, c in enumerate(coeffs) if i >= j)

    radius = sum(bound(j) for j in range(k + 1)) + bound(k + 1)
    return beta, radius, tuple(derivs[: k + 1])


def _cusp(params):
    c = float(params.get("c", 0.5))
    beta = float(params.get("beta", 1.0))
    a = float(params.get("scale", 1.0))
    if not 0 < beta <= 1:
        raise ArgumentError("cusp requires beta in (0, 1]")
    radius = abs(a) * (max(c, 1 - c) ** beta + 1.0)
    return beta, radius, (lambda x: a * np.abs(x - c) ** beta,)


def _sinusoid(params):
    amp = float(params.get("amp", 1.0))
    freq = float(params.get("freq", 1.0))
    phase = float(params.get("phase", 0.0))
    beta = float(params.get("beta", 1.0))
    k, _ = holder_split(beta)
    w = 2 * math.pi * freq

    def deriv(j):
        return lambda x: amp * w**j * np.sin(w * x + phase + j * math.pi / 2)

    radius = sum(abs(amp) * w**j for j in range(k + 2))
    return beta, radius, tuple(deriv(j) for j in range(k + 1))


def _zero(params):
    beta = float(params.get("beta", 1.0))
    k, _ = holder_split(beta)
    return beta, 0.0, tuple((lambda x: np.zeros_like(np.asarray(x, dtype=float))) for _ in range(k + 1))


HOLDER_CATALOG = {
    "polynomial": _polynomial,
    "cusp": _cusp,
    "sinusoid": _sinusoid,
    "zero": _zero,
}


def library_hoelder(name, params=None):
    """Look up a univariate Hölder block by catalog name."""
    if name not in HOLDER_CATALOG:
        raise ArgumentError(f"unknown block {name!r}; choose from {sorted(HOLDER_CATALOG)}")
    params = dict(params or {})
    beta, radius, derivs = HOLDER_CATALOG[name](params)
    return HolderBlock(name, params, beta, radius, derivs)


# --------------------------------------------------------------------------
# true models


@dataclass(frozen=True)
class TrueModel:
    spec: CompositionSpec
    fn: Callable = field(repr=False)
    label: str = "model"

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.spec.input_dim:
            raise ArgumentError(f"expected inputs of dimension {self.spec.input_dim}")
        return self.fn(X)

    @property
    def d(self):
        return self.spec.input_dim

    @property
    def K(self):
        return self.spec.K

    @property
    def beta_star(self):
        return effective_smoothness(self.spec)

    def phi(self, n):
        return rate_phi_n(self.spec, n)[0]


def softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def make_gam(scores, beta=None, Q=None, label="gam", probe=1001):
    """eta_k(x) = softmax_k(sum_i f_ki(x_i)) from a K x d table of univariate blocks.

    ``None`` entries are zero scores. Recorded structure is the embedding
    r=2, d=(d,d,1,1), t=(1,d,1), beta=(beta, max(beta,1)*d, 1).
    """
    table = [[b if b is not None else library_hoelder("zero") for b in row] for row in scores]
    K = len(table)
    if K < 2:
        raise ArgumentError("need at least two classes")
    d = len(table[0])
    if d < 1 or any(len(row) != d for row in table):
        raise ArgumentError("scores must be a rectangular K x d table")
    if beta is None:
        beta = min(b.beta for row in table for b in row)
    grid = np.linspace(0.0, 1.0, probe)
    score_sup = max(b.sup(grid) for row in table for b in row)
    if Q is None:
        Q = score_sup
    elif score_sup > Q + 1e-12:
        raise ArgumentError(f"score range {score_sup:.4g} exceeds declared Q={Q}")
    spec = CompositionSpec(
        r=2,
        d=(d, d, 1, 1),
        t=(1, d, 1),
        beta=(beta, max(beta, 1.0) * d, 1.0),
        Q=max((Q + 1.0) * d, 1.0),
        K=K,
    )

    def eta(X):
        z = np.stack([sum(table[k][i](X[:, i]) for i in range(d)) for k in range(K)], axis=1)
        return softmax(z)

    return TrueModel(spec, eta, label)


def rescale_stages(stages: Sequence[Callable], Q: Sequence[float]):
    """Rewrite g_r o ... o g_0 as h_r o ... o h_0 with every h_i (i < r) valued in [0,1].

    h_0 = g_0 / (2 Q_0) + 1/2, h_i(x) = g_i(2 Q_{i-1} x - Q_{i-1}) / (2 Q_i) + 1/2,
    h_r(x) = g_r(2 Q_{r-1} x - Q_{r-1}).
    """
    r = len(stages) - 1
    if len(Q) != r + 1 or any(q < 1 for q in Q):
        raise ArgumentError("need one radius Q_i >= 1 per stage")
    hs = []
    for i, g in enumerate(stages):
        pre = (lambda x, q=Q[i - 1]: 2 * q * x - q) if i > 0 else (lambda x: x)
        if i < r:
            hs.append(lambda x, g=g, pre=pre, q=Q[i]: g(pre(x)) / (2 * q) + 0.5)
        else:
            hs.append(lambda x, g=g, pre=pre: g(pre(x)))
    return hs


def make_composition(stages, spec, label="composition", probe=None):
    """A TrueModel from explicit stages g_0..g_r, each mapping (N, d_i) -> (N, d_{i+1}).

    The last stage must return (N, K) simplex rows. Intermediate ranges are
    checked on a probe sample after rescaling.
    """
    hs = rescale_stages(stages, [spec.Q] * len(stages))
    if probe is None:
        probe = np.random.default_rng(0).random((2000, spec.input_dim))

    def chain(X):
        z = X
        for h in hs:
            z = np.atleast_2d(h(z))
        return z

    z = probe
    for i, h in enumerate(hs[:-1]):
        z = np.atleast_2d(h(z))
        if z.min() < -1e-12 or z.max() > 1 + 1e-12:
            raise ArgumentError(f"stage {i} leaves [-Q, Q] on the probe set")
    as_simplex(chain(probe), name="composition output")
    return TrueModel(spec, chain, label)


# --------------------------------------------------------------------------
# catalog addressable by name + JSON parameters


def _block_from(obj):
    if obj is None:
        return None
    return library_hoelder(obj["name"], obj.get("params", {}))


def _gam_from(params):
    scores = [[_block_from(b) for b in row] for row in params["scores"]]
    return make_gam(scores, beta=params.get("beta"), Q=params.get("Q"), label=params.get("label", "gam"))


def stock_gam_params(beta=1.0):
    """K=2, d=1 additive truth: a kinked score against a smooth one."""
    if beta <= 1:
        first = {"name": "cusp", "params": {"c": 0.35, "beta": beta, "scale": 3.0}}
    else:
        first = {"name": "polynomial", "params": {"coeffs": [0.0, -2.0, 3.0], "beta": beta}}
    second = {"name": "sinusoid", "params": {"amp": 1.0, "freq": 1.0, "beta": max(beta, 1.0)}}
    return {"scores": [[first], [second]], "beta": beta, "label": f"stock-gam-beta{beta:g}"}


def _stock_gam(params):
    return _gam_from(stock_gam_params(float(params.get("beta", 1.0))))


def _constant(params):
    probs = np.asarray(params["probs"], dtype=float)
    as_simplex(probs)
    d = int(params.get("d", 1))
    K = probs.size
    spec = CompositionSpec(0, (d, 1), (1,), (float(params.get("beta", 1.0)),), max(1.0, 1.0 / K), K)
    return TrueModel(spec, lambda X: np.tile(probs, (X.shape[0], 1)), params.get("label", "constant"))


MODEL_CATALOG = {
    "gam": _gam_from,
    "stock-gam": _stock_gam,
    "constant": _constant,
}


def build_model(name, params=None):
    if name not in MODEL_CATALOG:
        raise ArgumentError(f"unknown model {name!r}; choose from {sorted(MODEL_CATALOG)}")
    return MODEL_CATALOG[name](dict(params or {}))
