"""Fitting the NPMLE: projected Adam over dense networks, exact ERM over finite models."""

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ArgumentError, DegenerateModelError, TrainingError
from .models import rate_phi_n
from .network.core import (
    ArchSpec,
    NetParams,
    cross_entropy,
    init_params,
    loss_and_gradient,
    project_sup,
)
from .rng import substream


@dataclass(frozen=True)
class TrainConfig:
    steps: Optional[int] = None  # None: epochs * ceil(n / batch_size)
    epochs: int = 200
    batch_size: int = 256
    lr: float = 1e-3
    schedule: str = "cosine"
    restarts: int = 3
    bound: Optional[float] = None  # None: use the architecture's B
    seed: int = 0
    patience: Optional[int] = None  # evaluations without improvement before stopping
    eval_every: Optional[int] = None  # None: once per epoch
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.steps is not None and self.steps < 1:
            raise ArgumentError("steps must be at least 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise ArgumentError("epochs and batch_size must be positive")
        if self.restarts < 1:
            raise ArgumentError("restarts must be at least 1")
        if self.schedule not in ("cosine", "constant"):
            raise ArgumentError("schedule must be 'cosine' or 'constant'")
        if not self.lr > 0:
            raise ArgumentError("learning rate must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainResult:
    params: NetParams
    arch: ArchSpec
    final_loss: float
    restart_index: int
    terminal_losses: list
    loss_history: list = field(default_factory=list)
    steps_run: list = field(default_factory=list)
    wall_time: float = 0.0

    def predict(self, X):
        from .network.core import forward

        return forward(self.params, self.arch, X)

    def summary(self):
        return {
            "final_loss": self.final_loss,
            "restart_index": self.restart_index,
            "terminal_losses": self.terminal_losses,
            "steps_run": self.steps_run,
            "wall_time": self.wall_time,
            "loss_history": self.loss_history,
        }


def _lr(cfg, t, total):
    if cfg.schedule == "constant":
        return cfg.lr
    return 0.5 * cfg.lr * (1.0 + math.cos(math.pi * t / total))


def _run(arch, X, Y, cfg, restart, bound):
    n = X.shape[0]
    batch = min(n, cfg.batch_size)
    per_epoch = math.ceil(n / batch)
    total = cfg.steps if cfg.steps is not None else cfg.epochs * per_epoch
    every = cfg.eval_every or per_epoch
    params = project_sup(init_params(arch, substream(cfg.seed, "init", restart)), bound)
    order_rng = substream(cfg.seed, "batches", restart)
    arrays = params.arrays()
    m = [np.zeros_like(a) for a in arrays]
    v = [np.zeros_like(a) for a in arrays]
    nw = len(params.weights)
    history = []
    best, stale = math.inf, 0
    order, pos = order_rng.permutation(n), 0
    t = 0
    while t < total:
        if pos + batch > n:
            order, pos = order_rng.permutation(n), 0
        idx = order[pos:pos + batch]
        pos += batch
        loss, grad = loss_and_gradient(params, arch, X[idx], Y[idx])
        if not math.isfinite(loss):
            raise TrainingError("non-finite loss", step=t)
        t += 1
        lr = _lr(cfg, t - 1, total)
        c1, c2 = 1 - cfg.beta1**t, 1 - cfg.beta2**t
        new = []
        for a, g, mi, vi in zip(arrays, grad.arrays(), m, v):
            mi *= cfg.beta1
            mi += (1 - cfg.beta1) * g
            vi *= cfg.beta2
            vi += (1 - cfg.beta2) * g * g
            step = a - lr * (mi / c1) / (np.sqrt(vi / c2) + cfg.eps)
            new.append(np.clip(step, -bound, bound))
        arrays = new
        params = NetParams(arrays[:nw], arrays[nw:])
        if t % every == 0 or t == total:
            full = cross_entropy(params, arch, (X, Y))
            if not math.isfinite(full):
                raise TrainingError("non-finite loss", step=t)
            history.append(full)
            if cfg.patience is not None:
                if full < best - 1e-9:
                    best, stale = full, 0
                else:
                    stale += 1
                    if stale >= cfg.patience:
                        break
    terminal = history[-1] if history else cross_entropy(params, arch, (X, Y))
    return params, terminal, history, t


def fit_npmle(arch, ds, cfg=TrainConfig()):
    """Approximate the NPMLE over F(L, m, B) by projected Adam with restarts.

    Every update is followed by clamping all entries to [-B, B]. The restart
    with the smallest terminal full-data loss wins (ties: first restart).
    """
    if arch.head != "softmax":
        raise ArgumentError("the NPMLE needs a softmax head")
    if ds.K != arch.out_dim or ds.d != arch.d:
        raise ArgumentError("dataset shape does not match the architecture")
    bound = arch.B if cfg.bound is None else cfg.bound
    if bound > arch.B:
        raise ArgumentError("projection bound exceeds the architecture's B")
    start = time.perf_counter()
    runs = [_run(arch, ds.X, ds.Y, cfg, r, bound) for r in range(cfg.restarts)]
    terminal = [r[1] for r in runs]
    best = int(np.argmin(terminal))
    return TrainResult(
        params=runs[best][0],
        arch=arch,
        final_loss=terminal[best],
        restart_index=best,
        terminal_losses=terminal,
        loss_history=[r[2] for r in runs],
        steps_run=[r[3] for r in runs],
        wall_time=time.perf_counter() - start,
    )


def empirical_nll(candidate, ds):
    """-(1/n) sum_i log p_{Y_i}(X_i); ``inf`` if some observed label has probability 0."""
    P = np.asarray(candidate(ds.X), dtype=float)
    picked = P[np.arange(ds.n), ds.labels]
    if np.any(picked <= 0):
        return math.inf
    return float(-np.mean(np.log(picked)))


def fit_exact_finite(candidates, ds):
    """Index of the empirical-likelihood maximiser over a finite model (first on ties)."""
    candidates = list(candidates)
    if not candidates:
        raise ArgumentError("need at least one candidate")
    losses = [empirical_nll(c, ds) for c in candidates]
    if all(math.isinf(l) for l in losses):
        raise DegenerateModelError("every candidate assigns zero probability to some observed label")
    return int(np.argmin(losses))


def architecture_from_theory(spec, n, c_L=1.0, c_m=1.0, c_B=1.0, width_rule="sqrt"):
    """Depth ~ log n, width ~ sqrt(n phi_n), weight bound ~ max_i (n phi_n)^{(2 beta_i + 2)/t_i}.

    The main rate theorem asks for minimal width of order sqrt(n phi_n), while
    the general oracle theorem's network condition reads n phi_n. The two are
    not reconciled in the source; ``width_rule="linear"`` selects the latter.
    """
    if n < 2:
        raise ArgumentError("n must be at least 2")
    if width_rule not in ("sqrt", "linear"):
        raise ArgumentError("width_rule must be 'sqrt' or 'linear'")
    phi, _ = rate_phi_n(spec, n)
    L = max(1, math.ceil(c_L * math.log(n)))
    scale = math.sqrt(n * phi) if width_rule == "sqrt" else n * phi
    width = max(1, math.ceil(c_m * scale))
    B = c_B * max((n * phi) ** ((2 * b + 2) / t) for b, t in zip(spec.beta, spec.t))
    return ArchSpec((spec.input_dim,) + (width,) * L + (spec.K,), B=B, head="softmax")


def basic_inequality_terms(candidates, ptilde_index, eta, ds):
    """Both sides of the basic inequality for a finite model of constant vectors.

    With constant candidates every population term is a closed form: for
    m = (p_hat + p_tilde)/2,
        lhs = H^2(m, p_tilde)
        rhs = (P_n - P)(1/2 Y^T log(m / p_tilde)) + 2(1 + c0) sqrt(lhs H^2(p_tilde, eta))
    with c0^2 = max_k eta_k / p_tilde_k. Returns a dict with both sides.
    """
    from .metrics import as_simplex, hellinger_sq

    cands = [as_simplex(np.asarray(c, dtype=float)) for c in candidates]
    eta = as_simplex(np.asarray(eta, dtype=float))
    idx = fit_exact_finite([lambda X, c=c: np.tile(c, (len(X), 1)) for c in cands], ds)
    phat, pt = cands[idx], cands[ptilde_index]
    if np.any((pt == 0) & (eta > 0)):
        return {"index": idx, "lhs": float(hellinger_sq(0.5 * (phat + pt), pt)), "rhs": math.inf, "c0": math.inf}
    m = 0.5 * (phat + pt)
    pos = pt > 0
    g = np.zeros_like(pt)
    g[pos] = 0.5 * np.log(m[pos] / pt[pos])
    empirical = float(np.mean(g[ds.labels]))
    population = float(np.sum(eta * g))
    c0 = math.sqrt(float(np.max(np.where(pos, eta / np.where(pos, pt, 1.0), 0.0))))
    lhs = float(hellinger_sq(m, pt))
    rhs = empirical - population + 2 * (1 + c0) * math.sqrt(lhs * float(hellinger_sq(pt, eta)))
    return {"index": idx, "lhs": lhs, "rhs": rhs, "c0": c0}
