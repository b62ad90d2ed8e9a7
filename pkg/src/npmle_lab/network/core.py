"""Dense ReLU networks x -> psi(W_L s_{v_L} ... W_1 s_{v_1} W_0 x).

Hidden units compute relu(W h - v): the bias is subtracted and the output
layer carries no bias. ``head`` is either ``identity`` or ``softmax``.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ArgumentError

HEADS = ("identity", "softmax")


@dataclass(frozen=True)
class ArchSpec:
    widths: tuple
    B: float = np.inf
    s: Optional[int] = None
    head: str = "softmax"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(m) for m in self.widths))
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise ArgumentError("widths must list at least input and output sizes, all positive")
        if not self.B > 0:
            raise ArgumentError("weight bound B must be positive")
        if self.head not in HEADS:
            raise ArgumentError(f"head must be one of {HEADS}")
        if self.s is not None and self.s > self.n_params:
            raise ArgumentError("sparsity budget exceeds the parameter count")

    @property
    def L(self):
        return len(self.widths) - 2

    @property
    def d(self):
        return self.widths[0]

    @property
    def out_dim(self):
        return self.widths[-1]

    @property
    def n_params(self):
        m = self.widths
        return sum(m[i + 1] * m[i] for i in range(len(m) - 1)) + sum(m[1:-1])

    @property
    def max_width(self):
        return max(self.widths)

    def to_dict(self):
        return {"widths": list(self.widths), "B": None if np.isinf(self.B) else self.B,
                "s": self.s, "head": self.head}

    @classmethod
    def from_dict(cls, obj):
        B = obj.get("B")
        return cls(tuple(obj["widths"]), np.inf if B is None else float(B), obj.get("s"), obj.get("head", "softmax"))


@dataclass
class NetParams:
    weights: list
    biases: list = field(default_factory=list)

    def copy(self):
        return NetParams([w.copy() for w in self.weights], [v.copy() for v in self.biases])

    def arrays(self):
        return list(self.weights) + list(self.biases)

    def flat(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, vec):
        out, pos = [], 0
        for a in self.arrays():
            out.append(np.asarray(vec[pos:pos + a.size], dtype=float).reshape(a.shape))
            pos += a.size
        nw = len(self.weights)
        return NetParams(out[:nw], out[nw:])

    def max_abs(self):
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in self.arrays())


def check_shapes(params, arch):
    m = arch.widths
    if len(params.weights) != arch.L + 1 or len(params.biases) != arch.L:
        raise ArgumentError("parameter list lengths do not match the architecture")
    for i, W in enumerate(params.weights):
        if W.shape != (m[i + 1], m[i]):
            raise ArgumentError(f"W_{i} has shape {W.shape}, expected {(m[i + 1], m[i])}")
    for i, v in enumerate(params.biases):
        if v.shape != (m[i + 1],):
            raise ArgumentError(f"v_{i + 1} has shape {v.shape}, expected {(m[i + 1],)}")


def zeros(arch):
    m = arch.widths
    return NetParams([np.zeros((m[i + 1], m[i])) for i in range(arch.L + 1)],
                     [np.zeros(m[i + 1]) for i in range(arch.L)])


def init_params(arch, rng):
    """Glorot-uniform weights, zero biases."""
    m = arch.widths
    weights = []
    for i in range(arch.L + 1):
        lim = np.sqrt(6.0 / (m[i] + m[i + 1]))
        weights.append(rng.uniform(-lim, lim, size=(m[i + 1], m[i])))
    return NetParams(weights, [np.zeros(m[i + 1]) for i in range(arch.L)])


def _inputs(X, arch):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != arch.d:
        raise ArgumentError(f"input dimension {X.shape[1]} does not match m_0={arch.d}")
    return X, single


def logits(params, arch, X):
    X, single = _inputs(X, arch)
    h = X
    for W, v in zip(params.weights[:-1], params.biases):
        h = np.maximum(h @ W.T - v, 0.0)
    out = h @ params.weights[-1].T
    return out[0] if single else out


def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(params, arch, X):
    """Network output at X (a point or an (N, m_0) batch)."""
    z = logits(params, arch, X)
    return softmax(z) if arch.head == "softmax" else z


def _xy(data):
    if isinstance(data, tuple):
        return np.asarray(data[0], dtype=float), np.asarray(data[1], dtype=float)
    return data.X, data.Y


def cross_entropy(params, arch, data):
    """-(1/n) sum_i Y_i^T log p(X_i) for a softmax network; ``data`` is a Dataset or (X, Y)."""
    if arch.head != "softmax":
        raise ArgumentError("cross entropy needs a softmax head")
    X, Y = _xy(data)
    if Y.shape[1] != arch.out_dim:
        raise ArgumentError("label count does not match the output width")
    return float(-np.mean(np.sum(Y * log_softmax(logits(params, arch, X)), axis=1)))


def loss_and_gradient(params, arch, X, Y):
    """Cross entropy and its exact gradient by reverse-mode accumulation."""
    n = X.shape[0]
    hs, masks = [X], []
    h = X
    for W, v in zip(params.weights[:-1], params.biases):
        pre = h @ W.T - v
        mask = pre > 0
        h = np.where(mask, pre, 0.0)
        hs.append(h)
        masks.append(mask)
    z = h @ params.weights[-1].T
    lsm = log_softmax(z)
    loss = float(-np.sum(Y * lsm) / n)
    delta = (np.exp(lsm) - Y) / n
    gW = [None] * len(params.weights)
    gv = [None] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        gW[i] = delta.T @ hs[i]
        if i == 0:
            break
        back = (delta @ params.weights[i]) * masks[i - 1]
        gv[i - 1] = -back.sum(axis=0)
        delta = back
    return loss, NetParams(gW, gv)


def gradient(params, arch, data):
    if arch.head != "softmax":
        raise ArgumentError("gradient is defined for the cross entropy of a softmax network")
    X, Y = _xy(data)
    return loss_and_gradient(params, arch, X, Y)[1]


def project_sup(params, B):
    """Clamp every weight and bias to [-B, B]."""
    if not B > 0:
        raise ArgumentError("B must be positive")
    return NetParams([np.clip(w, -B, B) for w in params.weights], [np.clip(v, -B, B) for v in params.biases])


def count_nonzero(params):
    return int(sum(np.count_nonzero(a) for a in params.arrays()))


# --------------------------------------------------------------------------
# JSON: {"arch": {...}, "weights": [[row, ...], ...], "biases": [[...], ...]}


def to_json(params, arch):
    return json.dumps({
        "arch": arch.to_dict(),
        "weights": [w.tolist() for w in params.weights],
        "biases": [v.tolist() for v in params.biases],
    })


def from_json(text):
    obj = json.loads(text)
    arch = ArchSpec.from_dict(obj["arch"])
    m = arch.widths
    weights = [np.array(w, dtype=float).reshape(m[i + 1], m[i]) for i, w in enumerate(obj["weights"])]
    biases = [np.array(v, dtype=float).reshape(m[i + 1]) for i, v in enumerate(obj["biases"])]
    params = NetParams(weights, biases)
    check_shapes(params, arch)
    return params, arch


def gradient_check(params, arch, data, h=1e-5):
    """Max |backprop - central difference| over all entries, scaled by the sup norm of the
    finite-difference gradient (entrywise ratios blow up on near-zero entries)."""
    X, Y = _xy(data)
    _, g = loss_and_gradient(params, arch, X, Y)
    flat = params.flat()
    fd = np.empty_like(flat)
    for j in range(flat.size):
        up, down = flat.copy(), flat.copy()
        up[j] += h
        down[j] -= h
        fd[j] = (cross_entropy(params.with_flat(up), arch, (X, Y))
                 - cross_entropy(params.with_flat(down), arch, (X, Y))) / (2 * h)
    scale = max(float(np.max(np.abs(fd))), 1e-12)
    return float(np.max(np.abs(g.flat() - fd))) / scale
