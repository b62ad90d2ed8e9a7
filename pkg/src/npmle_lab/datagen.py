"""Input laws, label sampling and dataset persistence."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DataError, ParseError
from .metrics import as_simplex
from .rng import substream


@dataclass(frozen=True)
class InputLaw:
    """Distribution of X on [0,1]^d.

    ``uniform`` has density 1. ``mixture`` is 0.5 Uniform + 0.5 tensor Beta(2,2),
    density 0.5 + 0.5 prod_j 6 x_j (1 - x_j), bounded by gamma = 0.5 and
    Gamma = 0.5 + 0.5 * 1.5^d. Beta(2,2) draws are medians of three uniforms.
    """

    family: str = "uniform"
    d: int = 1

    def __post_init__(self):
        if self.family not in ("uniform", "mixture"):
            raise ArgumentError(f"unknown input law {self.family!r}")
        if self.d < 1:
            raise ArgumentError("d must be positive")

    @property
    def gamma(self):
        return 1.0 if self.family == "uniform" else 0.5

    @property
    def Gamma(self):
        return 1.0 if self.family == "uniform" else 0.5 + 0.5 * 1.5**self.d

    def density(self, X):
        X = np.atleast_2d(X)
        if self.family == "uniform":
            return np.ones(X.shape[0])
        return 0.5 + 0.5 * np.prod(6.0 * X * (1.0 - X), axis=1)

    def marginal_density(self, x):
        """Density of one coordinate (used by per-axis quadrature)."""
        x = np.asarray(x, dtype=float)
        if self.family == "uniform":
            return np.ones_like(x)
        return 0.5 + 0.5 * 6.0 * x * (1.0 - x)

    def sample(self, rng, n):
        if self.family == "uniform":
            return rng.random((n, self.d))
        u = rng.random((n, self.d))
        beta22 = np.median(rng.random((n, self.d, 3)), axis=2)
        pick = rng.random(n) < 0.5
        return np.where(pick[:, None], u, beta22)

    def to_dict(self):
        return {"family": self.family, "d": self.d}


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    seed: int = 0
    model_label: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.X.ndim != 2 or self.Y.ndim != 2 or self.X.shape[0] != self.Y.shape[0]:
            raise DataError("X must be n x d and Y n x K with matching n")
        if self.X.size and (self.X.min() < 0 or self.X.max() > 1):
            raise DataError("inputs must lie in [0,1]^d")
        if self.Y.size and (np.any((self.Y != 0) & (self.Y != 1)) or np.any(self.Y.sum(axis=1) != 1)):
            raise DataError("labels must be one-hot rows")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def K(self):
        return self.Y.shape[1]

    @property
    def labels(self):
        """0-based class indices."""
        return np.argmax(self.Y, axis=1)

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.Y, other.Y)
            and self.seed == other.seed
            and self.model_label == other.model_label
        )


def one_hot(labels, K):
    Y = np.zeros((len(labels), K))
    Y[np.arange(len(labels)), labels] = 1.0
    return Y


def sample_labels(probs, rng):
    """Categorical draws by inverse CDF of one uniform per row."""
    u = rng.random(probs.shape[0])
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    return np.minimum((u[:, None] >= cdf).sum(axis=1), probs.shape[1] - 1)


def sample_dataset(model, n, law=None, seed=0):
    """Draw X ~ law and Y | X ~ Categorical(eta(X))."""
    if n < 1:
        raise ArgumentError("n must be at least 1")
    law = law or InputLaw("uniform", model.d)
    if law.d != model.d:
        raise ArgumentError("input law dimension does not match the model")
    X = law.sample(substream(seed, "inputs"), n)
    probs = as_simplex(model(X), name="eta(X)")
    labels = sample_labels(probs, substream(seed, "labels"))
    return Dataset(X, one_hot(labels, probs.shape[1]), seed, getattr(model, "label", ""))


# --------------------------------------------------------------------------
# CSV persistence: '#' metadata lines, then header x1..xd,label (1-based)


def save_dataset(ds, path):
    lines = [
        f"# model: {ds.model_label}",
        f"# seed: {ds.seed}",
        f"# classes: {ds.K}",
        f"# rows: {ds.n}",
        ",".join([f"x{j + 1}" for j in range(ds.d)] + ["label"]),
    ]
    for x, lab in zip(ds.X, ds.labels):
        lines.append(",".join([format(float(v), ".17g") for v in x] + [str(int(lab) + 1)]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path, K=None):
    meta = {}
    header = None
    xs, labs = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
                if len(header) < 2 or header[-1] != "label" or any(
                    h != f"x{j + 1}" for j, h in enumerate(header[:-1])
                ):
                    raise ParseError("header must read x1,...,xd,label", lineno)
                continue
            if not line:
                raise ParseError("empty row", lineno)
            fields = line.split(",")
            if len(fields) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(fields)}", lineno)
            try:
                x = [float(v) for v in fields[:-1]]
                lab = int(fields[-1])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not all(math.isfinite(v) and 0 <= v <= 1 for v in x):
                raise ParseError("input outside [0,1]", lineno)
            xs.append(x)
            labs.append((lab, lineno))
    if header is None:
        raise ParseError("missing header", 1)
    K = K or (int(meta["classes"]) if "classes" in meta else max((l for l, _ in labs), default=1))
    for lab, lineno in labs:
        if not 1 <= lab <= K:
            raise ParseError(f"label {lab} outside [1, {K}]", lineno)
    if "rows" in meta and int(meta["rows"]) != len(labs):
        raise ParseError(f"file truncated: {len(labs)} of {meta['rows']} rows present", len(labs) + 1)
    X = np.array(xs, dtype=float).reshape(len(xs), len(header) - 1)
    Y = one_hot(np.array([l - 1 for l, _ in labs], dtype=int), K)
    return Dataset(X, Y, int(meta.get("seed", 0)), meta.get("model", ""))
