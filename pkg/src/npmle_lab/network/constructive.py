"""Hand-built networks: a floored logarithm and the floored softmax combinator."""

import math
from dataclasses import replace

import numpy as np

from ..errors import ArgumentError, ConstructionError
from .stitch import Net, from_layers, stitch_compose, stitch_diagonal, stitch_parallel


def _interp_excess(knots):
    """Exact max over [knots[0], knots[-1]] of x - exp(G(x)) for G interpolating log.

    On each piece exp(G) is convex and x linear, so the gap is concave and
    peaks where exp(G(x)) = 1/slope.
    """
    a, b = knots[:-1], knots[1:]
    s = (np.log(b) - np.log(a)) / (b - a)
    xs = a + np.log(1.0 / (s * a)) / s
    inside = (xs > a) & (xs < b)
    gap = np.where(inside, xs - 1.0 / s, 0.0)
    return float(gap.max()) if gap.size else 0.0


def _exp_log_layers(M, knots):
    level = math.log(4.0 / M)
    # largest float level with exp(level) <= 4/M
    while math.exp(level) > 4.0 / M:
        level = np.nextafter(level, -np.inf)
    values = np.log(knots)
    values[0] = level
    slopes = np.diff(values) / np.diff(knots)
    jumps = np.diff(np.concatenate([[0.0], slopes]))
    k = knots.size - 1
    W0 = np.concatenate([np.ones(k), [0.0]])[:, None]
    v1 = np.concatenate([knots[:-1], [-1.0]])
    W1 = np.concatenate([jumps, [level]])[None, :]
    return [W0, W1], [v1]


def build_exp_log_network(M, knots=8, max_knots=1 << 16, grid=100_000):
    """One-hidden-layer ReLU network G on [0,1] with |exp(G(x)) - x| <= 4/M and G >= log(4/M).

    G is the piecewise-linear interpolant of log(max(x, 4/M)) on geometric
    knots from 4/M to 1. The knot count doubles until both the exact
    per-piece gap and a dense grid check pass. ``net.meta`` records the
    knots and the certified error.
    """
    if M < 2:
        raise ArgumentError("M must be at least 2")
    floor = 4.0 / M
    count = max(2, int(knots))
    X = np.linspace(0.0, 1.0, grid)
    while count <= max_knots:
        if floor >= 1.0:
            pts = np.array([floor, floor + 1.0])
        else:
            pts = np.geomspace(floor, 1.0, count)
        weights, biases = _exp_log_layers(M, pts)
        net = from_layers(weights, biases)
        G = net(X[:, None])[:, 0]
        grid_err = float(np.max(np.abs(np.exp(G) - X)))
        piece_err = _interp_excess(pts) if floor < 1.0 else 0.0
        if max(grid_err, piece_err) <= floor and G.min() >= math.log(floor) - 1e-12:
            return replace(net, meta={
                "M": M, "knots": pts.tolist(), "grid_error": grid_err,
                "piece_error": piece_err, "min_G": float(G.min()),
            })
        count *= 2
    raise ConstructionError(f"no knot set up to {max_knots} met the 4/M bound for M={M}")


def clip_net(d=1):
    """x -> 1 - relu(1 - relu(x)) = min(max(x, 0), 1) with two hidden layers."""
    if d != 1:
        raise ArgumentError("clipping network is scalar")
    return from_layers(
        [np.array([[1.0]]), np.array([[-1.0], [0.0]]), np.array([[-1.0, 1.0]])],
        [np.array([0.0]), np.array([-1.0, -1.0])],
    )


def derived_floor(K, M, mass=1.0):
    """Lower bound on every output of ``compose_with_floor``.

    exp(G(y)) lies in [4/M, y + 4/M] for y in [0,1], so each output is at
    least (4/M) / (S + 4K/M) where S bounds sum_k H_k(x). For S = 1 (the H_k
    approximate a probability vector) this is (4/M) / (1 + 4K/M); for
    arbitrary clipped H_k take S = K.
    """
    return (4.0 / M) / (mass + 4.0 * K / M)


def compose_with_floor(H, M):
    """Softmax of (G(clip(H_1)), ..., G(clip(H_K))) as a single softmax network.

    Each H_k is a scalar identity-head network on [0,1]^d. M = 1 / floor in
    the approximation argument: with floor max_i N^{-2 beta_i*/t_i}, pass
    M = 1 / that value.
    """
    if M < 2:
        raise ArgumentError("M must be at least 2")
    H = list(H)
    if not H:
        raise ArgumentError("need at least one scalar network")
    if any(h.arch.out_dim != 1 for h in H):
        raise ArgumentError("each H_k must be scalar-valued")
    G = build_exp_log_network(M)
    clipped = [stitch_compose(clip_net(), h.with_head("identity")) for h in H]
    stacked = stitch_parallel(clipped)
    logits = stitch_compose(stitch_diagonal([G] * len(H)), stacked)
    return replace(logits.with_head("softmax"), meta={
        "M": M,
        "floor": derived_floor(len(H), M, 1.0),
        "floor_any": derived_floor(len(H), M, float(len(H))),
    })
