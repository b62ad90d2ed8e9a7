"""Tensor-product quadrature rules on the unit cube."""

import itertools

import numpy as np

# midpoint cells per axis used when no budget is given
DEFAULT_CELLS = {1: 2048, 2: 128, 3: 32}


def midpoint_grid(d, cells):
    """Nodes and equal weights (summing to 1) of the tensor midpoint rule on [0,1]^d."""
    axis = (np.arange(cells) + 0.5) / cells
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.full(nodes.shape[0], 1.0 / nodes.shape[0])
    return nodes, weights


def gauss_legendre_cells(edges, order):
    """Composite Gauss-Legendre rule on the partition given by ``edges``.

    Returns 1-d nodes and weights; the weights integrate over [edges[0], edges[-1]].
    """
    edges = np.asarray(edges, dtype=float)
    t, w = np.polynomial.legendre.leggauss(order)
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    nodes = (left + right) / 2 + half * t[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def tensor_rule(nodes_1d, weights_1d, d):
    """Tensor product of a 1-d rule with itself ``d`` times."""
    if d == 1:
        return nodes_1d[:, None].copy(), weights_1d.copy()
    idx = np.array(list(itertools.product(range(nodes_1d.size), repeat=d)))
    nodes = nodes_1d[idx]
    weights = np.prod(weights_1d[idx], axis=1)
    return nodes, weights
