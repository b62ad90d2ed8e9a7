"""Combinators that assemble larger ReLU networks from smaller ones.

All results stay inside the dense class: a list of weight matrices, one
subtracted bias per hidden layer, no output bias.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import block_diag

from ..errors import ArgumentError
from .core import ArchSpec, NetParams, check_shapes, forward


@dataclass(frozen=True)
class Net:
    params: NetParams
    arch: ArchSpec
    meta: dict = field(default=None, compare=False)

    def __post_init__(self):
        check_shapes(self.params, self.arch)

    def __call__(self, X):
        return forward(self.params, self.arch, X)

    @property
    def L(self):
        return self.arch.L

    def with_head(self, head):
        return Net(self.params, replace(self.arch, head=head), self.meta)


def from_layers(weights, biases, head="identity"):
    weights = [np.asarray(w, dtype=float) for w in weights]
    biases = [np.asarray(v, dtype=float) for v in biases]
    widths = [weights[0].shape[1]] + [w.shape[0] for w in weights]
    params = NetParams(weights, biases)
    bound = max(params.max_abs(), 1e-300)
    return Net(params, ArchSpec(tuple(widths), B=bound, head=head))


def identity_net(dim, L=1):
    """Exact identity on R^dim with L hidden layers (units relu(x), relu(-x))."""
    if L < 1:
        return from_layers([np.eye(dim)], [])
    eye = np.eye(dim)
    weights = [np.vstack([eye, -eye])] + [np.eye(2 * dim)] * (L - 1) + [np.hstack([eye, -eye])]
    return from_layers(weights, [np.zeros(2 * dim)] * L)


def stitch_compose(net_a, net_b):
    """The network x -> net_a(net_b(x)); net_b must have an identity head.

    net_b's output matrix is merged into net_a's first layer, so the depth is
    L_a + L_b.
    """
    if net_b.arch.head != "identity":
        raise ArgumentError("inner network must have an identity head")
    if net_b.arch.out_dim != net_a.arch.d:
        raise ArgumentError(f"cannot feed {net_b.arch.out_dim} outputs into {net_a.arch.d} inputs")
    a, b = net_a.params, net_b.params
    merged = a.weights[0] @ b.weights[-1]
    weights = b.weights[:-1] + [merged] + a.weights[1:]
    return from_layers(weights, b.biases + a.biases, head=net_a.arch.head)


def stitch_sync_depth(net, target_L):
    """Pad ``net`` with identity layers so it has exactly ``target_L`` hidden layers."""
    if target_L < net.L:
        raise ArgumentError("cannot reduce depth")
    if target_L == net.L:
        return net
    pad = identity_net(net.arch.out_dim, target_L - net.L)
    inner = net.with_head("identity")
    return stitch_compose(pad.with_head(net.arch.head), inner)


def stitch_parallel(nets):
    """x -> (f_1(x), ..., f_J(x)) for identity-head networks sharing the input."""
    nets = list(nets)
    if not nets:
        raise ArgumentError("need at least one network")
    d = nets[0].arch.d
    if any(n.arch.d != d for n in nets):
        raise ArgumentError("parallel networks must share the input dimension")
    if any(n.arch.head != "identity" for n in nets):
        raise ArgumentError("parallel networks must have identity heads")
    L = max(n.L for n in nets)
    nets = [stitch_sync_depth(n, L) for n in nets]
    if L == 0:
        return from_layers([np.vstack([n.params.weights[0] for n in nets])], [])
    weights = [np.vstack([n.params.weights[0] for n in nets])]
    for i in range(1, L + 1):
        weights.append(block_diag(*[n.params.weights[i] for n in nets]))
    biases = [np.concatenate([n.params.biases[i] for n in nets]) for i in range(L)]
    return from_layers(weights, biases)


def stitch_diagonal(nets):
    """(x_1, ..., x_J) -> (f_1(x_1), ..., f_J(x_J)) for scalar-input networks."""
    nets = list(nets)
    if any(n.arch.d != 1 or n.arch.head != "identity" for n in nets):
        raise ArgumentError("diagonal stitching needs scalar-input identity-head networks")
    L = max(n.L for n in nets)
    nets = [stitch_sync_depth(n, L) for n in nets]
    weights = [block_diag(*[n.params.weights[i] for n in nets]) for i in range(L + 1)]
    biases = [np.concatenate([n.params.biases[i] for n in nets]) for i in range(L)]
    return from_layers(weights, biases)
