import math

import numpy as np
import pytest

from npmle_lab.errors import ArgumentError
from npmle_lab.network import (
    ArchSpec, NetParams, build_exp_log_network, compose_with_floor, count_nonzero, cross_entropy,
    derived_floor, forward, from_json, from_layers, gradient, gradient_check, identity_net, init_params,
    project_sup, stitch_compose, stitch_parallel, stitch_sync_depth, to_json, zeros,
)
from npmle_lab.network.core import softmax
from npmle_lab.rng import substream


def random_net(rng, d, widths, out, head="identity"):
    arch = ArchSpec((d, *widths, out), head=head)
    p = init_params(arch, rng)
    p = NetParams(p.weights, [rng.normal(0, 0.3, v.shape) for v in p.biases])
    from npmle_lab.network.stitch import Net

    return Net(p, arch)


def test_forward_examples():
    arch = ArchSpec((2, 3, 4))
    assert np.allclose(forward(zeros(arch), arch, [0.3, 0.9]), 0.25)
    assert np.allclose(softmax(np.array([0.0, 0.0])), 0.5)
    e = math.e
    assert np.allclose(softmax(np.array([1.0, 0.0])), [e / (e + 1), 1 / (e + 1)])
    with pytest.raises(ArgumentError):
        forward(zeros(arch), arch, np.zeros((5, 3)))


def test_cross_entropy_examples():
    arch = ArchSpec((1, 2, 2))
    Y = np.array([[1.0, 0.0]])
    assert cross_entropy(zeros(arch), arch, (np.array([[0.5]]), Y)) == pytest.approx(math.log(2))
    X = np.random.default_rng(0).random((20, 1))
    Y3 = np.eye(3)[np.arange(20) % 3]
    arch3 = ArchSpec((1, 4, 3))
    assert cross_entropy(zeros(arch3), arch3, (X, Y3)) == pytest.approx(math.log(3))
    # growing logit margins drive the loss to zero monotonically
    arch0 = ArchSpec((1, 1, 2))
    losses = []
    for margin in [0.5, 1, 2, 4, 8, 16]:
        p = NetParams([np.array([[1.0]]), np.array([[margin], [0.0]])], [np.array([-1.0])])
        losses.append(cross_entropy(p, arch0, (np.array([[0.0]]), Y)))
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_gradient_random_small():
    rng = substream(0, "test-grad")
    arch = ArchSpec((2, 4, 4, 2))
    p = init_params(arch, rng)
    X = rng.random((16, 2))
    Y = np.eye(2)[rng.integers(0, 2, 16)]
    assert gradient_check(p, arch, (X, Y)) <= 1e-5


def test_gradient_symmetric_stationary():
    # zero output layer and balanced labels: the loss is at a stationary point
    arch = ArchSpec((1, 3, 2))
    p = init_params(arch, substream(1, "t"))
    p = NetParams([p.weights[0], np.zeros((2, 3))], p.biases)
    X = np.array([[0.2], [0.2]])
    Y = np.array([[1.0, 0.0], [0.0, 1.0]])
    g = gradient(p, arch, (X, Y))
    assert np.allclose(g.flat(), 0.0, atol=1e-15)


def test_dead_relu_gradient_zero():
    arch = ArchSpec((1, 2, 2))
    W0 = np.array([[1.0], [1.0]])
    v = np.array([0.0, 5.0])  # second unit computes relu(x - 5) = 0 on [0,1]
    p = NetParams([W0, np.array([[0.3, 0.7], [-0.2, 0.1]])], [v])
    X = np.random.default_rng(2).random((10, 1))
    Y = np.eye(2)[np.arange(10) % 2]
    g = gradient(p, arch, (X, Y))
    assert g.weights[0][1, 0] == 0 and g.biases[0][1] == 0 and np.all(g.weights[1][:, 1] == 0)


def test_project_sup():
    p = NetParams([np.array([[3.5, -0.2]]), np.array([[-7.0]])], [np.array([2.0])])
    q = project_sup(p, 1.0)
    assert q.weights[0][0, 0] == 1.0 and q.weights[1][0, 0] == -1.0 and q.biases[0][0] == 1.0
    assert np.array_equal(project_sup(q, 1.0).flat(), q.flat())
    inside = project_sup(p, 10.0)
    assert np.array_equal(inside.flat(), p.flat())


def test_count_nonzero():
    arch = ArchSpec((2, 3, 2))
    assert count_nonzero(zeros(arch)) == 0
    ident = identity_net(2, 2)
    # [I; -I] (4), I_4 (4), [I, -I] (4), biases all zero
    assert count_nonzero(ident.params) == 12
    p = init_params(arch, substream(0, "c"))
    assert count_nonzero(p) <= arch.n_params


def test_json_round_trip():
    arch = ArchSpec((2, 5, 3), B=4.0)
    p = init_params(arch, substream(3, "j"))
    q, arch2 = from_json(to_json(p, arch))
    assert arch2 == arch and np.array_equal(q.flat(), p.flat())


def test_exp_log_examples():
    for M in (10.0, 100.0, 1000.0):
        net = build_exp_log_network(M)
        x = np.linspace(0, 1, 100_000)[:, None]
        G = net(x)[:, 0]
        assert np.max(np.abs(np.exp(G) - x[:, 0])) <= 4 / M
        assert G.min() >= math.log(4 / M) - 1e-12
        at = net(np.array([[4 / M]]))[0, 0]
        assert abs(math.exp(at) - 4 / M) <= 1e-12
        assert 0 <= math.exp(net(np.array([[0.0]]))[0, 0]) <= 8 / M
    with pytest.raises(ArgumentError):
        build_exp_log_network(1.5)


def test_compose_with_floor_examples():
    const = lambda c: from_layers([np.zeros((1, 1)), np.array([[c]])], [np.array([-1.0])])
    # relu(0*x + 1) = 1, scaled by c
    equal = compose_with_floor([const(0.3)] * 3, 100.0)
    assert np.allclose(equal(np.array([[0.5]])), 1 / 3)
    net = compose_with_floor([const(1.0), const(0.0)], 100.0)
    out = net(np.array([[0.2]]))[0]
    want = np.array([1.0, 0.04]) / 1.04
    assert np.allclose(out, want, rtol=1e-12)
    assert out.min() >= net.meta["floor"]
    with pytest.raises(ArgumentError):
        compose_with_floor([const(1.0)], 1.0)


def test_softmax_lipschitz_and_exp_inequality():
    rng = np.random.default_rng(5)
    K = 4
    a = rng.normal(0, 3, (10_000, K))
    b = a + rng.normal(0, 0.5, (10_000, K))
    lhs = np.max(np.abs(softmax(a) - softmax(b)), axis=1)
    rhs = 2 * (K - 1) * np.max(np.abs(a - b), axis=1)
    assert np.all(lhs <= rhs + 1e-15)
    x, y = np.meshgrid(np.linspace(-5, 5, 301), np.linspace(-5, 5, 301))
    assert np.all(np.abs(np.exp(x) - np.exp(y)) <= (np.exp(x) + np.exp(y)) * np.abs(x - y) + 1e-12)


def test_stitching_equivalence():
    rng = np.random.default_rng(8)
    f = random_net(rng, 3, [5, 4], 2)
    g = random_net(rng, 2, [3], 1)
    X = rng.uniform(-1, 1, (1000, 3))
    comp = stitch_compose(g, f)
    assert np.max(np.abs(comp(X) - g(f(X)))) <= 1e-9
    par = stitch_parallel([f, random_net(rng, 3, [6], 3)])
    h = par(X)
    assert h.shape == (1000, 5)
    assert np.max(np.abs(h[:, :2] - f(X))) <= 1e-9
    deep = stitch_sync_depth(f, 6)
    assert deep.L == 6 and np.max(np.abs(deep(X) - f(X))) <= 1e-9
    pad = stitch_compose(identity_net(2, 3), f)
    assert np.max(np.abs(pad(X) - f(X))) <= 1e-9
    with pytest.raises(ArgumentError):
        stitch_compose(f, g)


def test_derived_floor():
    assert derived_floor(2, 100.0) == pytest.approx(0.04 / 1.08)
