import json
import random
from fractions import Fraction as F

import pytest

from helpers import layer, net, random_network
from luknet.network import (
    DimensionMismatch,
    Network,
    NodeRef,
    eval_network,
    input_interval,
    is_non_degenerate,
    network_from_json,
    network_to_json,
    networks_equal_up_to_permutation,
    node_local_map,
    node_preactivations,
)


def nprime() -> Network:
    # rho(1 - rho(1 - x)): identity on [0,1], constant outside.
    return net(
        1,
        layer([[-1]], [1], ["relu"]),
        layer([[-1]], [1], ["relu"]),
        layer([[1]], [0], ["none"]),
    )


def dag_network() -> Network:
    return net(
        2,
        layer([[1, 2], [-2, 0]], [-1, 1], ["relu", "relu"]),
        layer([[-1, 1], [1, -1]], [1, -1], ["relu", "relu"]),
        layer([[-1, -1]], [1], ["relu"]),
        layer([[1]], [0], ["none"]),
    )


def test_eval_nprime():
    n = nprime()
    assert eval_network(n, [F(1, 2)]) == F(1, 2)
    assert eval_network(n, [F(0)]) == 0
    assert eval_network(n, [F(1)]) == 1


def test_eval_constant_zero_network():
    nstar = net(
        2,
        layer([[-2, 0], [1, 1], [1, 1]], [1, 0, -1], ["relu"] * 3),
        layer([[1, 0, 1]], [-1], ["relu"]),
        layer([[1]], [0], ["none"]),
    )
    assert eval_network(nstar, [F(1, 2), F(1, 2)]) == 0
    for x in ([F(0), F(0)], [F(1), F(0)], [F(0), F(1)], [F(1), F(1)], [F(1, 3), F(2, 3)]):
        assert eval_network(nstar, x) == 0


def test_eval_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        eval_network(nprime(), [F(0), F(0)])


def test_node_local_map():
    d = dag_network()
    w, b, act = node_local_map(d, NodeRef(1, 1))
    assert (w, b, act) == ((F(1), F(2)), F(-1), "relu")
    w, b, act = node_local_map(d, NodeRef(4, 1))
    assert (w, b, act) == ((F(1),), F(0), "none")
    with pytest.raises(ValueError):
        node_local_map(d, NodeRef(0, 1))  # input layer has no local map


def test_input_interval_examples():
    assert input_interval((F(1), F(2)), F(-1)).lo == -1
    assert input_interval((F(1), F(2)), F(-1)).hi == 2
    assert input_interval((F(-2),), F(1)).lo == -1
    assert input_interval((F(-2),), F(1)).hi == 1
    iv = input_interval((), F(5))
    assert (iv.lo, iv.hi) == (5, 5)


def test_input_interval_bounds_attained():
    rng = random.Random(8)
    for _ in range(100):
        d = rng.randint(1, 4)
        w = tuple(F(rng.randint(-4, 4)) for _ in range(d))
        b = F(rng.randint(-3, 3))
        iv = input_interval(w, b)
        at_lo = [F(1) if c < 0 else F(0) for c in w]
        at_hi = [F(1) if c > 0 else F(0) for c in w]
        assert sum(c * v for c, v in zip(w, at_lo)) + b == iv.lo
        assert sum(c * v for c, v in zip(w, at_hi)) + b == iv.hi


def test_piecewise_affinity_on_fixed_pattern_segment():
    # If the activation pattern is constant along [a,b] (checked by sampling),
    # the midpoint value is the average of the endpoint values.
    rng = random.Random(9)
    done = 0
    while done < 40:
        n = rng.randint(1, 3)
        network = random_network(rng, n, [rng.randint(1, 3)])
        a = [F(rng.randint(0, 8), 8) for _ in range(n)]
        b = [F(rng.randint(0, 8), 8) for _ in range(n)]
        mid = [(p + q) / 2 for p, q in zip(a, b)]
        signs = []
        for x in (a, b, mid):
            pre = node_preactivations(network, x)
            signs.append(tuple(t > 0 for lay in pre[:-1] for t in lay))
        if signs[0] != signs[1] or signs[0] != signs[2]:
            continue
        va, vb, vm = (eval_network(network, x) for x in (a, b, mid))
        assert vm == (va + vb) / 2
        done += 1


def test_clip_network_values_stay_in_unit_interval():
    rng = random.Random(10)
    for _ in range(30):
        n = rng.randint(1, 3)
        network = random_network(rng, n, [rng.randint(1, 3)], activation="clip")
        x = [F(rng.randint(0, 6), 6) for _ in range(n)]
        pre = node_preactivations(network, x)
        for lay, acts in zip(pre[:-1], network.layers):
            for t, act in zip(lay, acts.activations):
                assert act == "clip"
                clipped = min(max(t, F(0)), F(1))
                assert 0 <= clipped <= 1


def test_non_degenerate_examples():
    ok, why = is_non_degenerate(nprime())
    assert ok and why is None
    dead = net(1, layer([[1]], [-5], ["relu"]), layer([[1]], [0], ["none"]))
    ok, why = is_non_degenerate(dead)
    assert not ok and "never active" in why
    dup = net(
        2,
        layer([[1, 0], [1, 0]], [0, 0], ["relu", "relu"]),
        layer([[1, 1]], [0], ["none"]),
    )
    ok, why = is_non_degenerate(dup)
    assert not ok and "identical local maps" in why
    zero_out = net(1, layer([[1]], [0], ["relu"]), layer([[0]], [0], ["none"]))
    ok, why = is_non_degenerate(zero_out)
    assert not ok and "zero incoming" in why


def test_non_degenerate_fast_and_slow_agree():
    rng = random.Random(11)
    for _ in range(25):
        network = random_network(rng, rng.randint(1, 2), [rng.randint(1, 3)])
        assert is_non_degenerate(network, fast=True)[0] == is_non_degenerate(network, fast=False)[0]


def test_json_roundtrip():
    d = dag_network()
    text = network_to_json(d)
    assert network_from_json(text) == d
    data = json.loads(text)
    assert data["input_dim"] == 2
    assert data["layers"][0]["weights"] == [["1", "2"], ["-2", "0"]]
    assert data["layers"][0]["activation"] == ["relu", "relu"]


def test_structural_equality_is_strict():
    a = net(1, layer([[1], [0]], [0, 0], ["relu", "relu"]), layer([[1, 0]], [0], ["none"]))
    b = net(1, layer([[0], [1]], [0, 0], ["relu", "relu"]), layer([[0, 1]], [0], ["none"]))
    assert a != b
    assert networks_equal_up_to_permutation(a, b)
    c = net(1, layer([[0], [1]], [0, 0], ["relu", "relu"]), layer([[1, 0]], [0], ["none"]))
    assert not networks_equal_up_to_permutation(a, c)


def test_validation_rejects_bad_shapes():
    with pytest.raises(Exception):
        net(1, layer([[1, 2]], [0], ["relu"]), layer([[1]], [0], ["none"]))
    with pytest.raises(ValueError):
        net(1, layer([[1]], [0], ["none"]), layer([[1]], [0], ["none"]))
    with pytest.raises(ValueError):
        net(1, layer([[1], [1]], [0, 1], ["relu", "relu"]))  # output width != 1
