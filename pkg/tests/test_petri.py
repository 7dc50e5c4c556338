"""Tests for the core Petri-net structures and firing semantics."""

import numpy as np
import pytest

from pnplan import (ContractViolation, InfeasibleFiring, OracleOverflow,
                    PetriNet, bfs_reachability, fire, firing_count, is_enabled,
                    marking, reachable_markings, replay_path, token_flow,
                    unit_firing)


def chain_net():
    # a -> b -> c, one token travelling left to right
    pre = [[1, 0], [0, 1], [0, 0]]
    post = [[0, 0], [1, 0], [0, 1]]
    return PetriNet(("a", "b", "c"), ("t1", "t2"), pre, post)


def test_net_validation():
    with pytest.raises(ContractViolation):
        PetriNet(("a",), ("t",), [[1, 0]], [[0]])
    with pytest.raises(ContractViolation):
        PetriNet(("a",), ("t",), [[-1]], [[0]])


def test_net_is_immutable():
    net = chain_net()
    with pytest.raises(ValueError):
        net.pre[0, 0] = 5


def test_marking_and_firing_validation():
    net = chain_net()
    with pytest.raises(ContractViolation):
        marking(net, [1, 0])
    with pytest.raises(ContractViolation):
        marking(net, [1, 0, -1])
    with pytest.raises(ContractViolation):
        firing_count(net, [1])
    assert unit_firing(net, "t2").tolist() == [0, 1]
    assert unit_firing(net, 0).tolist() == [1, 0]


def test_token_flow_and_fire():
    net = chain_net()
    assert token_flow(net).tolist() == [[-1, 0], [1, -1], [0, 1]]
    m = fire(net, [1, 0, 0], unit_firing(net, "t1"))
    assert m.tolist() == [0, 1, 0]
    m = fire(net, m, unit_firing(net, "t2"))
    assert m.tolist() == [0, 0, 1]
    with pytest.raises(InfeasibleFiring):
        fire(net, [0, 0, 1], unit_firing(net, "t1"))


def test_is_enabled():
    net = chain_net()
    assert is_enabled(net, [1, 0, 0], [1, 0])
    assert not is_enabled(net, [1, 0, 0], [0, 1])
    # aggregate enabledness: both transitions need their own token
    assert not is_enabled(net, [1, 0, 0], [1, 1])
    assert is_enabled(net, [1, 1, 0], [1, 1])


def test_state_equation_random_walks():
    rng = np.random.default_rng(7)
    for _ in range(30):
        np_, nt = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        pre = rng.integers(0, 2, size=(np_, nt))
        post = rng.integers(0, 2, size=(np_, nt))
        net = PetriNet(tuple(f"p{i}" for i in range(np_)),
                       tuple(f"t{j}" for j in range(nt)), pre, post)
        m = rng.integers(0, 3, size=np_)
        total = np.zeros(nt, dtype=np.int64)
        cur = m.copy()
        for _ in range(10):
            enabled = [j for j in range(nt) if is_enabled(net, cur, unit_firing(net, j))]
            if not enabled:
                break
            j = int(rng.choice(enabled))
            cur = fire(net, cur, unit_firing(net, j))
            total[j] += 1
        assert (cur == m + token_flow(net) @ total).all()


def test_bfs_reachability_and_replay():
    net = chain_net()
    seen, parents = bfs_reachability(net, [1, 0, 0], depth_bound=5)
    assert seen == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    path = replay_path(net, parents, (0, 0, 1))
    assert path == [0, 1]
    assert reachable_markings(net, [1, 0, 0], depth_bound=1) == {(1, 0, 0), (0, 1, 0)}


def test_bfs_node_cap():
    # unbounded producer: t adds a token to a forever
    net = PetriNet(("a",), ("t",), [[0]], [[1]])
    with pytest.raises(OracleOverflow):
        bfs_reachability(net, [0], depth_bound=10_000, node_cap=50)
