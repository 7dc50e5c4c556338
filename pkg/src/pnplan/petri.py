"""Generic place/transition Petri nets with integer firing semantics.

Markings and firing-count vectors are plain 1-D integer numpy arrays aligned
with the net's place/transition ordering.  All operations are pure; nets are
immutable after construction and safe to share.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractViolation, InfeasibleFiring, OracleOverflow


def _as_int_matrix(a, rows, cols, what):
    m = np.asarray(a, dtype=np.int64)
    if m.shape != (rows, cols):
        raise ContractViolation(f"{what} must have shape {(rows, cols)}, got {m.shape}")
    if (m < 0).any():
        raise ContractViolation(f"{what} entries must be nonnegative")
    return m


@dataclass(frozen=True)
class PetriNet:
    """Net structure: ordered places/transitions plus pre/post arc matrices."""

    places: tuple[str, ...]
    transitions: tuple[str, ...]
    pre: np.ndarray  # |P| x |T|, nonnegative integers
    post: np.ndarray  # |P| x |T|, nonnegative integers

    def __post_init__(self):
        np_, nt = len(self.places), len(self.transitions)
        object.__setattr__(self, "pre", _as_int_matrix(self.pre, np_, nt, "pre"))
        object.__setattr__(self, "post", _as_int_matrix(self.post, np_, nt, "post"))
        self.pre.setflags(write=False)
        self.post.setflags(write=False)

    @property
    def num_places(self):
        return len(self.places)

    @property
    def num_transitions(self):
        return len(self.transitions)

    @cached_property
    def place_index(self):
        return {p: i for i, p in enumerate(self.places)}

    @cached_property
    def transition_index(self):
        return {t: j for j, t in enumerate(self.transitions)}


def marking(net: PetriNet, values) -> np.ndarray:
    """Validate and return an integer marking vector for ``net``."""
    m = np.asarray(values, dtype=np.int64)
    if m.shape != (net.num_places,):
        raise ContractViolation(f"marking length {m.shape} != |P|={net.num_places}")
    if (m < 0).any():
        raise ContractViolation("marking entries must be nonnegative")
    return m


def firing_count(net: PetriNet, values) -> np.ndarray:
    """Validate and return an integer firing-count vector for ``net``."""
    s = np.asarray(values, dtype=np.int64)
    if s.shape != (net.num_transitions,):
        raise ContractViolation(f"firing vector length {s.shape} != |T|={net.num_transitions}")
    if (s < 0).any():
        raise ContractViolation("firing counts must be nonnegative")
    return s


def unit_firing(net: PetriNet, t) -> np.ndarray:
    """Firing vector that fires transition ``t`` (index or name) once."""
    j = net.transition_index[t] if isinstance(t, str) else int(t)
    s = np.zeros(net.num_transitions, dtype=np.int64)
    s[j] = 1
    return s


def token_flow(net: PetriNet) -> np.ndarray:
    """Token flow matrix ``post - pre`` (exact integers)."""
    return net.post - net.pre


def is_enabled(net: PetriNet, m, firing) -> bool:
    """True iff ``m - pre @ firing >= 0`` entrywise (aggregate enabledness)."""
    m = marking(net, m)
    s = firing_count(net, firing)
    return bool((m - net.pre @ s >= 0).all())


def fire(net: PetriNet, m, firing) -> np.ndarray:
    """State equation ``m + (post - pre) @ firing``.

    Aggregate semantics: the caller is responsible for stepwise realizability;
    only the nonnegativity of the result is enforced here.
    """
    m = marking(net, m)
    s = firing_count(net, firing)
    result = m + token_flow(net) @ s
    if (result < 0).any():
        raise InfeasibleFiring("firing would drive a place negative")
    return result


def bfs_reachability(net: PetriNet, m0, depth_bound: int, node_cap: int = 100_000):
    """Breadth-first search over single-transition firings.

    Returns ``(markings, parents)`` where ``markings`` is the set of reachable
    marking tuples within ``depth_bound`` steps and ``parents`` maps a marking
    tuple to ``(parent_tuple, transition_index)`` for replaying the path.
    """
    m0 = marking(net, m0)
    start = tuple(int(x) for x in m0)
    seen = {start}
    parents = {start: None}
    frontier = deque([(start, 0)])
    flow = token_flow(net)
    while frontier:
        cur, depth = frontier.popleft()
        if depth >= depth_bound:
            continue
        cur_arr = np.array(cur, dtype=np.int64)
        for j in range(net.num_transitions):
            if (cur_arr >= net.pre[:, j]).all():
                nxt = tuple(int(x) for x in cur_arr + flow[:, j])
                if nxt not in seen:
                    if len(seen) >= node_cap:
                        raise OracleOverflow(
                            f"reachability frontier exceeded node cap {node_cap}")
                    seen.add(nxt)
                    parents[nxt] = (cur, j)
                    frontier.append((nxt, depth + 1))
    return seen, parents


def reachable_markings(net: PetriNet, m0, depth_bound: int, node_cap: int = 100_000):
    """Exact set of markings reachable by at most ``depth_bound`` firings."""
    seen, _ = bfs_reachability(net, m0, depth_bound, node_cap)
    return seen


def replay_path(net: PetriNet, parents, target) -> list[int]:
    """Transition-index sequence realizing ``target`` from the BFS root."""
    path = []
    cur = tuple(int(x) for x in target)
    while parents[cur] is not None:
        prev, j = parents[cur]
        path.append(j)
        cur = prev
    path.reverse()
    return path
