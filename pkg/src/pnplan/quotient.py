"""Quotient of the robot-motion net by the observation map.

Adjacent cells with identical label sets are fused into a single region
place; parallel region-to-region transitions are deduplicated.  The result
is a much smaller state-machine net whose markings count robots per region,
together with the projection matrix mapping cell markings to region markings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import Rmpn
from .petri import PetriNet, marking


@dataclass(frozen=True)
class Quotient:
    """Quotient net plus bookkeeping tying it back to the full net."""

    net: PetriNet
    m0: np.ndarray
    projection: np.ndarray  # |regions| x |cells|, 0/1, columns sum to 1
    obs: tuple  # frozenset per region place
    capacity: np.ndarray  # cells per region
    members: tuple  # tuple of cell-index tuples per region

    def __post_init__(self):
        if not (self.projection.sum(axis=0) == 1).all():
            raise ValueError("projection columns must each sum to 1")
        for arr in (self.m0, self.projection, self.capacity):
            arr.setflags(write=False)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the lower index as root so region order is deterministic
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def build_quotient(rmpn: Rmpn) -> Quotient:
    net = rmpn.net
    n = len(net.places)
    uf = _UnionFind(n)
    # fuse endpoints of every move whose cells share an observation
    for j in range(net.pre.shape[1]):
        s = int(np.nonzero(net.pre[:, j])[0][0])
        d = int(np.nonzero(net.post[:, j])[0][0])
        if rmpn.obs[s] == rmpn.obs[d]:
            uf.union(s, d)

    roots = sorted({uf.find(i) for i in range(n)})
    region_of = {r: k for k, r in enumerate(roots)}
    cell_region = np.array([region_of[uf.find(i)] for i in range(n)], dtype=np.int64)

    nq = len(roots)
    projection = np.zeros((nq, n), dtype=np.int64)
    projection[cell_region, np.arange(n)] = 1

    # deduplicate parallel transitions between the same region pair
    seen = {}
    tnames, arcs = [], []
    for j in range(net.pre.shape[1]):
        s = int(cell_region[np.nonzero(net.pre[:, j])[0][0]])
        d = int(cell_region[np.nonzero(net.post[:, j])[0][0]])
        if s == d or (s, d) in seen:
            continue
        seen[(s, d)] = len(tnames)
        tnames.append(f"q{s + 1}->q{d + 1}")
        arcs.append((s, d))

    qpre = np.zeros((nq, len(tnames)), dtype=np.int64)
    qpost = np.zeros((nq, len(tnames)), dtype=np.int64)
    for j, (s, d) in enumerate(arcs):
        qpre[s, j] = 1
        qpost[d, j] = 1
    pnames = tuple(f"q{k + 1}" for k in range(nq))
    qnet = PetriNet(pnames, tuple(tnames), qpre, qpost)
    qm0 = projection @ rmpn.m0
    obs = tuple(rmpn.obs[roots[k]] for k in range(nq))
    capacity = projection.sum(axis=1)
    members = tuple(tuple(int(i) for i in np.nonzero(cell_region == k)[0]) for k in range(nq))
    return Quotient(qnet, marking(qnet, qm0), projection, obs, capacity, members)
