"""Composition of the quotient motion net with the Büchi net.

The composed net has four place blocks:

* region places (copied from the quotient),
* automaton-state places (copied from the Büchi net),
* one observation place per ROI symbol, counting robots currently inside
  regions labeled with that symbol,
* one complement place per ROI symbol, so that for every symbol the pair of
  counters always sums to the robot count.

Motion transitions are copied and additionally move observation tokens:
entering a region labeled ``y`` moves a token from the complement place of
``y`` to its observation place, leaving does the opposite.  Automaton
transitions gain reading arcs (self-loops) that test their clause: weight-1
loops on the observation place for positive literals and weight-``|R|``
loops on the complement place for negated literals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buchi import BuchiPn
from .petri import PetriNet, marking
from .quotient import Quotient


@dataclass(frozen=True)
class ComposedPn:
    """Composed net plus index maps into its place/transition blocks."""

    net: PetriNet
    m0: np.ndarray
    quotient: Quotient
    buchi: BuchiPn
    robot_count: int
    region_slice: slice  # region places
    state_slice: slice  # automaton-state places
    obs_slice: slice  # observation places, aligned with alphabet
    cobs_slice: slice  # complement places, aligned with alphabet
    motion_slice: slice  # motion transitions
    buchi_slice: slice  # automaton transitions (edge + virtual)
    alphabet: tuple[str, ...]

    def __post_init__(self):
        self.m0.setflags(write=False)

    def split_firing(self, firing):
        """Return (motion part, edge part, virtual part) of a firing vector."""
        motion = np.asarray(firing)[self.motion_slice]
        b = np.asarray(firing)[self.buchi_slice]
        virt = self.buchi.virtual
        return motion, np.where(virt, 0, b), np.where(virt, b, 0)


def active_observations(composed: ComposedPn, m) -> frozenset:
    """ROI symbols whose observation place is marked."""
    m = np.asarray(m)
    return frozenset(sym for k, sym in enumerate(composed.alphabet)
                     if m[composed.obs_slice][k] > 0)


def compose(quotient: Quotient, buchi: BuchiPn, robot_count: int) -> ComposedPn:
    alphabet = tuple(sorted({y for s in quotient.obs for y in s},
                            key=lambda s: (len(s), s)))
    # preserve the ROI symbols referenced by the automaton even if absent
    # from the environment (their observation place just stays empty)
    extra = sorted({a for c in buchi.clause_of if c is not None
                    for a in (c.pos | c.neg)} - set(alphabet),
                   key=lambda s: (len(s), s))
    alphabet = tuple(list(alphabet) + list(extra))

    nq = len(quotient.net.places)
    nb = len(buchi.net.places)
    ny = len(alphabet)
    region_slice = slice(0, nq)
    state_slice = slice(nq, nq + nb)
    obs_slice = slice(nq + nb, nq + nb + ny)
    cobs_slice = slice(nq + nb + ny, nq + nb + 2 * ny)
    n = nq + nb + 2 * ny

    ntm = len(quotient.net.transitions)
    ntb = len(buchi.net.transitions)
    motion_slice = slice(0, ntm)
    buchi_slice = slice(ntm, ntm + ntb)

    pre = np.zeros((n, ntm + ntb), dtype=np.int64)
    post = np.zeros((n, ntm + ntb), dtype=np.int64)
    pre[region_slice, motion_slice] = quotient.net.pre
    post[region_slice, motion_slice] = quotient.net.post
    pre[state_slice, buchi_slice] = buchi.net.pre
    post[state_slice, buchi_slice] = buchi.net.post

    yidx = {y: k for k, y in enumerate(alphabet)}
    # motion transitions update the observation counters
    for j in range(ntm):
        src = int(np.nonzero(quotient.net.pre[:, j])[0][0])
        dst = int(np.nonzero(quotient.net.post[:, j])[0][0])
        for y in quotient.obs[dst] - quotient.obs[src]:
            pre[cobs_slice.start + yidx[y], j] = 1
            post[obs_slice.start + yidx[y], j] = 1
        for y in quotient.obs[src] - quotient.obs[dst]:
            pre[obs_slice.start + yidx[y], j] = 1
            post[cobs_slice.start + yidx[y], j] = 1
    # automaton transitions read the counters through self-loops
    for j, clause in enumerate(buchi.clause_of):
        if clause is None:
            continue
        col = ntm + j
        for y in clause.pos:
            pre[obs_slice.start + yidx[y], col] = 1
            post[obs_slice.start + yidx[y], col] = 1
        for y in clause.neg:
            pre[cobs_slice.start + yidx[y], col] = robot_count
            post[cobs_slice.start + yidx[y], col] = robot_count

    pnames = (tuple(quotient.net.places) + tuple(buchi.net.places)
              + tuple(f"o:{y}" for y in alphabet)
              + tuple(f"no:{y}" for y in alphabet))
    tnames = tuple(quotient.net.transitions) + tuple(buchi.net.transitions)
    net = PetriNet(pnames, tnames, pre, post)

    m0 = np.zeros(n, dtype=np.int64)
    m0[region_slice] = quotient.m0
    m0[state_slice] = buchi.m0
    for k, y in enumerate(alphabet):
        inside = sum(int(quotient.m0[q]) for q in range(nq) if y in quotient.obs[q])
        m0[obs_slice.start + k] = inside
        m0[cobs_slice.start + k] = robot_count - inside
    return ComposedPn(net, marking(net, m0), quotient, buchi, robot_count,
                      region_slice, state_slice, obs_slice, cobs_slice,
                      motion_slice, buchi_slice, alphabet)
