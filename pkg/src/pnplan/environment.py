"""Environment ingestion and construction of the robot-motion Petri net.

Two input formats are supported:

* grid format::

      grid W H R
      .      y1     y1+y2@r1   #
      ...

  Header then H rows of W whitespace-separated cell tokens.  ``.`` is a free
  cell, ``#`` a hole (no cell), ``yK[+yJ...]`` a labeled cell; the suffix
  ``@rN`` marks robot N's start cell.  Cells are numbered p1, p2, ... in
  row-major order over non-hole cells and are 4-connected.

* adjacency format (for non-grid decompositions)::

      cells
      cell p1 . 0 0
      cell p4 y3@r1 0 1
      adj p1 p4

  ``cell NAME TOKEN [X Y]`` declares a cell with the same token syntax as the
  grid format plus optional drawing coordinates; ``adj A B`` declares an
  undirected adjacency.

The ROI alphabet is inferred from the labels in either format.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ParseError
from .petri import PetriNet, marking

_LABEL_RE = re.compile(r"^y\d+$")


@dataclass(frozen=True)
class Environment:
    """Partitioned workspace: labeled cells, adjacency, robot start cells."""

    cells: tuple[str, ...]
    labels: dict  # cell name -> frozenset of ROI symbols
    adjacency: tuple  # undirected pairs (a, b), deterministic order
    robot_cells: tuple[str, ...]  # index r-1 -> start cell of robot r
    alphabet: tuple[str, ...]
    coords: dict  # cell name -> (x, y) drawing position, may be empty
    width: int = 0  # nonzero only for grid inputs
    height: int = 0


@dataclass(frozen=True)
class Rmpn:
    """Robot-motion Petri net: one place per cell, transitions = moves."""

    net: PetriNet
    m0: np.ndarray
    alphabet: tuple[str, ...]
    obs: tuple  # frozenset per place, aligned with net.places

    def __post_init__(self):
        # state-machine shape: every transition one input, one output, weight 1
        if not ((self.net.pre.sum(axis=0) == 1).all()
                and (self.net.post.sum(axis=0) == 1).all()
                and self.net.pre.max(initial=0) <= 1
                and self.net.post.max(initial=0) <= 1):
            raise ContractViolation("RMPN transitions must be unit-weight state-machine moves")
        self.m0.setflags(write=False)

    @property
    def robot_count(self):
        return int(self.m0.sum())


def _alphabet_sort_key(sym):
    m = re.match(r"^y(\d+)$", sym)
    return (0, int(m.group(1))) if m else (1, sym)


def _parse_cell_token(tok, line_no):
    """Split a cell token into (label set, robot number or None)."""
    robot = None
    if "@" in tok:
        tok, _, rpart = tok.partition("@")
        m = re.match(r"^r(\d+)$", rpart)
        if not m:
            raise ParseError(f"bad robot marker {rpart!r}", line=line_no)
        robot = int(m.group(1))
    if tok == ".":
        return frozenset(), robot
    labels = tok.split("+")
    for lab in labels:
        if not _LABEL_RE.match(lab):
            raise ParseError(f"bad cell label {lab!r}", line=line_no)
    return frozenset(labels), robot


def _collect_robots(robot_slots, n_expected=None):
    if not robot_slots:
        raise ParseError("no robot start cells declared")
    nums = sorted(robot_slots)
    if nums != list(range(1, len(nums) + 1)):
        raise ParseError(f"robot numbers must be 1..N, got {nums}")
    if n_expected is not None and len(nums) != n_expected:
        raise ParseError(f"header declares {n_expected} robots, found {len(nums)}")
    return tuple(robot_slots[n] for n in nums)


def _parse_grid(lines):
    header = lines[0][1].split()
    if len(header) != 4:
        raise ParseError("grid header must be 'grid W H R'", line=lines[0][0])
    try:
        width, height, nrobots = int(header[1]), int(header[2]), int(header[3])
    except ValueError:
        raise ParseError("grid header must be 'grid W H R'", line=lines[0][0]) from None
    rows = lines[1:]
    if len(rows) != height:
        raise ParseError(f"expected {height} grid rows, found {len(rows)}")
    cells, labels, coords = [], {}, {}
    grid_names = {}
    robot_slots = {}
    for r, (line_no, row) in enumerate(rows):
        toks = row.split()
        if len(toks) != width:
            raise ParseError(f"expected {width} tokens, found {len(toks)}", line=line_no)
        for c, tok in enumerate(toks):
            if tok == "#":
                continue
            name = f"p{len(cells) + 1}"
            labset, robot = _parse_cell_token(tok, line_no)
            cells.append(name)
            labels[name] = labset
            coords[name] = (c, r)
            grid_names[(r, c)] = name
            if robot is not None:
                if robot in robot_slots:
                    raise ParseError(f"robot r{robot} declared twice", line=line_no)
                robot_slots[robot] = name
    adjacency = []
    for r, c in sorted(grid_names):
        here = grid_names[(r, c)]
        if (r, c + 1) in grid_names:
            adjacency.append((here, grid_names[(r, c + 1)]))
        if (r + 1, c) in grid_names:
            adjacency.append((here, grid_names[(r + 1, c)]))
    robots = _collect_robots(robot_slots, nrobots)
    alphabet = tuple(sorted({y for s in labels.values() for y in s}, key=_alphabet_sort_key))
    return Environment(tuple(cells), labels, tuple(adjacency), robots, alphabet,
                       coords, width, height)


def _parse_adjacency(lines):
    cells, labels, coords = [], {}, {}
    adjacency = []
    robot_slots = {}
    for line_no, line in lines[1:]:
        toks = line.split()
        if toks[0] == "cell":
            if len(toks) not in (3, 5):
                raise ParseError("cell line must be 'cell NAME TOKEN [X Y]'", line=line_no)
            name = toks[1]
            if name in labels:
                raise ParseError(f"cell {name!r} declared twice", line=line_no)
            labset, robot = _parse_cell_token(toks[2], line_no)
            cells.append(name)
            labels[name] = labset
            if len(toks) == 5:
                coords[name] = (float(toks[3]), float(toks[4]))
            if robot is not None:
                if robot in robot_slots:
                    raise ParseError(f"robot r{robot} declared twice", line=line_no)
                robot_slots[robot] = name
        elif toks[0] == "adj":
            if len(toks) != 3:
                raise ParseError("adj line must be 'adj A B'", line=line_no)
            a, b = toks[1], toks[2]
            for x in (a, b):
                if x not in labels:
                    raise ParseError(f"unknown cell {x!r} in adjacency", line=line_no)
            if a == b or (a, b) in adjacency or (b, a) in adjacency:
                raise ParseError(f"bad or duplicate adjacency {a} {b}", line=line_no)
            adjacency.append((a, b))
        else:
            raise ParseError(f"unknown directive {toks[0]!r}", line=line_no)
    robots = _collect_robots(robot_slots)
    alphabet = tuple(sorted({y for s in labels.values() for y in s}, key=_alphabet_sort_key))
    return Environment(tuple(cells), labels, tuple(adjacency), robots, alphabet, coords)


def parse_environment(text: str) -> Environment:
    # '//' starts a comment line ('#' is the hole marker inside grid rows)
    meaningful = []
    for i, ln in enumerate(text.splitlines(), start=1):
        stripped = ln.strip()
        if not stripped or stripped.startswith("//"):
            continue
        meaningful.append((i, stripped))
    if not meaningful:
        raise ParseError("empty environment file")
    head = meaningful[0][1].split()[0]
    if head == "grid":
        return _parse_grid(meaningful)
    if head == "cells":
        return _parse_adjacency(meaningful)
    raise ParseError(f"unknown environment format {head!r}", line=meaningful[0][0])


def build_rmpn(env: Environment) -> Rmpn:
    """One place per cell; two opposite unit transitions per adjacent pair."""
    n = len(env.cells)
    idx = {c: i for i, c in enumerate(env.cells)}
    tnames = []
    arcs = []  # (src index, dst index)
    for a, b in env.adjacency:
        for s, d in ((a, b), (b, a)):
            tnames.append(f"{s}->{d}")
            arcs.append((idx[s], idx[d]))
    pre = np.zeros((n, len(tnames)), dtype=np.int64)
    post = np.zeros((n, len(tnames)), dtype=np.int64)
    for j, (s, d) in enumerate(arcs):
        pre[s, j] = 1
        post[d, j] = 1
    net = PetriNet(env.cells, tuple(tnames), pre, post)
    m0 = np.zeros(n, dtype=np.int64)
    for cell in env.robot_cells:
        if m0[idx[cell]]:
            raise ContractViolation(f"more than one robot starts in cell {cell}")
        m0[idx[cell]] = 1
    obs = tuple(env.labels[c] for c in env.cells)
    return Rmpn(net, marking(net, m0), env.alphabet, obs)


def observation_of(rmpn: Rmpn, m) -> frozenset:
    """Active ROI symbols of a marking: labels of all marked places."""
    m = np.asarray(m)
    active = set()
    for i in np.nonzero(m)[0]:
        active |= rmpn.obs[i]
    return frozenset(active)
