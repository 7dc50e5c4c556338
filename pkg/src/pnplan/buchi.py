"""Büchi automata over ROI observations, and their Petri-net encoding.

The automaton file format::

    states: s1 s2 s3
    initial: s1
    final: s3
    edge: s1 s1 !(y1 | y2)
    edge: s1 s2 y1 & y2
    ...

Guards are boolean formulas over atoms ``yK`` with ``!``, ``&``, ``|``,
parentheses and the constant ``true``.  Each guard is normalized to DNF; the
Petri-net encoding creates one transition per (edge, DNF clause) so that a
transition's reading arcs express exactly one conjunction of literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, ParseError
from .petri import PetriNet, marking

# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Formula:
    """Boolean formula node: op in {'atom', 'true', 'not', 'and', 'or'}."""

    op: str
    name: str = ""
    args: tuple = ()

    def __str__(self):
        if self.op == "atom":
            return self.name
        if self.op == "true":
            return "true"
        if self.op == "not":
            a = self.args[0]
            return f"!{a}" if a.op in ("atom", "true") else f"!({a})"
        sep = " & " if self.op == "and" else " | "
        parts = []
        for a in self.args:
            need = self.op == "and" and a.op == "or"
            parts.append(f"({a})" if need else str(a))
        return sep.join(parts)


TRUE = Formula("true")

_TOKEN_RE = re.compile(r"\s*(y\d+|true|[!&|()])")


def parse_formula(text: str, line=None) -> Formula:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError(f"bad formula token at {text[pos:].strip()[:10]!r}",
                                 line=line, column=pos + 1)
            break
        tokens.append(m.group(1))
        pos = m.end()
    it = iter(range(len(tokens)))
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else None

    def parse_or():
        nonlocal i
        left = parse_and()
        while peek() == "|":
            i += 1
            right = parse_and()
            left = Formula("or", args=(left, right))
        return left

    def parse_and():
        nonlocal i
        left = parse_unary()
        while peek() == "&":
            i += 1
            right = parse_unary()
            left = Formula("and", args=(left, right))
        return left

    def parse_unary():
        nonlocal i
        tok = peek()
        if tok is None:
            raise ParseError("unexpected end of formula", line=line)
        if tok == "!":
            i += 1
            return Formula("not", args=(parse_unary(),))
        if tok == "(":
            i += 1
            inner = parse_or()
            if peek() != ")":
                raise ParseError("missing ')' in formula", line=line)
            i += 1
            return inner
        if tok == "true":
            i += 1
            return TRUE
        if re.match(r"^y\d+$", tok):
            i += 1
            return Formula("atom", name=tok)
        raise ParseError(f"unexpected {tok!r} in formula", line=line)

    if not tokens:
        raise ParseError("empty formula", line=line)
    result = parse_or()
    if i != len(tokens):
        raise ParseError(f"trailing tokens in formula: {tokens[i:]}", line=line)
    return result


@dataclass(frozen=True)
class Clause:
    """A conjunction of literals: positive and negated atom sets."""

    pos: frozenset
    neg: frozenset

    def satisfied_by(self, observation) -> bool:
        return self.pos <= observation and not (self.neg & observation)

    def __str__(self):
        lits = sorted(self.pos) + [f"!{a}" for a in sorted(self.neg)]
        return " & ".join(lits) if lits else "true"


def _nnf(f: Formula, negate=False) -> Formula:
    if f.op == "not":
        return _nnf(f.args[0], not negate)
    if f.op == "atom":
        return Formula("not", args=(f,)) if negate else f
    if f.op == "true":
        # negated constant: represent as empty 'or' (false)
        return Formula("or") if negate else f
    op = {"and": "or", "or": "and"}[f.op] if negate else f.op
    return Formula(op, args=tuple(_nnf(a, negate) for a in f.args))


def to_dnf(f: Formula) -> tuple:
    """Flatten to a tuple of non-contradictory, non-subsumed clauses."""

    def clauses(g):
        if g.op == "true":
            return [Clause(frozenset(), frozenset())]
        if g.op == "atom":
            return [Clause(frozenset([g.name]), frozenset())]
        if g.op == "not":
            return [Clause(frozenset(), frozenset([g.args[0].name]))]
        if g.op == "or":
            out = []
            for a in g.args:
                out.extend(clauses(a))
            return out
        # and: distribute
        prods = [Clause(frozenset(), frozenset())]
        for a in g.args:
            prods = [Clause(p.pos | c.pos, p.neg | c.neg)
                     for p in prods for c in clauses(a)]
        return prods

    raw = [c for c in clauses(_nnf(f)) if not (c.pos & c.neg)]
    # drop subsumed clauses, keep first-seen order
    kept = []
    for c in raw:
        if any(k.pos <= c.pos and k.neg <= c.neg for k in kept):
            continue
        kept = [k for k in kept if not (c.pos <= k.pos and c.neg <= k.neg)]
        kept.append(c)
    return tuple(kept)


def eval_formula(f: Formula, observation) -> bool:
    return any(c.satisfied_by(observation) for c in to_dnf(f))


# ---------------------------------------------------------------------------
# automata


@dataclass(frozen=True)
class BuchiAutomaton:
    states: tuple[str, ...]
    initial: tuple[str, ...]
    final: tuple[str, ...]
    edges: tuple  # (src, dst, Formula)

    def guard(self, src: str, dst: str):
        """Disjunction of all guards on (src, dst) edges, or None if absent."""
        gs = [g for s, d, g in self.edges if s == src and d == dst]
        if not gs:
            return None
        out = gs[0]
        for g in gs[1:]:
            out = Formula("or", args=(out, g))
        return out


def parse_automaton(text: str) -> BuchiAutomaton:
    states, initial, final = [], [], []
    edges = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key, rest = key.strip(), rest.strip()
        if not sep or key not in ("states", "initial", "final", "edge"):
            raise ParseError("expected 'states:', 'initial:', 'final:' or 'edge:'",
                             line=line_no)
        if key == "edge":
            parts = rest.split(None, 2)
            if len(parts) != 3:
                raise ParseError("edge line must be 'edge: SRC DST FORMULA'", line=line_no)
            src, dst, ftext = parts
            edges.append((src, dst, parse_formula(ftext, line=line_no)))
        else:
            names = rest.split()
            if not names:
                raise ParseError(f"empty {key!r} list", line=line_no)
            {"states": states, "initial": initial, "final": final}[key].extend(names)
    if not states:
        raise ParseError("automaton declares no states")
    known = set(states)
    if len(known) != len(states):
        raise ParseError("duplicate state names")
    for group, what in ((initial, "initial"), (final, "final")):
        for s in group:
            if s not in known:
                raise ParseError(f"unknown {what} state {s!r}")
    for src, dst, _g in edges:
        if src not in known or dst not in known:
            raise ParseError(f"edge references unknown state: {src} {dst}")
    if not initial:
        raise ParseError("automaton declares no initial state")
    if not final:
        raise ParseError("automaton declares no final state")
    return BuchiAutomaton(tuple(states), tuple(initial), tuple(final), tuple(edges))


# ---------------------------------------------------------------------------
# Petri-net encoding


@dataclass(frozen=True)
class BuchiPn:
    """State-machine net over automaton states.

    Transition kinds: ``edge`` transitions carry one DNF clause of one edge's
    guard, and each final state gets one zero-cost ``virtual`` self-loop.
    """

    net: PetriNet
    m0: np.ndarray
    automaton: BuchiAutomaton
    clause_of: tuple  # per transition: Clause for edge transitions, None for virtual
    edge_of: tuple  # per transition: (src, dst)
    virtual: np.ndarray  # bool mask over transitions

    def __post_init__(self):
        for arr in (self.m0, self.virtual):
            arr.setflags(write=False)


def build_buchi_pn(aut: BuchiAutomaton) -> BuchiPn:
    sidx = {s: i for i, s in enumerate(aut.states)}
    tnames, clause_of, edge_of, virtual, arcs = [], [], [], [], []
    for src, dst, guard in aut.edges:
        for c in to_dnf(guard):
            tnames.append(f"b:{src}->{dst}:{c}")
            clause_of.append(c)
            edge_of.append((src, dst))
            virtual.append(False)
            arcs.append((sidx[src], sidx[dst]))
    for s in aut.final:
        tnames.append(f"v:{s}")
        clause_of.append(None)
        edge_of.append((s, s))
        virtual.append(True)
        arcs.append((sidx[s], sidx[s]))
    n = len(aut.states)
    pre = np.zeros((n, len(tnames)), dtype=np.int64)
    post = np.zeros((n, len(tnames)), dtype=np.int64)
    for j, (s, d) in enumerate(arcs):
        pre[s, j] = 1
        post[d, j] = 1
    net = PetriNet(aut.states, tuple(tnames), pre, post)
    m0 = np.zeros(n, dtype=np.int64)
    for s in aut.initial:
        m0[sidx[s]] = 1
    return BuchiPn(net, marking(net, m0), aut, tuple(clause_of), tuple(edge_of),
                   np.array(virtual, dtype=bool))
