"""Tests for formula handling, automaton parsing, and the automaton net."""

import itertools

import numpy as np
import pytest

from oracle import _formula_holds
from pnplan import (Clause, ParseError, build_buchi_pn, eval_formula,
                    parse_automaton, parse_formula, to_dnf)


def test_formula_parsing_and_precedence():
    f = parse_formula("y1 & y2 | y3")
    assert str(f) == "y1 & y2 | y3"
    assert f.op == "or"
    g = parse_formula("!(y1 | y2) & true")
    assert g.op == "and"
    assert str(parse_formula("y1&(y2|!y3)")) == "y1 & (y2 | !y3)"


def test_formula_parse_errors():
    for bad in ("", "y1 &", "& y1", "y1 y2", "(y1", "y1)", "z9", "!"):
        with pytest.raises(ParseError):
            parse_formula(bad)


def test_clause_satisfaction():
    c = Clause(frozenset({"y1"}), frozenset({"y2"}))
    assert c.satisfied_by(frozenset({"y1"}))
    assert c.satisfied_by(frozenset({"y1", "y3"}))
    assert not c.satisfied_by(frozenset({"y1", "y2"}))
    assert not c.satisfied_by(frozenset())


def test_dnf_drops_contradictions_and_subsumed():
    assert to_dnf(parse_formula("y1 & !y1")) == ()
    dnf = to_dnf(parse_formula("y1 | (y1 & y2)"))
    assert dnf == (Clause(frozenset({"y1"}), frozenset()),)
    assert to_dnf(parse_formula("!true")) == ()


def test_dnf_agrees_with_truth_tables():
    rng = np.random.default_rng(23)
    atoms = ["y1", "y2", "y3"]
    from oracle import _random_formula
    for _ in range(60):
        text = _random_formula(rng, atoms)
        f = parse_formula(text)
        for bits in itertools.product([0, 1], repeat=len(atoms)):
            letter = frozenset(a for a, b in zip(atoms, bits) if b)
            assert eval_formula(f, letter) == _formula_holds(f, letter), text


AUT = """\
states: s1 s2
initial: s1
final: s2
edge: s1 s1 !y1
edge: s1 s2 y1 & y2 | y3
edge: s2 s2 true
"""


def test_automaton_parse():
    aut = parse_automaton(AUT)
    assert aut.states == ("s1", "s2")
    assert aut.initial == ("s1",) and aut.final == ("s2",)
    assert len(aut.edges) == 3
    assert str(aut.guard("s1", "s2")) == "y1 & y2 | y3"
    assert aut.guard("s2", "s1") is None


def test_automaton_parse_errors():
    with pytest.raises(ParseError):
        parse_automaton("initial: s1\nfinal: s1\n")
    with pytest.raises(ParseError, match="unknown"):
        parse_automaton("states: s1\ninitial: s2\nfinal: s1\n")
    with pytest.raises(ParseError, match="final"):
        parse_automaton("states: s1\ninitial: s1\n")
    with pytest.raises(ParseError, match="edge"):
        parse_automaton("states: s1\ninitial: s1\nfinal: s1\nedge: s1 s1\n")


def test_buchi_pn_structure():
    aut = parse_automaton(AUT)
    pn = build_buchi_pn(aut)
    # one transition per DNF clause of each edge, plus one virtual per final
    # s1->s2 has two clauses, so four edge transitions in total
    assert len(pn.net.transitions) == 5
    assert pn.virtual.sum() == 1
    assert pn.m0.tolist() == [1, 0]
    # every transition moves exactly one state token
    assert (pn.net.pre.sum(axis=0) == 1).all()
    assert (pn.net.post.sum(axis=0) == 1).all()
    virt = int(np.nonzero(pn.virtual)[0][0])
    assert pn.clause_of[virt] is None
    assert pn.edge_of[virt] == ("s2", "s2")
