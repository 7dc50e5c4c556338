"""Global planning loop, plan realization, and plan verification.

Semantics
---------

Time is discrete.  At every tick each robot either stays put or moves to an
adjacent cell; targets must be distinct and empty *before* the tick (this
forbids swaps and follow-into-vacated-cell trains).  After every tick the
team observation (union of labels of occupied cells) is emitted as a letter,
and the automaton consumes it.  Because robots may always insert idle ticks,
a letter may be consumed by any chain of one or more automaton edges, all
enabled under that letter ("closure" consumption).  A plan is accepted when
the automaton can reach a final state at the end of the prefix and then
either (a) the team stands still forever while the final state lies on a
guard-compatible cycle over the standing observation, or (b) the team
repeats a movement cycle that returns every robot to its cell while the
automaton loops through the final state.

Planning route
--------------

For each automaton initial/final state pair the planner solves a
fixed-horizon reachability program over the composed net with a doubling
horizon, refines the resulting region-marking sequence to cell level with
the projection program, extracts per-robot trajectories, and verifies the
result under the semantics above.  Suffixes are found by a standing-still
check, a loop-back reachability program, or a joint lasso program.  If the
optimization route fails on every horizon, an explicit product search over
(robot configuration, automaton state) is used as a fallback before the
instance is declared infeasible.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, replace

import numpy as np

from .buchi import BuchiAutomaton, build_buchi_pn, to_dnf
from .compose import ComposedPn, compose
from .environment import Environment, Rmpn, build_rmpn
from .errors import InternalInconsistency
from .milp import (MilpSolution, build_projection_milp, build_reachability_milp,
                   decode_projection, decode_reachability, solve)
from .quotient import Quotient, build_quotient

# ---------------------------------------------------------------------------
# automaton letter consumption


def _enabled_edges(aut: BuchiAutomaton, letter):
    out = []
    for src, dst, guard in aut.edges:
        if any(c.satisfied_by(letter) for c in to_dnf(guard)):
            out.append((src, dst))
    return out


def step_states(aut: BuchiAutomaton, states, letter) -> frozenset:
    """States reachable by exactly one edge enabled under ``letter``."""
    edges = _enabled_edges(aut, letter)
    return frozenset(d for s, d in edges if s in states)


def closure_states(aut: BuchiAutomaton, states, letter) -> frozenset:
    """States reachable by one or more edges, all enabled under ``letter``."""
    seen = set()
    frontier = set(states)
    while frontier:
        nxt = step_states(aut, frontier, letter) - seen
        seen |= nxt
        frontier = nxt
    return frozenset(seen)


def consume_word(aut: BuchiAutomaton, states, letters) -> frozenset:
    out = frozenset(states)
    for letter in letters:
        out = closure_states(aut, out, letter)
        if not out:
            break
    return out


# ---------------------------------------------------------------------------
# results


@dataclass
class Plan:
    """A lasso plan: prefix trajectory plus a stationary or cyclic suffix."""

    method: str  # 'milp' or 'search'
    initial_state: str
    final_state: str
    prefix: list  # per-tick robot positions (tuples of cell names); [0] = start
    suffix: list  # per-tick positions of one suffix period; [] = stand still
    word_prefix: list  # observation letter (frozenset) per prefix tick
    word_suffix: list
    cost: int  # total robot moves in prefix plus one suffix period
    k: int | None  # reachability horizon parameter that produced the plan
    suffix_kind: str  # 'stationary' or 'cycle'
    stats: dict


@dataclass
class InfeasibleReport:
    reason: str
    k_tried: tuple
    k_cap: int
    details: tuple


@dataclass
class Verdict:
    ok: bool
    reasons: tuple
    cost: int


# ---------------------------------------------------------------------------
# verification (independent of how the plan was produced)


def _tick_ok(env: Environment, before, after, reasons, where):
    adj = {frozenset(e) for e in env.adjacency}
    occupied_before = set(before)
    if len(set(after)) != len(after):
        reasons.append(f"{where}: two robots share a cell")
        return False
    ok = True
    for r, (a, b) in enumerate(zip(before, after)):
        if a == b:
            continue
        if frozenset((a, b)) not in adj:
            reasons.append(f"{where}: robot {r + 1} jumps {a} -> {b}")
            ok = False
        if b in occupied_before:
            reasons.append(f"{where}: robot {r + 1} enters occupied cell {b}")
            ok = False
    return ok


def _observation(env: Environment, positions) -> frozenset:
    out = set()
    for cell in positions:
        out |= env.labels[cell]
    return frozenset(out)


def verify_plan(env: Environment, aut: BuchiAutomaton, plan: Plan) -> Verdict:
    """Replay a plan against the semantics described in the module docstring."""
    reasons = []
    if not plan.prefix or tuple(plan.prefix[0]) != tuple(env.robot_cells):
        reasons.append("prefix does not start at the robot start cells")
        return Verdict(False, tuple(reasons), 0)
    cost = 0
    path = [tuple(p) for p in plan.prefix]
    for t in range(1, len(path)):
        _tick_ok(env, path[t - 1], path[t], reasons, f"prefix tick {t}")
        cost += sum(a != b for a, b in zip(path[t - 1], path[t]))
    letters = [_observation(env, p) for p in path[1:]]
    states = consume_word(aut, aut.initial, letters)
    end = path[-1]
    o_fin = _observation(env, end)
    suffix = [tuple(p) for p in plan.suffix]
    if not suffix:
        good = [s for s in states
                if s in aut.final and s in closure_states(aut, {s}, o_fin)]
        if not good:
            reasons.append("no reachable final state admits a standing-still cycle "
                           f"under observation {sorted(o_fin)}")
    else:
        cycle = [end] + suffix
        for t in range(1, len(cycle)):
            _tick_ok(env, cycle[t - 1], cycle[t], reasons, f"suffix tick {t}")
            cost += sum(a != b for a, b in zip(cycle[t - 1], cycle[t]))
        if suffix[-1] != end:
            reasons.append("suffix does not return robots to the prefix end cells")
        suffix_letters = [_observation(env, p) for p in suffix]
        good = [s for s in states
                if s in aut.final and s in consume_word(aut, {s}, suffix_letters)]
        if not good:
            reasons.append("no reachable final state closes an automaton cycle "
                           "over the suffix observations")
    return Verdict(not reasons, tuple(reasons), cost)


# ---------------------------------------------------------------------------
# trajectory extraction from a projection solution


def _chain_moves(net, firing):
    """Fired unit moves as a src->dst map; rejects non-path-decomposable firings."""
    out = {}
    for t in np.nonzero(firing)[0]:
        src = int(np.nonzero(net.pre[:, int(t)])[0][0])
        dst = int(np.nonzero(net.post[:, int(t)])[0][0])
        if src in out:
            raise InternalInconsistency("two moves leave one cell in a sub-step")
        out[src] = dst
    return out


def _expand_substep(net, positions, firing, simultaneous):
    """Per-tick position lists realizing one projection sub-step."""
    moves = _chain_moves(net, firing)
    ticks = []
    if simultaneous:
        nxt = [moves.get(p, p) for p in positions]
        if nxt != list(positions):
            ticks.append(nxt)
        return ticks, nxt
    current = list(positions)
    for r, start in enumerate(positions):
        p = start
        while p in moves:
            p = moves.pop(p)
            step = list(current)
            step[r] = p
            ticks.append(step)
            current = step
    # fired transitions not reachable from any robot form token-free cycles
    # with no physical effect; they are simply dropped
    return ticks, current


def _extract_ticks(pm, firings, start_positions):
    """Tick-level robot positions (cell indices) realizing a projection run."""
    net = pm.rmpn.net
    positions = list(start_positions)
    ticks = []
    for idx, firing in enumerate(firings):
        j = idx % pm.substeps_per_block + 1
        sub_ticks, positions = _expand_substep(net, positions, firing,
                                               simultaneous=(j == pm.substeps_per_block))
        ticks.extend(sub_ticks)
    return ticks, positions


# ---------------------------------------------------------------------------
# optimization route


def _k_schedule(k_init, k_cap):
    """Doubling horizons covering both the requested start and the cap."""
    lo = max(1, min(k_init, k_cap))
    hi = max(1, k_init, k_cap)
    ks = []
    k = lo
    while k < hi:
        ks.append(k)
        k *= 2
    ks.append(hi)
    if k_cap not in ks:
        ks = sorted(set(ks) | {k_cap})
    return ks


def _region_sequence(composed, m0, step_pairs, lo, hi):
    """Distinct quotient markings hit by motion steps in [lo, hi)."""
    nq = composed.region_slice.stop
    seq = [np.asarray(m0[:nq], dtype=np.int64)]
    for i in range(lo, hi):
        firing, mark = step_pairs[i]
        if i % 2 == 0 and firing[composed.motion_slice].sum() > 0:
            seq.append(np.asarray(mark[:nq], dtype=np.int64))
    return seq


def _start_positions(env: Environment, rmpn: Rmpn):
    idx = rmpn.net.place_index
    return [idx[c] for c in env.robot_cells]


def _project_and_extract(ses, markings, start_positions, m0_cells, loop=False):
    pm = build_projection_milp(ses.rmpn, ses.quotient, m0_cells, markings,
                               loop=loop)
    sol = ses.solve(pm.model)
    if sol.status != "optimal":
        return None
    firings, _ = decode_projection(pm, sol.x)
    return _extract_ticks(pm, firings, start_positions)


def _cells_marking(net, positions):
    m = np.zeros(len(net.places), dtype=np.int64)
    for p in positions:
        m[p] += 1
    return m


class _Session:
    """Shared, derived state for one planning invocation."""

    def __init__(self, env, aut, k_init, node_limit, node_budget, strict):
        self.env = env
        self.aut = aut
        self.rmpn = build_rmpn(env)
        self.quotient = build_quotient(self.rmpn)
        self.node_limit = node_limit
        self.node_budget = node_budget
        self.strict = strict
        k_cap = max(1, (len(self.quotient.net.places) - 1) * (len(aut.states) - 1))
        self.k_cap = k_cap
        self.schedule = _k_schedule(k_init, k_cap)
        self.details = []
        self.stats = {"milp_solves": 0, "nodes": 0, "time": 0.0}

    def solve(self, model):
        # the budget makes the optimization route give up deterministically on
        # adversarial instances; the search fallback then decides feasibility
        remaining = self.node_budget - self.stats["nodes"]
        if remaining <= 0:
            return MilpSolution("node-limit", None, None, 0)
        t0 = time.perf_counter()
        sol = solve(model, min(self.node_limit, remaining))
        self.stats["milp_solves"] += 1
        self.stats["nodes"] += sol.nodes
        self.stats["time"] += time.perf_counter() - t0
        return sol


def _finish_plan(ses, s0, sf, k, prefix_ticks, end_positions, suffix_ticks,
                 suffix_kind):
    env, rmpn = ses.env, ses.rmpn
    names = rmpn.net.places
    start = _start_positions(env, rmpn)
    prefix = [tuple(names[p] for p in start)]
    prefix += [tuple(names[p] for p in t) for t in prefix_ticks]
    suffix = [tuple(names[p] for p in t) for t in suffix_ticks]
    word_p = [_observation(env, p) for p in prefix[1:]]
    word_s = [_observation(env, p) for p in suffix]
    cost = 0
    for a, b in zip(prefix, prefix[1:]):
        cost += sum(x != y for x, y in zip(a, b))
    if suffix:
        chain = [prefix[-1]] + suffix
        for a, b in zip(chain, chain[1:]):
            cost += sum(x != y for x, y in zip(a, b))
    plan_obj = Plan("milp", s0, sf, prefix, suffix, word_p, word_s, cost, k,
                    suffix_kind, dict(ses.stats))
    verdict = verify_plan(env, ses.aut, plan_obj)
    if not verdict.ok:
        ses.details.append(f"plan for ({s0}, {sf}, k={k}) failed verification: "
                           + "; ".join(verdict.reasons))
        return None
    return plan_obj


def _realize(ses, composed, s0, sf, k, step_pairs):
    """Turn a reachability solution into a verified plan, or None."""
    env, rmpn = ses.env, ses.rmpn
    aut = ses.aut
    start = _start_positions(env, rmpn)
    m0_cells = rmpn.m0

    markings = _region_sequence(composed, composed.m0, step_pairs, 0, 2 * k)
    got = _project_and_extract(ses, markings, start, m0_cells)
    if got is None:
        ses.details.append(f"({s0}, {sf}, k={k}): prefix projection infeasible")
        return None
    prefix_ticks, end_positions = got
    o_fin = _observation(env, tuple(rmpn.net.places[p] for p in end_positions))
    if sf in closure_states(aut, {sf}, o_fin):
        return _finish_plan(ses, s0, sf, k, prefix_ticks, end_positions, [],
                            "stationary")

    # suffix as a loop-back run from the prefix end marking; only the first
    # couple of horizons are tried before handing over to the joint lasso
    m_mid = step_pairs[2 * k - 1][1]
    end_cells = _cells_marking(rmpn.net, end_positions)
    for ks in ses.schedule[:2]:
        rm = build_reachability_milp(composed, m_mid, ks, loop=True,
                                     strict=ses.strict)
        sol = ses.solve(rm.model)
        if sol.status != "optimal":
            continue
        spairs = decode_reachability(rm, sol.x)
        smarks = _region_sequence(composed, m_mid, spairs, 0, 2 * ks)
        if len(smarks) == 1:
            return _finish_plan(ses, s0, sf, k, prefix_ticks, end_positions,
                                [], "stationary")
        got = _project_and_extract(ses, smarks, end_positions, end_cells,
                                   loop=True)
        if got is None:
            continue
        suffix_ticks, _ = got
        plan_obj = _finish_plan(ses, s0, sf, k, prefix_ticks, end_positions,
                                suffix_ticks, "cycle")
        if plan_obj is not None:
            return plan_obj

    # joint lasso: optimize prefix and suffix together at the first horizon;
    # the explicit search fallback keeps the planner complete beyond it
    for k2 in ses.schedule[:1]:
        rm = build_reachability_milp(composed, composed.m0, k2, final_place=sf,
                                     lasso=True, strict=ses.strict)
        sol = ses.solve(rm.model)
        if sol.status != "optimal":
            continue
        pairs = decode_reachability(rm, sol.x)
        pmarks = _region_sequence(composed, composed.m0, pairs, 0, 2 * k2)
        got = _project_and_extract(ses, pmarks, start, m0_cells)
        if got is None:
            continue
        p_ticks, p_end = got
        mid = pairs[2 * k2 - 1][1]
        smarks = _region_sequence(composed, mid, pairs, 2 * k2, 4 * k2)
        end_cells2 = _cells_marking(rmpn.net, p_end)
        if len(smarks) == 1:
            plan_obj = _finish_plan(ses, s0, sf, k2, p_ticks, p_end, [],
                                    "stationary")
        else:
            got = _project_and_extract(ses, smarks, p_end, end_cells2,
                                       loop=True)
            if got is None:
                continue
            s_ticks, _ = got
            plan_obj = _finish_plan(ses, s0, sf, k2, p_ticks, p_end, s_ticks,
                                    "cycle")
        if plan_obj is not None:
            return plan_obj
    ses.details.append(f"({s0}, {sf}, k={k}): no executable suffix found")
    return None


def _plan_pair(ses, composed, s0, sf):
    for k in ses.schedule:
        rm = build_reachability_milp(composed, composed.m0, k, final_place=sf,
                                     strict=ses.strict)
        sol = ses.solve(rm.model)
        if sol.status == "node-limit":
            ses.details.append(f"({s0}, {sf}, k={k}): node limit reached")
            return None
        if sol.status != "optimal":
            continue
        pairs = decode_reachability(rm, sol.x)
        plan_obj = _realize(ses, composed, s0, sf, k, pairs)
        if plan_obj is not None:
            return plan_obj
    return None


# ---------------------------------------------------------------------------
# explicit search fallback


def _successor_configs(env, adj_map, positions):
    """All one-tick team moves: per-robot stay-or-step, targets fresh cells."""
    occupied = set(positions)
    options = []
    for p in positions:
        opts = [p] + [q for q in adj_map[p] if q not in occupied]
        options.append(opts)
    out = []
    for combo in itertools.product(*options):
        if len(set(combo)) == len(combo):
            out.append(tuple(combo))
    return out


def _scc_ids(graph, nodes):
    """Iterative Tarjan; maps every node to its strongly connected component."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comp = {}
    counter = itertools.count()
    comp_counter = itertools.count()
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(graph[root]))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = next(counter)
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(graph[succ])))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                pred = work[-1][0]
                low[pred] = min(low[pred], low[node])
            if low[node] == index[node]:
                cid = next(comp_counter)
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp[member] = cid
                    if member == node:
                        break
    return comp


def _search_plan(env: Environment, aut: BuchiAutomaton, node_cap=200_000):
    """Büchi emptiness over the product of team configurations and states."""
    adj_map = {c: [] for c in env.cells}
    for a, b in env.adjacency:
        adj_map[a].append(b)
        adj_map[b].append(a)
    start = tuple(env.robot_cells)

    def product_edges(node):
        cfg, s = node
        out = []
        for cfg2 in _successor_configs(env, adj_map, cfg):
            letter = _observation(env, cfg2)
            for s2 in step_states(aut, {s}, letter):
                out.append((cfg2, s2))
        return out

    # materialize the reachable product graph once
    roots = [(start, s0) for s0 in aut.initial]
    parent = {r: None for r in roots}
    order = list(roots)
    graph = {}
    frontier = list(roots)
    while frontier:
        if len(parent) > node_cap:
            return None
        nxt = []
        for node in frontier:
            succs = product_edges(node)
            graph[node] = succs
            for succ in succs:
                if succ not in parent:
                    parent[succ] = node
                    order.append(succ)
                    nxt.append(succ)
        frontier = nxt

    comp = _scc_ids(graph, order)
    comp_size = {}
    for cid in comp.values():
        comp_size[cid] = comp_size.get(cid, 0) + 1

    def path_to(node):
        out = []
        while node is not None:
            out.append(node)
            node = parent[node]
        return out[::-1]

    for node in order:
        cfg, s = node
        if s not in aut.final:
            continue
        # accepting node must lie on some cycle: either a self-loop or a
        # nontrivial strongly connected component
        cid = comp[node]
        if comp_size[cid] == 1 and node not in graph[node]:
            continue
        # shortest cycle through the accepting node, within its component
        cparent = {}
        frontier = [node]
        found = None
        while frontier and found is None:
            nxt = []
            for cur in frontier:
                for succ in graph[cur]:
                    if succ == node:
                        found = cur
                        break
                    if comp.get(succ) == cid and succ not in cparent:
                        cparent[succ] = cur
                        nxt.append(succ)
                if found is not None:
                    break
            frontier = nxt
        if found is None:
            continue
        cycle = [node]
        cur = found
        while cur != node:
            cycle.append(cur)
            cur = cparent[cur]
        cycle = cycle[::-1]  # nodes after `node`, ending back at it
        prefix_nodes = path_to(node)
        prefix = [c for c, _s in prefix_nodes]
        suffix = [c for c, _s in cycle]
        stationary = all(c == cfg for c in suffix)
        word_p = [_observation(env, p) for p in prefix[1:]]
        word_s = [] if stationary else [_observation(env, p) for p in suffix]
        cost = sum(sum(x != y for x, y in zip(a, b))
                   for a, b in zip(prefix, prefix[1:]))
        if not stationary:
            chain = [prefix[-1]] + suffix
            cost += sum(sum(x != y for x, y in zip(a, b))
                        for a, b in zip(chain, chain[1:]))
        s0 = prefix_nodes[0][1]
        return Plan("search", s0, s, prefix, [] if stationary else suffix,
                    word_p, word_s, cost, None,
                    "stationary" if stationary else "cycle", {})
    return None


# ---------------------------------------------------------------------------
# entry point


def plan(env: Environment, aut: BuchiAutomaton, *, k_init: int = 4,
         node_limit: int = 5_000, node_budget: int = 25_000,
         explore_all_finals: bool = False, strict: bool = True,
         search_fallback: bool = True):
    """Plan team trajectories whose observation word the automaton accepts.

    Returns a :class:`Plan` on success and an :class:`InfeasibleReport`
    otherwise.  With ``explore_all_finals`` every initial/final state pair
    is planned and the cheapest verified plan wins; otherwise the first
    verified plan is returned.  ``node_limit`` bounds branch-and-bound nodes
    per optimization, ``node_budget`` bounds them per planning call.
    """
    ses = _Session(env, aut, k_init, node_limit, node_budget, strict)
    candidates = []
    for s0 in ses.aut.initial:
        bpn = build_buchi_pn(replace(ses.aut, initial=(s0,)))
        composed = compose(ses.quotient, bpn, ses.rmpn.robot_count)
        for sf in ses.aut.final:
            got = _plan_pair(ses, composed, s0, sf)
            if got is not None:
                if not explore_all_finals:
                    return got
                candidates.append(got)
    if candidates:
        return min(candidates, key=lambda p: p.cost)
    if search_fallback:
        got = _search_plan(env, aut)
        if got is not None:
            got.stats.update(ses.stats)
            return got
    return InfeasibleReport(
        "no accepting plan exists within the completeness horizon",
        tuple(ses.schedule), ses.k_cap, tuple(ses.details))
