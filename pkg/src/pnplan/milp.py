"""Integer linear programs for planning over the composed net.

Two model builders are provided:

* :func:`build_reachability_milp` — fixed-horizon reachability over the
  composed net, alternating motion steps (odd) and automaton steps (even),
  minimizing time-weighted firing counts.
* :func:`build_projection_milp` — refinement of a region-marking sequence to
  collision-free cell-level movements, minimizing total moves.

Models are solved by :func:`solve`, a deterministic depth-first
branch-and-bound over LP relaxations (scipy/HiGHS).  All model data is
integer; incumbent objectives are therefore evaluated exactly in rational
arithmetic, independent of LP floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .compose import ComposedPn
from .environment import Rmpn
from .errors import ContractViolation, ParseError
from .quotient import Quotient

_FRAC_TOL = 1e-6


class MilpModel:
    """A pure-integer minimization program with integer data."""

    def __init__(self):
        self.names: list[str] = []
        self.lb: list[int] = []
        self.ub: list[int] = []
        self.obj: list[int] = []
        self._rows: list[tuple[dict, str, int]] = []  # (coeffs, '<=' or '==', rhs)
        self._cache = None

    def add_var(self, name: str, lb: int, ub: int, obj: int = 0) -> int:
        if ub < lb:
            raise ContractViolation(f"variable {name} has empty domain [{lb}, {ub}]")
        self.names.append(name)
        self.lb.append(int(lb))
        self.ub.append(int(ub))
        self.obj.append(int(obj))
        self._cache = None
        return len(self.names) - 1

    def add_constraint(self, coeffs: dict, sense: str, rhs: int, label: str = ""):
        if sense not in ("<=", "=="):
            raise ContractViolation(f"bad constraint sense {sense!r}")
        self._rows.append(({int(k): int(v) for k, v in coeffs.items() if v},
                           sense, int(rhs)))
        self._cache = None

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_constraints(self) -> int:
        return len(self._rows)

    def matrices(self):
        """Dense (c, A_ub, b_ub, A_eq, b_eq) integer matrices, cached."""
        if self._cache is None:
            n = self.num_vars
            ub_rows = [(r, s) for r, sense, s in self._rows if sense == "<="]
            eq_rows = [(r, s) for r, sense, s in self._rows if sense == "=="]

            def build(rows):
                a = np.zeros((len(rows), n), dtype=np.int64)
                b = np.zeros(len(rows), dtype=np.int64)
                for i, (coeffs, rhs) in enumerate(rows):
                    for j, v in coeffs.items():
                        a[i, j] = v
                    b[i] = rhs
                return a, b

            a_ub, b_ub = build(ub_rows)
            a_eq, b_eq = build(eq_rows)
            self._cache = (np.array(self.obj, dtype=np.int64), a_ub, b_ub, a_eq, b_eq)
        return self._cache

    def check_point(self, x) -> bool:
        """Exact integer feasibility check of a candidate point."""
        x = np.asarray(x, dtype=np.int64)
        c, a_ub, b_ub, a_eq, b_eq = self.matrices()
        if (x < np.array(self.lb)).any() or (x > np.array(self.ub)).any():
            return False
        if a_eq.size and (a_eq @ x != b_eq).any():
            return False
        if a_ub.size and (a_ub @ x > b_ub).any():
            return False
        return True

    def objective_at(self, x) -> Fraction:
        return Fraction(sum(int(ci) * int(xi) for ci, xi in zip(self.obj, x)))


@dataclass
class MilpSolution:
    status: str  # 'optimal', 'infeasible', 'node-limit'
    objective: Fraction | None
    x: np.ndarray | None
    nodes: int


def _solve_relaxation(model, lo, hi):
    c, a_ub, b_ub, a_eq, b_eq = model.matrices()
    res = linprog(c.astype(float),
                  A_ub=a_ub.astype(float) if a_ub.size else None,
                  b_ub=b_ub.astype(float) if a_ub.size else None,
                  A_eq=a_eq.astype(float) if a_eq.size else None,
                  b_eq=b_eq.astype(float) if a_eq.size else None,
                  bounds=list(zip(lo.tolist(), hi.tolist())),
                  method="highs")
    return res


def solve(model: MilpModel, node_limit: int = 200_000) -> MilpSolution:
    """Deterministic branch-and-bound over LP relaxations.

    Branches on the lowest-index fractional variable, exploring the floor
    branch first.  Integer candidates are snapped and revalidated in exact
    arithmetic, so the reported objective is exactly rational.
    """
    lo0 = np.array(model.lb, dtype=float)
    hi0 = np.array(model.ub, dtype=float)
    best_x = None
    best_obj = None  # Fraction
    nodes = 0
    stack = [(lo0, hi0)]
    while stack:
        if nodes >= node_limit:
            return MilpSolution("node-limit",
                                best_obj if best_x is not None else None,
                                best_x, nodes)
        lo, hi = stack.pop()
        nodes += 1
        res = _solve_relaxation(model, lo, hi)
        if res.status != 0:
            continue
        if best_obj is not None and res.fun >= float(best_obj) - 1 + _FRAC_TOL:
            # objective is integral at integer points: bound can be rounded up
            continue
        x = np.asarray(res.x)
        frac = np.abs(x - np.rint(x))
        fractional = np.nonzero(frac > _FRAC_TOL)[0]
        if fractional.size == 0:
            xi = np.rint(x).astype(np.int64)
            # clamp against the *original* bounds before exact validation
            xi = np.clip(xi, model.lb, model.ub)
            if model.check_point(xi):
                obj = model.objective_at(xi)
                if best_obj is None or obj < best_obj:
                    best_obj, best_x = obj, xi
            continue
        j = int(fractional[0])
        split = float(np.floor(x[j]))
        lo_up = lo.copy()
        lo_up[j] = split + 1
        hi_dn = hi.copy()
        hi_dn[j] = split
        if lo_up[j] <= hi[j]:
            stack.append((lo_up, hi))
        if hi_dn[j] >= lo[j]:
            stack.append((lo, hi_dn))  # floor branch explored first
    if best_x is None:
        return MilpSolution("infeasible", None, None, nodes)
    return MilpSolution("optimal", best_obj, best_x, nodes)


# ---------------------------------------------------------------------------
# reachability model (composed net)


@dataclass
class ReachabilityModel:
    """Reachability MILP plus the index maps needed to decode solutions."""

    model: MilpModel
    composed: ComposedPn
    steps: int
    m_vars: list  # per step i (1-based list index i-1): array of place var indices
    s_vars: list  # per step: array of transition var indices
    m_start: np.ndarray


def _place_bounds(composed):
    ub = np.empty(len(composed.net.places), dtype=np.int64)
    ub[composed.region_slice] = composed.quotient.capacity
    ub[composed.state_slice] = 1
    ub[composed.obs_slice] = composed.robot_count
    ub[composed.cobs_slice] = composed.robot_count
    return ub


def build_reachability_milp(composed: ComposedPn, m0, k: int, *,
                            final_place: str | None = None,
                            loop: bool = False,
                            lasso: bool = False,
                            strict: bool = True) -> ReachabilityModel:
    """Fixed-horizon run model over the composed net.

    Odd steps fire only motion transitions (at most one per robot); even
    steps fire exactly one automaton transition.  Step 2 — and, in lasso
    mode, the first even step of the cycle — must fire a real edge rather
    than a zero-cost virtual self-loop.  Exactly one of ``final_place``
    (reach it at the horizon), ``loop`` (return to ``m0``) or ``lasso``
    (reach it halfway and close a cycle on it) shapes the terminal
    condition.  ``strict`` enforces classical enabledness at every step;
    otherwise only at even (automaton) steps.
    """
    net = composed.net
    nq = composed.region_slice.stop
    flow = net.post - net.pre
    steps = 4 * k if lasso else 2 * k
    if lasso and (loop or final_place is None):
        raise ContractViolation("lasso mode needs a final place and no loop flag")
    if not lasso and loop == (final_place is not None):
        raise ContractViolation("exactly one of final_place/loop must be given")

    model = MilpModel()
    p_ub = _place_bounds(composed)
    virt = composed.buchi.virtual
    t_ub = np.empty(len(net.transitions), dtype=np.int64)
    t_ub[composed.motion_slice] = composed.robot_count
    t_ub[composed.buchi_slice] = 1

    m0 = np.asarray(m0, dtype=np.int64)
    m_vars, s_vars = [], []
    force_edge_steps = {2} | ({2 * k + 2} if lasso else set())
    is_virtual = np.zeros(len(net.transitions), dtype=bool)
    is_virtual[composed.buchi_slice] = virt
    for i in range(1, steps + 1):
        s_idx = np.array([model.add_var(f"s{i}[{t}]", 0, int(t_ub[j]),
                                        obj=0 if is_virtual[j] else i)
                          for j, t in enumerate(net.transitions)])
        m_idx = np.array([model.add_var(f"m{i}[{p}]", 0, int(p_ub[j]))
                          for j, p in enumerate(net.places)])
        m_vars.append(m_idx)
        s_vars.append(s_idx)

    motion_cols = range(composed.motion_slice.start, composed.motion_slice.stop)
    buchi_cols = range(composed.buchi_slice.start, composed.buchi_slice.stop)
    for i in range(1, steps + 1):
        s_idx, m_idx = s_vars[i - 1], m_vars[i - 1]
        prev = None if i == 1 else m_vars[i - 2]
        # state equation: m_i - m_{i-1} - C s_i = 0
        for p in range(len(net.places)):
            coeffs = {int(m_idx[p]): 1}
            if prev is not None:
                coeffs[int(prev[p])] = -1
            for t in range(len(net.transitions)):
                if flow[p, t]:
                    coeffs[int(s_idx[t])] = coeffs.get(int(s_idx[t]), 0) - int(flow[p, t])
            model.add_constraint(coeffs, "==", int(m0[p]) if prev is None else 0)
        # enabledness: m_{i-1} - Pre s_i >= 0
        if strict or i % 2 == 0:
            for p in range(len(net.places)):
                coeffs = {}
                if prev is not None:
                    coeffs[int(prev[p])] = -1
                for t in range(len(net.transitions)):
                    if net.pre[p, t]:
                        coeffs[int(s_idx[t])] = coeffs.get(int(s_idx[t]), 0) + int(net.pre[p, t])
                rhs = int(m0[p]) if prev is None else 0
                model.add_constraint(coeffs, "<=", rhs)
        if i % 2 == 1:
            # motion step: no automaton firings, at most one move per robot
            for t in buchi_cols:
                model.add_constraint({int(s_idx[t]): 1}, "==", 0)
            model.add_constraint({int(s_idx[t]): 1 for t in motion_cols},
                                 "<=", composed.robot_count)
        else:
            for t in motion_cols:
                model.add_constraint({int(s_idx[t]): 1}, "==", 0)
            if i in force_edge_steps:
                model.add_constraint(
                    {int(s_idx[t]): 1 for t in buchi_cols
                     if not virt[t - composed.buchi_slice.start]}, "==", 1)
                for t in buchi_cols:
                    if virt[t - composed.buchi_slice.start]:
                        model.add_constraint({int(s_idx[t]): 1}, "==", 0)
            else:
                model.add_constraint({int(s_idx[t]): 1 for t in buchi_cols}, "==", 1)
            # a zero-cost virtual firing is padding: it may not swallow the
            # observation letter produced by a real move just before it
            prev_s = s_vars[i - 2]
            coeffs = {int(prev_s[t]): 1 for t in motion_cols}
            for t in buchi_cols:
                if virt[t - composed.buchi_slice.start]:
                    coeffs[int(s_idx[t])] = composed.robot_count
            model.add_constraint(coeffs, "<=", composed.robot_count)

    if final_place is not None:
        pf = net.place_index[final_place]
        mid = m_vars[2 * k - 1]
        model.add_constraint({int(mid[pf]): 1}, "==", 1)
    if loop:
        last = m_vars[steps - 1]
        for p in range(len(net.places)):
            model.add_constraint({int(last[p]): 1}, "==", int(m0[p]))
    if lasso:
        mid, last = m_vars[2 * k - 1], m_vars[steps - 1]
        for p in range(len(net.places)):
            model.add_constraint({int(last[p]): 1, int(mid[p]): -1}, "==", 0)
    return ReachabilityModel(model, composed, steps, m_vars, s_vars, m0)


def nqt(composed):
    """Column offset of the automaton transitions inside the composed net."""
    return composed.buchi_slice.start


def decode_reachability(rm: ReachabilityModel, x):
    """Per-step (firing, marking) pairs from a solution vector."""
    x = np.asarray(x, dtype=np.int64)
    out = []
    for i in range(rm.steps):
        out.append((x[rm.s_vars[i]], x[rm.m_vars[i]]))
    return out


# ---------------------------------------------------------------------------
# projection model (cell-level net)


@dataclass
class ProjectionModel:
    model: MilpModel
    rmpn: Rmpn
    quotient: Quotient
    robot_count: int
    markings: list  # region marking per block
    m_vars: list  # per sub-step
    s_vars: list
    substeps_per_block: int


def build_projection_milp(rmpn: Rmpn, quotient: Quotient, m0_cells,
                          region_markings, *, loop: bool = False) -> ProjectionModel:
    """Refine a region-marking sequence to cell-level movements.

    ``region_markings`` is the full sequence including the projection of the
    initial cell marking.  Each region marking gets a block of ``|R| + 1``
    sub-steps: the first ``|R|`` reposition robots strictly inside their
    current regions (multi-hop chains through empty cells are permitted),
    and the last synchronously crosses region boundaries, landing on the
    next block's region marking.  All sub-steps forbid swaps and moves into
    cells that were occupied before the sub-step.  The objective counts
    total moves.
    """
    net = rmpn.net
    nR = rmpn.robot_count
    pr = quotient.projection
    flow = net.post - net.pre
    m0_cells = np.asarray(m0_cells, dtype=np.int64)
    markings = [np.asarray(m, dtype=np.int64) for m in region_markings]
    if not (pr @ m0_cells == markings[0]).all():
        raise ContractViolation("initial cell marking does not project to the first region marking")

    # which motion transitions cross a region boundary
    cell_region = np.argmax(pr, axis=0)
    crossing = np.array([cell_region[np.nonzero(net.pre[:, t])[0][0]]
                         != cell_region[np.nonzero(net.post[:, t])[0][0]]
                         for t in range(len(net.transitions))])

    sub = nR + 1
    model = MilpModel()
    m_vars, s_vars = [], []
    total = len(markings) * sub
    for t_step in range(1, total + 1):
        s_idx = np.array([model.add_var(f"u{t_step}[{t}]", 0, 1, obj=1)
                          for t in net.transitions])
        m_idx = np.array([model.add_var(f"x{t_step}[{p}]", 0, 1)
                          for p in net.places])
        s_vars.append(s_idx)
        m_vars.append(m_idx)

    for t_step in range(1, total + 1):
        block = (t_step - 1) // sub
        j = (t_step - 1) % sub + 1  # sub-step within the block
        s_idx, m_idx = s_vars[t_step - 1], m_vars[t_step - 1]
        prev = None if t_step == 1 else m_vars[t_step - 2]

        def prev_coeff(coeffs, p, c):
            if prev is None:
                return int(m0_cells[p]) * c  # constant: moved to rhs by caller
            coeffs[int(prev[p])] = coeffs.get(int(prev[p]), 0) + c
            return 0

        for p in range(len(net.places)):
            # state equation
            coeffs = {int(m_idx[p]): 1}
            const = prev_coeff(coeffs, p, -1)
            for t in range(len(net.transitions)):
                if flow[p, t]:
                    coeffs[int(s_idx[t])] = coeffs.get(int(s_idx[t]), 0) - int(flow[p, t])
            model.add_constraint(coeffs, "==", -const)
            # collision rule: Post s + m_prev <= 1 (no swaps, no occupied targets)
            coeffs = {}
            const = prev_coeff(coeffs, p, 1)
            for t in range(len(net.transitions)):
                if net.post[p, t]:
                    coeffs[int(s_idx[t])] = coeffs.get(int(s_idx[t]), 0) + int(net.post[p, t])
            model.add_constraint(coeffs, "<=", 1 - const)
        if j <= nR:
            # repositioning: stay inside regions, hold the block's projection
            for t in np.nonzero(crossing)[0]:
                model.add_constraint({int(s_idx[int(t)]): 1}, "==", 0)
            target = markings[block]
        else:
            # synchronous boundary crossing: classical single-hop enabledness
            for p in range(len(net.places)):
                coeffs = {}
                const = prev_coeff(coeffs, p, -1)
                for t in range(len(net.transitions)):
                    if net.pre[p, t]:
                        coeffs[int(s_idx[t])] = coeffs.get(int(s_idx[t]), 0) + int(net.pre[p, t])
                model.add_constraint(coeffs, "<=", -const)
            target = markings[block + 1] if block + 1 < len(markings) else markings[block]
        for q in range(pr.shape[0]):
            coeffs = {int(m_idx[p]): 1 for p in np.nonzero(pr[q])[0]}
            model.add_constraint(coeffs, "==", int(target[q]))
    if loop:
        # suffix refinements must return every robot to its exact start cell
        last = m_vars[-1]
        for p in range(len(net.places)):
            model.add_constraint({int(last[p]): 1}, "==", int(m0_cells[p]))
    return ProjectionModel(model, rmpn, quotient, nR, markings, m_vars, s_vars, sub)


def decode_projection(pm: ProjectionModel, x):
    """Cell-marking sequence (including the start) from a solution vector."""
    x = np.asarray(x, dtype=np.int64)
    markings = [x[m_idx] for m_idx in pm.m_vars]
    firings = [x[s_idx] for s_idx in pm.s_vars]
    return firings, markings


# ---------------------------------------------------------------------------
# LP-format export / solution import


def lp_names(model: MilpModel) -> list:
    """LP-format-safe, unique variable names for a model."""
    import re as _re
    out, seen = [], set()
    for name in model.names:
        safe = _re.sub(r"[^A-Za-z0-9_.]", "_", name)
        if not safe or safe[0].isdigit() or safe[0] == ".":
            safe = "v_" + safe
        base, n = safe, 1
        while safe in seen:
            n += 1
            safe = f"{base}_{n}"
        seen.add(safe)
        out.append(safe)
    return out


def export_lp(model: MilpModel) -> str:
    """Serialize in CPLEX LP format (all variables declared general integer)."""
    names = lp_names(model)

    def term(coef, name, first):
        sign = "-" if coef < 0 else ("" if first else "+")
        mag = abs(coef)
        lead = "" if first and sign == "" else f"{sign} "
        coefs = "" if mag == 1 else f"{mag} "
        return f"{lead}{coefs}{name}"

    def linexpr(coeffs):
        items = sorted(coeffs.items())
        if not items:
            return "0 " + names[0]
        return " ".join(term(v, names[j], i == 0)
                        for i, (j, v) in enumerate(items))

    lines = ["Minimize", " obj: " + linexpr({j: c for j, c in enumerate(model.obj) if c}),
             "Subject To"]
    for i, (coeffs, sense, rhs) in enumerate(model._rows):
        op = "<=" if sense == "<=" else "="
        lines.append(f" c{i + 1}: {linexpr(coeffs)} {op} {rhs}")
    lines.append("Bounds")
    for j, name in enumerate(names):
        lines.append(f" {model.lb[j]} <= {name} <= {model.ub[j]}")
    lines.append("Generals")
    lines.append(" " + " ".join(names))
    lines.append("End")
    return "\n".join(lines) + "\n"


def import_solution(model: MilpModel, text: str) -> np.ndarray:
    """Parse 'name value' lines into a solution vector (absent vars are 0)."""
    index = {name: j for j, name in enumerate(model.names)}
    for j, name in enumerate(lp_names(model)):
        index.setdefault(name, j)
    x = np.zeros(model.num_vars, dtype=np.int64)
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("=", " ").split()
        if len(parts) != 2:
            raise ParseError("expected 'name value' pairs", line=line_no)
        name, val = parts
        if name == "obj":
            continue
        if name not in index:
            raise ParseError(f"unknown variable {name!r}", line=line_no)
        try:
            fval = float(val)
        except ValueError:
            raise ParseError(f"bad value {val!r}", line=line_no) from None
        if abs(fval - round(fval)) > _FRAC_TOL:
            raise ParseError(f"non-integer value for {name}", line=line_no)
        x[index[name]] = int(round(fval))
    return x
