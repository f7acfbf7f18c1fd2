"""Mixed-integer linear feasibility models and an exact solver.

The inverse-prediction model encodes descriptor box bounds, integrality,
the two-sided target window on the prediction, and tolerance-relaxed
normalization rows linking raw descriptors to their standardized
counterparts.  The solver is branch-and-bound over a dense phase-1
simplex with Bland's rule; on rational arithmetic it is exact, and any
returned assignment is re-checked constraint by constraint with exact
fractions before being accepted.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .regress import Hyperplane


class MilpError(ValueError):
    pass



@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float
    integer: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise MilpError(f"variable {self.name}: lower {self.lower} > upper {self.upper}")


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[str, float], ...]  # (variable, coefficient)
    sense: str  # "<=", ">=", "="
    rhs: float

    def __post_init__(self):
        if self.sense not in ("<=", ">=", "="):
            raise MilpError(f"bad sense {self.sense!r}")


@dataclass(frozen=True)
class MilpModel:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    # feasibility models carry no objective

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise MilpError("duplicate variable name")
        known = set(names)
        for c in self.constraints:
            for var, _ in c.coeffs:
                if var not in known:
                    raise MilpError(f"constraint {c.name} references unknown variable {var}")
        for v in self.variables:
            if v.integer and not (math.isfinite(v.lower) and math.isfinite(v.upper)):
                raise MilpError(f"integer variable {v.name} must have finite bounds")

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise MilpError(f"no variable {name}")


@dataclass(frozen=True)
class MilpSolution:
    status: str  # "feasible" | "infeasible" | "bound-limit"
    assignment: dict[str, Fraction] = field(default_factory=dict)
    nodes: int = 0

    def as_floats(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.assignment.items()}


def verify_assignment(model: MilpModel, assignment: dict[str, Fraction]) -> list[str]:
    """Names of violated bounds/constraints under exact rational arithmetic."""
    bad: list[str] = []
    for v in model.variables:
        val = assignment[v.name]
        if val < Fraction(v.lower) or val > Fraction(v.upper):
            bad.append(f"bounds:{v.name}")
        if v.integer and val.denominator != 1:
            bad.append(f"integrality:{v.name}")
    for c in model.constraints:
        lhs = sum((Fraction(coef) * assignment[var] for var, coef in c.coeffs), Fraction(0))
        rhs = Fraction(c.rhs)
        ok = lhs <= rhs if c.sense == "<=" else lhs >= rhs if c.sense == ">=" else lhs == rhs
        if not ok:
            bad.append(f"constraint:{c.name}")
    return bad


# ---------------------------------------------------------------------------
# Phase-1 simplex over exact fractions


def _lp_feasible(
    variables: list[tuple[Fraction, Fraction]],
    rows: list[tuple[dict[int, Fraction], str, Fraction]],
) -> list[Fraction] | None:
    """Feasible point of {l <= x <= u, rows} or None.

    Variables are shifted to x' = x - l >= 0; finite upper bounds become
    extra rows; phase-1 simplex (Bland's rule) then decides feasibility.
    """
    n = len(variables)
    lower = [lb for lb, _ in variables]
    work_rows: list[tuple[dict[int, Fraction], str, Fraction]] = []
    for coeffs, sense, rhs in rows:
        shift = sum((c * lower[j] for j, c in coeffs.items()), Fraction(0))
        work_rows.append((dict(coeffs), sense, rhs - shift))
    for j, (lb, ub) in enumerate(variables):
        work_rows.append(({j: Fraction(1)}, "<=", ub - lb))

    # standard form: rhs >= 0, slack for <=, surplus+artificial for >=, artificial for =
    m = len(work_rows)
    ncols = n
    slack_cols: list[int | None] = []
    art_cols: list[int | None] = []
    prepared: list[tuple[dict[int, Fraction], Fraction]] = []
    for coeffs, sense, rhs in work_rows:
        if rhs < 0:
            coeffs = {j: -c for j, c in coeffs.items()}
            rhs = -rhs
            sense = {"<=": ">=", ">=": "<=", "=": "="}[sense]
        row = dict(coeffs)
        slack = art = None
        if sense == "<=":
            slack = ncols
            row[slack] = Fraction(1)
            ncols += 1
        elif sense == ">=":
            slack = ncols
            row[slack] = Fraction(-1)
            ncols += 1
            art = ncols
            row[art] = Fraction(1)
            ncols += 1
        else:
            art = ncols
            row[art] = Fraction(1)
            ncols += 1
        slack_cols.append(slack)
        art_cols.append(art)
        prepared.append((row, rhs))

    zero = Fraction(0)
    tableau = [[zero] * ncols + [rhs] for _, rhs in prepared]
    for i, (row, _) in enumerate(prepared):
        for j, c in row.items():
            tableau[i][j] = c
    basis: list[int] = []
    artificials: set[int] = set()
    for i in range(m):
        if art_cols[i] is not None:
            basis.append(art_cols[i])
            artificials.add(art_cols[i])
        else:
            basis.append(slack_cols[i])

    # phase-1 objective row: z_j = sum of artificial-basis rows minus cost
    z = [zero] * (ncols + 1)
    for i in range(m):
        if basis[i] in artificials:
            for j in range(ncols + 1):
                z[j] += tableau[i][j]
    for j in artificials:
        z[j] -= 1

    while True:
        enter = next((j for j in range(ncols) if z[j] > 0), None)
        if enter is None:
            break
        leave = None
        best: Fraction | None = None
        for i in range(m):
            a = tableau[i][enter]
            if a > 0:
                ratio = tableau[i][ncols] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            raise MilpError("phase-1 unbounded; inconsistent model")
        piv = tableau[leave][enter]
        tableau[leave] = [c / piv for c in tableau[leave]]
        for i in range(m):
            if i != leave and tableau[i][enter] != 0:
                f = tableau[i][enter]
                tableau[i] = [c - f * p for c, p in zip(tableau[i], tableau[leave])]
        if z[enter] != 0:
            f = z[enter]
            z = [c - f * p for c, p in zip(z, tableau[leave])]
        basis[leave] = enter

    if z[ncols] > 0:
        return None
    values = [zero] * ncols
    for i in range(m):
        values[basis[i]] = tableau[i][ncols]
    return [values[j] + lower[j] for j in range(n)]


# ---------------------------------------------------------------------------
# Branch and bound


def solve(
    model: MilpModel,
    max_nodes: int = 200_000,
    max_seconds: float = 120.0,
) -> MilpSolution:
    """First feasible integer point by depth-first branch and bound.

    Bounding solves the LP relaxation exactly on rationals; branching
    splits the most fractional integer variable.  There is no objective,
    so search stops at the first verified feasible assignment.
    """
    for v in model.variables:
        if not (math.isfinite(v.lower) and math.isfinite(v.upper)):
            raise MilpError(f"solve requires finite bounds; {v.name} is unbounded")
    names = [v.name for v in model.variables]
    index = {n: j for j, n in enumerate(names)}
    int_idx = [j for j, v in enumerate(model.variables) if v.integer]
    base_bounds = [(Fraction(v.lower), Fraction(v.upper)) for v in model.variables]
    rows = [
        (
            {index[var]: Fraction(coef) for var, coef in c.coeffs},
            c.sense,
            Fraction(c.rhs),
        )
        for c in model.constraints
    ]

    deadline = time.monotonic() + max_seconds
    stack: list[dict[int, tuple[Fraction, Fraction]]] = [{}]
    nodes = 0
    while stack:
        if nodes >= max_nodes or time.monotonic() > deadline:
            return MilpSolution(status="bound-limit", nodes=nodes)
        overrides = stack.pop()
        bounds = list(base_bounds)
        feasible_box = True
        for j, bd in overrides.items():
            if bd[0] > bd[1]:
                feasible_box = False
                break
            bounds[j] = bd
        if not feasible_box:
            continue
        nodes += 1
        point = _lp_feasible(bounds, rows)
        if point is None:
            continue
        frac_j = None
        frac_dist = Fraction(0)
        for j in int_idx:
            v = point[j]
            if v.denominator != 1:
                dist = abs(v - Fraction(round(v)))
                if dist > frac_dist:
                    frac_dist = dist
                    frac_j = j
        if frac_j is None:
            assignment = {names[j]: point[j] for j in range(len(names))}
            violated = verify_assignment(model, assignment)
            if violated:  # pragma: no cover - exact arithmetic should not land here
                raise MilpError(f"solver produced invalid point: {violated}")
            return MilpSolution(status="feasible", assignment=assignment, nodes=nodes)
        v = point[frac_j]
        floor_v = Fraction(math.floor(v))
        lo, hi = bounds[frac_j]
        right = dict(overrides)
        right[frac_j] = (floor_v + 1, hi)
        left = dict(overrides)
        left[frac_j] = (lo, floor_v)
        stack.append(right)
        stack.append(left)
    return MilpSolution(status="infeasible", nodes=nodes)


# ---------------------------------------------------------------------------
# Inverse-prediction model


@dataclass(frozen=True)
class InverseProblemSpec:
    """Data for the inverse problem: find raw descriptor values whose
    standardized image is predicted inside [y_lo, y_hi].

    The window is in standardized property units, matching the space the
    hyperplane was trained in; descriptor bounds are in raw units.
    """

    hyperplane: Hyperplane
    y_lo: float
    y_hi: float
    lower: np.ndarray
    upper: np.ndarray
    feat_min: np.ndarray
    feat_max: np.ndarray
    integer_indices: frozenset[int]
    nonnegative_indices: frozenset[int]
    epsilon: float = 1e-5

    def __post_init__(self):
        k = len(self.hyperplane.w)
        if not (len(self.lower) == len(self.upper) == len(self.feat_min) == len(self.feat_max) == k):
            raise MilpError("descriptor array lengths disagree")
        if self.epsilon <= 0:
            raise MilpError("epsilon must be positive")
        if not self.y_lo < self.y_hi:
            raise MilpError("target window is degenerate")
        if np.any(self.lower > self.upper):
            raise MilpError("descriptor lower bound above upper bound")

    @property
    def k(self) -> int:
        return len(self.hyperplane.w)

    def constant_mask(self) -> np.ndarray:
        return self.feat_max <= self.feat_min


def build_inverse_milp(spec: InverseProblemSpec) -> MilpModel:
    """Raw integer/real descriptor variables, standardized companions,
    tolerance-relaxed normalization rows and the target window rows."""
    variables: list[Variable] = []
    constraints: list[Constraint] = []
    eps = spec.epsilon
    const = spec.constant_mask()
    for j in range(spec.k):
        lo = float(spec.lower[j])
        hi = float(spec.upper[j])
        if j in spec.nonnegative_indices:
            lo = max(lo, 0.0)
        variables.append(Variable(f"x_{j + 1}", lo, hi, integer=j in spec.integer_indices))
        if const[j]:
            variables.append(Variable(f"xh_{j + 1}", 0.0, 0.0))
            continue
        span = float(spec.feat_max[j] - spec.feat_min[j])
        corners = [
            factor * (bound - float(spec.feat_min[j])) / span
            for factor in (1 - eps, 1 + eps)
            for bound in (lo, hi)
        ]
        variables.append(Variable(f"xh_{j + 1}", min(corners), max(corners)))
        mn = float(spec.feat_min[j])
        constraints.append(
            Constraint(
                name=f"norm_lo_{j + 1}",
                coeffs=((f"x_{j + 1}", 1 - eps), (f"xh_{j + 1}", -span)),
                sense="<=",
                rhs=(1 - eps) * mn,
            )
        )
        constraints.append(
            Constraint(
                name=f"norm_hi_{j + 1}",
                coeffs=((f"xh_{j + 1}", span), (f"x_{j + 1}", -(1 + eps))),
                sense="<=",
                rhs=-(1 + eps) * mn,
            )
        )
    w = spec.hyperplane.w
    terms = tuple((f"xh_{j + 1}", float(w[j])) for j in range(spec.k) if w[j] != 0.0)
    constraints.append(Constraint("window_lo", terms, ">=", spec.y_lo - spec.hyperplane.b))
    constraints.append(Constraint("window_hi", terms, "<=", spec.y_hi - spec.hyperplane.b))
    return MilpModel(tuple(variables), tuple(constraints))


def exact_standardized(spec: InverseProblemSpec, assignment: dict[str, Fraction]) -> list[Fraction]:
    """Standardize the raw solution exactly (constant descriptors map to 0)."""
    out: list[Fraction] = []
    const = spec.constant_mask()
    for j in range(spec.k):
        if const[j]:
            out.append(Fraction(0))
            continue
        span = Fraction(float(spec.feat_max[j])) - Fraction(float(spec.feat_min[j]))
        out.append((assignment[f"x_{j + 1}"] - Fraction(float(spec.feat_min[j]))) / span)
    return out


def predicted_value(spec: InverseProblemSpec, assignment: dict[str, Fraction]) -> float:
    """Prediction at the exactly re-standardized solution."""
    xh = exact_standardized(spec, assignment)
    total = Fraction(0)
    for j in range(spec.k):
        total += Fraction(float(spec.hyperplane.w[j])) * xh[j]
    return float(total) + spec.hyperplane.b


# ---------------------------------------------------------------------------
# CPLEX-LP text format


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def emit_lp(model: MilpModel) -> str:
    """CPLEX LP text; `parse_lp` reads it back to an equal model."""
    out = ["\\ polyinfer model", "Minimize", " obj:", "Subject To"]
    for c in model.constraints:
        terms = []
        for var, coef in c.coeffs:
            sign = "-" if coef < 0 else "+"
            terms.append(f"{sign} {_fmt(abs(coef))} {var}")
        body = " ".join(terms) if terms else "+ 0 " + model.variables[0].name
        out.append(f" {c.name}: {body} {c.sense} {_fmt(c.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        out.append(f" {_fmt(v.lower)} <= {v.name} <= {_fmt(v.upper)}")
    generals = [v.name for v in model.variables if v.integer]
    if generals:
        out.append("Generals")
        for name in generals:
            out.append(f" {name}")
    out.append("End")
    return "\n".join(out) + "\n"


_TOKEN = re.compile(
    r"\s*(<=|>=|=|\+|-|:|[A-Za-z_][A-Za-z0-9_()]*|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
)


def _tokenize(line: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            raise MilpError(f"cannot tokenize LP text at: {line[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def _merge_signs(tokens: list[str]) -> list[str]:
    """Fold a sign token into a following numeric token."""
    out: list[str] = []
    i = 0
    while i < len(tokens):
        if tokens[i] in ("+", "-") and i + 1 < len(tokens) and _NUM.match(tokens[i + 1]):
            out.append(tokens[i] + tokens[i + 1])
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


_SECTIONS = {
    "minimize": "objective",
    "maximize": "objective",
    "subject": "constraints",
    "st": "constraints",
    "bounds": "bounds",
    "generals": "generals",
    "general": "generals",
    "gen": "generals",
    "end": "end",
}

_NUM = re.compile(r"^(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)$")


def parse_lp(text: str) -> MilpModel:
    """Parse the LP grammar produced by emit_lp (plus unbounded defaults)."""
    section = None
    constraints: list[Constraint] = []
    bounds: dict[str, tuple[float, float]] = {}
    integers: set[str] = set()
    seen_vars: list[str] = []  # first-use order, for vars without a bounds line
    bounds_order: list[str] = []  # authoritative variable order

    def note_var(name: str) -> None:
        if name not in bounds:
            bounds[name] = (0.0, math.inf)
            seen_vars.append(name)

    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0].lower()
        if head in _SECTIONS and (head != "st" or line.lower() in ("st", "st.")):
            section = _SECTIONS[head]
            continue
        if section == "objective":
            continue  # feasibility models carry an empty objective
        if section == "constraints":
            tokens = _tokenize(line)
            if ":" not in tokens:
                raise MilpError(f"constraint without name: {line!r}")
            name = tokens[0]
            rest = tokens[tokens.index(":") + 1 :]
            coeffs: list[tuple[str, float]] = []
            sense = None
            rhs: float | None = None
            sign = 1.0
            pending: float | None = None
            i = 0
            while i < len(rest):
                tok = rest[i]
                if tok in ("<=", ">=", "="):
                    sense = tok
                    i += 1
                    continue
                if sense is not None:
                    rhs_sign = 1.0
                    if tok in ("+", "-"):
                        rhs_sign = -1.0 if tok == "-" else 1.0
                        i += 1
                        tok = rest[i]
                    rhs = rhs_sign * float(tok)
                    i += 1
                    continue
                if tok == "+":
                    sign = 1.0
                elif tok == "-":
                    sign = -1.0
                elif _NUM.match(tok):
                    pending = float(tok)
                else:
                    coef = sign * (1.0 if pending is None else pending)
                    if coef != 0.0:
                        coeffs.append((tok, coef))
                    note_var(tok)
                    sign, pending = 1.0, None
                i += 1
            if sense is None or rhs is None:
                raise MilpError(f"constraint without sense or rhs: {line!r}")
            constraints.append(Constraint(name, tuple(coeffs), sense, rhs))
        elif section == "bounds":
            tokens = _merge_signs(_tokenize(line))
            if len(tokens) == 5 and tokens[1] == "<=" and tokens[3] == "<=":
                name = tokens[2]
                bounds[name] = (float(tokens[0]), float(tokens[4]))
                bounds_order.append(name)
            elif len(tokens) == 2 and tokens[1].lower() == "free":
                bounds[tokens[0]] = (-math.inf, math.inf)
                bounds_order.append(tokens[0])
            else:
                raise MilpError(f"cannot parse bounds line: {line!r}")
        elif section == "generals":
            for tok in line.split():
                integers.add(tok)
                note_var(tok)
        elif section == "end":
            break
        else:
            raise MilpError(f"content outside any section: {line!r}")

    ordered = bounds_order + [n for n in seen_vars if n not in bounds_order]
    variables = tuple(
        Variable(name, bounds[name][0], bounds[name][1], integer=name in integers)
        for name in ordered
    )
    return MilpModel(variables, tuple(constraints))
