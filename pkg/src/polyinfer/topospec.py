"""Topological specifications: seed graph, counting bounds, and a checker.

A specification describes admissible polymers as expansions of a seed
graph: designated seed edges are replaced by paths, the other seed edges
are kept, pendant interior trees may hang off path vertices, and every
interior vertex carries a fringe tree from a fixed catalog.  Counting
bounds constrain elements, symbols, edge configurations and fringe-tree
usage.  `check_satisfies` measures every bound on a concrete graph and
searches for a structural expansion witness.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

from .chemgraph import ChemicalGraph, is_connected
from .twolayer import (
    RootedTree,
    TwoLayeredDecomposition,
    adjacency_of,
    adjacency_str,
    config_str,
    decompose,
    edge_config,
    leaf_edge_adjacency_configs,
    parse_code,
)


class SpecError(ValueError):
    pass


Bounds = tuple[int, int]


# ---------------------------------------------------------------------------
# Seed graph


@dataclass(frozen=True)
class SeedEdge:
    name: str
    u: str
    v: str
    kind: str  # "path" = replaceable by a path; "exact" = kept as one edge
    link: bool = False

    def __post_init__(self):
        if self.kind not in ("path", "exact"):
            raise SpecError(f"unknown seed edge kind {self.kind!r}")


@dataclass(frozen=True)
class SeedGraph:
    vertices: tuple[str, ...]
    edges: tuple[SeedEdge, ...]

    def __post_init__(self):
        names = [e.name for e in self.edges]
        if len(set(names)) != len(names):
            raise SpecError("duplicate seed edge name")
        if len(set(self.vertices)) != len(self.vertices):
            raise SpecError("duplicate seed vertex")
        known = set(self.vertices)
        for e in self.edges:
            if e.u not in known or e.v not in known:
                raise SpecError(f"seed edge {e.name} references unknown vertex")
            if e.u == e.v:
                raise SpecError(f"seed edge {e.name} is a self-loop")
            if e.link and e.kind != "path":
                raise SpecError(f"link seed edge {e.name} must be replaceable")
        index = {v: i for i, v in enumerate(self.vertices)}
        if not is_connected(range(len(self.vertices)), [(index[e.u], index[e.v]) for e in self.edges]):
            raise SpecError("seed graph is not connected")

    def edge(self, name: str) -> SeedEdge:
        for e in self.edges:
            if e.name == name:
                return e
        raise SpecError(f"no seed edge {name}")

    def degree(self, vertex: str) -> int:
        return sum(1 for e in self.edges if vertex in (e.u, e.v))


# ---------------------------------------------------------------------------
# Specification


@dataclass(frozen=True)
class TopologicalSpec:
    seed: SeedGraph
    rho: int
    elements: tuple[str, ...]  # admissible element alphabet (H included)
    vertex_elements: dict[str, tuple[str, ...]]  # per seed vertex
    fringe_catalog: tuple[str, ...]  # canonical codes, index order matters
    n: Bounds
    n_int: Bounds
    n_lnk: Bounds  # count of vertices with two incident link edges
    path_len: dict[str, Bounds]  # per replaceable seed edge
    branch_count_edge: dict[str, Bounds]  # bl per replaceable edge
    branch_height_edge: dict[str, Bounds]  # ch per replaceable edge
    branch_count_vertex: dict[str, Bounds]
    branch_height_vertex: dict[str, Bounds]
    double_bonds: dict[str, Bounds]  # bd2 per seed edge
    triple_bonds: dict[str, Bounds]  # bd3 per seed edge
    na: dict[str, Bounds]  # element counts, hydrogens included
    na_int: dict[str, Bounds]
    ns_int: dict[str, Bounds]  # per "(element,degree)"
    ns_cnt: dict[str, Bounds]  # connecting-vertex symbols
    ec_int: dict[str, Bounds]  # keys declare the admissible interior configs
    ec_lnk: dict[str, Bounds]
    ac_int: dict[str, Bounds]
    ac_lnk: dict[str, Bounds]
    ac_lf: dict[str, Bounds]
    fc: dict[str, Bounds]  # per catalog code
    # optional restrictions of the catalog: per seed vertex and, for the
    # internal vertices of a replaced edge, per seed edge
    fringe_vertex: dict[str, tuple[str, ...]] = field(default_factory=dict)
    fringe_edge: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for name, (lo, hi) in self._all_bounds():
            if lo > hi:
                raise SpecError(f"bound {name} has lower {lo} > upper {hi}")
        for code in self.fc:
            if code not in self.fringe_catalog:
                raise SpecError(f"fc bound references unknown fringe tree {code!r}")
        for code in self.fringe_catalog:
            tree = parse_code(code)
            if tree.code != code:
                raise SpecError(f"catalog code {code!r} is not canonical")
            if tree.heavy_height() > self.rho:
                raise SpecError(f"catalog tree {code!r} taller than rho")
        seed_vertices = set(self.seed.vertices)
        for v, codes in self.fringe_vertex.items():
            if v not in seed_vertices:
                raise SpecError(f"fringe_vertex references unknown vertex {v!r}")
            if any(code not in self.fringe_catalog for code in codes):
                raise SpecError(f"fringe_vertex[{v}] outside the catalog")
        edge_names = {e.name for e in self.seed.edges}
        for name, codes in self.fringe_edge.items():
            if name not in edge_names:
                raise SpecError(f"fringe_edge references unknown edge {name!r}")
            if any(code not in self.fringe_catalog for code in codes):
                raise SpecError(f"fringe_edge[{name}] outside the catalog")

    def vertex_catalog(self, vertex: str) -> tuple[str, ...]:
        return self.fringe_vertex.get(vertex, self.fringe_catalog)

    def edge_catalog(self, edge_name: str) -> tuple[str, ...]:
        return self.fringe_edge.get(edge_name, self.fringe_catalog)

    def _all_bounds(self):
        yield "n", self.n
        yield "n_int", self.n_int
        yield "n_lnk", self.n_lnk
        for attr in (
            "path_len", "branch_count_edge", "branch_height_edge", "branch_count_vertex",
            "branch_height_vertex", "double_bonds", "triple_bonds", "na", "na_int",
            "ns_int", "ns_cnt", "ec_int", "ec_lnk", "ac_int", "ac_lnk", "ac_lf", "fc",
        ):
            for key, bounds in getattr(self, attr).items():
                yield f"{attr}[{key}]", bounds

    @cached_property
    def catalog_trees(self) -> tuple[RootedTree, ...]:
        return tuple(parse_code(code) for code in self.fringe_catalog)

    def to_json(self) -> str:
        payload = {
            "seed": {
                "vertices": list(self.seed.vertices),
                "edges": [
                    {"name": e.name, "u": e.u, "v": e.v, "kind": e.kind, "link": e.link}
                    for e in self.seed.edges
                ],
            },
            "rho": self.rho,
            "elements": list(self.elements),
            "vertex_elements": {k: list(v) for k, v in self.vertex_elements.items()},
            "fringe_catalog": list(self.fringe_catalog),
            "n": list(self.n),
            "n_int": list(self.n_int),
            "n_lnk": list(self.n_lnk),
        }
        for attr in (
            "path_len", "branch_count_edge", "branch_height_edge", "branch_count_vertex",
            "branch_height_vertex", "double_bonds", "triple_bonds", "na", "na_int",
            "ns_int", "ns_cnt", "ec_int", "ec_lnk", "ac_int", "ac_lnk", "ac_lf", "fc",
            "fringe_vertex", "fringe_edge",
        ):
            payload[attr] = {k: list(v) for k, v in sorted(getattr(self, attr).items())}
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TopologicalSpec":
        d = json.loads(text)
        seed = SeedGraph(
            vertices=tuple(d["seed"]["vertices"]),
            edges=tuple(SeedEdge(**e) for e in d["seed"]["edges"]),
        )
        kwargs = dict(
            seed=seed,
            rho=int(d["rho"]),
            elements=tuple(d["elements"]),
            vertex_elements={k: tuple(v) for k, v in d["vertex_elements"].items()},
            fringe_catalog=tuple(d["fringe_catalog"]),
            n=tuple(d["n"]),
            n_int=tuple(d["n_int"]),
            n_lnk=tuple(d["n_lnk"]),
        )
        for attr in (
            "path_len", "branch_count_edge", "branch_height_edge", "branch_count_vertex",
            "branch_height_vertex", "double_bonds", "triple_bonds", "na", "na_int",
            "ns_int", "ns_cnt", "ec_int", "ec_lnk", "ac_int", "ac_lnk", "ac_lf", "fc",
        ):
            kwargs[attr] = {k: tuple(v) for k, v in d[attr].items()}
        for attr in ("fringe_vertex", "fringe_edge"):
            kwargs[attr] = {k: tuple(v) for k, v in d.get(attr, {}).items()}
        return cls(**kwargs)


def load_fringe_catalog(text: str) -> tuple[str, ...]:
    """Catalog file: one canonical code per line, '#' comments allowed."""
    codes: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            codes.append(parse_code(line).code)
    if not codes:
        raise SpecError("empty fringe catalog")
    return tuple(codes)


# ---------------------------------------------------------------------------
# Element sets per property


PROPERTY_ELEMENTS: dict[str, tuple[str, ...]] = {
    "AmD": ("H", "C", "N", "O", "Cl", "S(2)"),
    "HcL": ("H", "C", "O", "N", "Cl", "S(2)", "S(6)"),
    "Tg": ("H", "C", "O", "N", "Cl", "S(2)", "S(6)"),
    "RfId": ("H", "C", "O(1)", "O(2)", "N", "Cl", "Si(4)", "F"),
    "Prm": ("H", "C", "O", "N", "Cl"),
}


def element_set(pi: str) -> tuple[str, ...]:
    try:
        return PROPERTY_ELEMENTS[pi]
    except KeyError:
        raise SpecError(f"unknown property tag {pi!r}") from None


# ---------------------------------------------------------------------------
# Instance builder


def two_ring_seed() -> SeedGraph:
    """Two six-cycles joined by two replaceable link edges at para positions."""
    vertices = tuple(f"b{i}" for i in range(1, 13))
    ring1 = [(f"b{i}", f"b{i % 6 + 1}") for i in range(1, 7)]
    ring2 = [(f"b{i + 6}", f"b{(i % 6) + 7}") for i in range(1, 7)]
    edges = [
        SeedEdge("a1", "b1", "b7", kind="path", link=True),
        SeedEdge("a2", "b4", "b10", kind="path", link=True),
    ]
    for i, (u, v) in enumerate(ring1 + ring2, start=3):
        edges.append(SeedEdge(f"a{i}", u, v, kind="exact"))
    return SeedGraph(vertices, tuple(edges))


def build_instance_Ib(
    pi: str,
    n_lb: int,
    fringe_catalog: tuple[str, ...] | None = None,
    examples: tuple[ChemicalGraph, ...] | None = None,
    rho: int = 2,
) -> TopologicalSpec:
    """Parameterized two-ring instance.

    All bounds are the published growth formulas in n_lb, with max(.,0)
    guards so that values at or below 15 reduce to the base case.  The
    admissible edge configurations are taken from the reference example
    polymers and the fringe catalog is the 17-tree default unless
    overridden.
    """
    if n_lb < 1:
        raise SpecError("n_lb must be positive")
    elements = element_set(pi)
    if fringe_catalog is None:
        from .data import fringe_catalog_text

        fringe_catalog = load_fringe_catalog(fringe_catalog_text())
    if len(fringe_catalog) != 17:
        raise SpecError("instance expects a 17-tree catalog")
    if examples is None:
        from .chemgraph import parse_pmg
        from .data import example_polymer_text

        examples = tuple(parse_pmg(example_polymer_text(i)) for i in (1, 2, 3, 4))

    grow = max(n_lb - 15, 0)
    quarter = max((n_lb - 15) // 4, 0)
    half = max((n_lb - 15) // 2, 0)
    n_star = n_lb + 10
    ell_lb = 2 + quarter

    seed = two_ring_seed()
    ec_int_keys: set[str] = set()
    ec_lnk_keys: set[str] = set()
    ac_int_keys: set[str] = set()
    ac_lnk_keys: set[str] = set()
    ac_lf_keys: set[str] = set()
    for g in examples:
        dec = decompose(g, rho)
        for e in sorted(dec.interior_edges):
            cfg = edge_config(dec, e)
            ec_int_keys.add(config_str(cfg))
            ac_int_keys.add(adjacency_str(adjacency_of(cfg)))
        for e in sorted(dec.suppressed.link_edges):
            cfg = edge_config(dec, e)
            ec_lnk_keys.add(config_str(cfg))
            ac_lnk_keys.add(adjacency_str(adjacency_of(cfg)))
        for cfg in leaf_edge_adjacency_configs(dec.suppressed):
            ac_lf_keys.add(adjacency_str(cfg))

    fc: dict[str, Bounds] = {}
    for idx, code in enumerate(fringe_catalog, start=1):
        if idx <= 4:
            ub = 12 + grow
        elif idx <= 12:
            ub = 8 + half
        else:
            ub = 5 + quarter
        fc[code] = (0, ub)

    na: dict[str, Bounds] = {}
    for a in elements:
        if a in ("H", "C"):
            na[a] = (0, n_star)
        elif a in ("O", "N"):
            na[a] = (0, 5 + grow)
        else:
            na[a] = (0, 2 + quarter)

    heavy = [a for a in elements if a != "H"]
    symbol_keys = [f"({a},{d})" for a in elements for d in range(1, 5)]
    return TopologicalSpec(
        seed=seed,
        rho=rho,
        elements=elements,
        vertex_elements={v: ("C",) for v in seed.vertices},
        fringe_catalog=tuple(fringe_catalog),
        n=(n_lb, n_star),
        n_int=(14, n_star),
        n_lnk=(2, 2 + grow),
        path_len={"a1": (ell_lb, ell_lb + 5), "a2": (ell_lb, ell_lb + 5)},
        branch_count_edge={"a1": (0, 3), "a2": (0, 3)},
        branch_height_edge={"a1": (0, 5), "a2": (0, 5)},
        branch_count_vertex={v: (0, 0) for v in seed.vertices},
        branch_height_vertex={v: (0, 0) for v in seed.vertices},
        double_bonds={
            "a1": (0, ell_lb // 3),
            "a2": (0, ell_lb // 3),
            **{f"a{i}": (0, 0) for i in (3, 5, 7, 9, 11, 13)},
            **{f"a{i}": (1, 1) for i in (4, 6, 8, 10, 12, 14)},
        },
        triple_bonds={e.name: (0, 0) for e in seed.edges},
        na=na,
        na_int={a: (0, n_star) for a in heavy},
        ns_int={k: (0, n_star) for k in symbol_keys},
        ns_cnt={k: (0, 2) for k in symbol_keys},
        ec_int={k: (0, n_star) for k in sorted(ec_int_keys)},
        ec_lnk={k: (0, n_star) for k in sorted(ec_lnk_keys)},
        ac_int={k: (0, n_star) for k in sorted(ac_int_keys)},
        ac_lnk={k: (0, n_star) for k in sorted(ac_lnk_keys)},
        ac_lf={k: (0, n_star) for k in sorted(ac_lf_keys)},
        fc=fc,
    )


# ---------------------------------------------------------------------------
# Satisfaction checking


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lower: float
    upper: float
    measured: float

    @property
    def ok(self) -> bool:
        return self.lower <= self.measured <= self.upper


@dataclass(frozen=True)
class SpecReport:
    checks: tuple[BoundCheck, ...]
    memberships: tuple[tuple[str, bool], ...]  # named membership conditions
    witness: dict | None
    witness_message: str
    witness_searched: bool = True

    @property
    def passed(self) -> bool:
        return (
            all(c.ok for c in self.checks)
            and all(ok for _, ok in self.memberships)
            and (self.witness is not None or not self.witness_searched)
        )

    def failures(self) -> list[str]:
        out = [f"{c.name}: {c.measured} outside [{c.lower},{c.upper}]" for c in self.checks if not c.ok]
        out += [name for name, ok in self.memberships if not ok]
        if self.witness_searched and self.witness is None:
            out.append(f"witness: {self.witness_message}")
        return out


def _link_internal_vertices(dec: TwoLayeredDecomposition) -> set[int]:
    count: Counter[int] = Counter()
    for u, v in dec.suppressed.link_edges:
        count[u] += 1
        count[v] += 1
    return {v for v, c in count.items() if c == 2}


def check_satisfies(
    g: ChemicalGraph,
    spec: TopologicalSpec,
    rho: int | None = None,
    search_witness: bool = True,
) -> SpecReport:
    """Measure every bound of the specification on a graph and search for
    a seed-expansion witness of its interior (skippable for callers that
    constructed the graph as an expansion in the first place)."""
    rho = spec.rho if rho is None else rho
    dec = decompose(g, rho)
    s = dec.suppressed
    checks: list[BoundCheck] = []
    memberships: list[tuple[str, bool]] = []

    def add(name: str, bounds: Bounds, measured: float) -> None:
        checks.append(BoundCheck(name, bounds[0], bounds[1], measured))

    add("n", spec.n, g.non_hydrogen_count())
    add("n_int", spec.n_int, len(dec.interior_vertices))
    add("n_lnk", spec.n_lnk, len(_link_internal_vertices(dec)))

    na = Counter(sym for _, sym in g.atoms)
    memberships.append(
        ("elements within alphabet", all(sym in spec.elements for sym in na))
    )
    for a, bounds in sorted(spec.na.items()):
        add(f"na[{a}]", bounds, na.get(a, 0))
    na_int = Counter(s.label(v) for v in dec.interior_vertices)
    for a, bounds in sorted(spec.na_int.items()):
        add(f"na_int[{a}]", bounds, na_int.get(a, 0))

    ns_int = Counter(f"({s.label(v)},{s.degree(v)})" for v in dec.interior_vertices)
    for k, bounds in sorted(spec.ns_int.items()):
        add(f"ns_int[{k}]", bounds, ns_int.get(k, 0))
    memberships.append(
        ("interior symbols declared", all(k in spec.ns_int for k in ns_int))
    )

    connecting = g.connecting if g.connecting is not None else ()
    ns_cnt = Counter(f"({s.label(v)},{s.degree(v)})" for v in connecting)
    for k, bounds in sorted(spec.ns_cnt.items()):
        add(f"ns_cnt[{k}]", bounds, ns_cnt.get(k, 0))

    ec_int = Counter(config_str(edge_config(dec, e)) for e in sorted(dec.interior_edges))
    ac_int = Counter(
        adjacency_str(adjacency_of(edge_config(dec, e))) for e in sorted(dec.interior_edges)
    )
    ec_lnk = Counter(config_str(edge_config(dec, e)) for e in sorted(s.link_edges))
    ac_lnk = Counter(
        adjacency_str(adjacency_of(edge_config(dec, e))) for e in sorted(s.link_edges)
    )
    ac_lf = Counter(adjacency_str(c) for c in leaf_edge_adjacency_configs(s))
    for label, counter, table in (
        ("ec_int", ec_int, spec.ec_int),
        ("ec_lnk", ec_lnk, spec.ec_lnk),
        ("ac_int", ac_int, spec.ac_int),
        ("ac_lnk", ac_lnk, spec.ac_lnk),
        ("ac_lf", ac_lf, spec.ac_lf),
    ):
        memberships.append(
            (f"{label} configs declared", all(k in table for k in counter))
        )
        for k, bounds in sorted(table.items()):
            add(f"{label}[{k}]", bounds, counter.get(k, 0))

    fc = Counter(ft.code for ft in dec.fringe_trees.values())
    memberships.append(
        ("fringe trees in catalog", all(code in spec.fringe_catalog for code in fc))
    )
    for code, bounds in sorted(spec.fc.items()):
        add(f"fc[{code}]", bounds, fc.get(code, 0))

    if search_witness:
        witness, message = find_expansion_witness(dec, spec)
    else:
        witness, message = None, "witness search skipped"
    return SpecReport(
        checks=tuple(checks),
        memberships=tuple(memberships),
        witness=witness,
        witness_message=message,
        witness_searched=search_witness,
    )


# ---------------------------------------------------------------------------
# Expansion witness search


def find_expansion_witness(
    dec: TwoLayeredDecomposition, spec: TopologicalSpec
) -> tuple[dict | None, str]:
    """Backtracking embedding of the seed graph into the interior.

    Seed vertices map to distinct interior vertices respecting their
    element restriction; kept edges map to interior edges, replaceable
    edges to vertex-disjoint paths within their length bounds, and the
    remaining interior vertices must hang as pendant trees from allowed
    attachment points within the branch-count and branch-height bounds.
    """
    s = dec.suppressed
    interior = sorted(dec.interior_vertices)
    adj: dict[int, dict[int, int]] = {
        v: {w: m for w, m in s.neighbors(v).items() if w in dec.interior_vertices}
        for v in interior
    }
    seed = spec.seed
    order = _seed_order(seed)
    images: dict[str, int] = {}
    used: set[int] = set()
    path_of: dict[str, list[int]] = {}
    used_edges: set[tuple[int, int]] = set()

    def norm(u: int, v: int) -> tuple[int, int]:
        return (u, v) if u <= v else (v, u)

    def candidates(sv: str) -> list[int]:
        allowed = spec.vertex_elements.get(sv, tuple(a for a in spec.elements if a != "H"))
        seed_deg = seed.degree(sv)
        may_attach = spec.branch_count_vertex.get(sv, (0, 0))[1] > 0
        catalog = spec.vertex_catalog(sv)
        out = []
        for v in interior:
            if v in used or s.label(v) not in allowed:
                continue
            if dec.fringe_trees[v].code not in catalog:
                continue
            deg = len(adj[v])
            # each incident seed edge consumes one interior edge at the image;
            # only attachments may account for extra interior degree
            if deg < seed_deg or (not may_attach and deg != seed_deg):
                continue
            out.append(v)
        return out

    def bond_profile_ok(edge: SeedEdge, mults: list[int]) -> bool:
        d2 = sum(1 for m in mults if m == 2)
        d3 = sum(1 for m in mults if m == 3)
        lo2, hi2 = spec.double_bonds.get(edge.name, (0, len(mults)))
        lo3, hi3 = spec.triple_bonds.get(edge.name, (0, len(mults)))
        return lo2 <= d2 <= hi2 and lo3 <= d3 <= hi3

    def edges_ready(sv: str) -> list[SeedEdge]:
        return [
            e
            for e in seed.edges
            if sv in (e.u, e.v)
            and e.u in images
            and e.v in images
            and e.name not in path_of
            and not (e.kind == "exact" and e.name in exact_done)
        ]

    exact_done: set[str] = set()

    def try_place(pos: int) -> bool:
        if pos == len(order):
            return finish()
        sv = order[pos]
        for v in candidates(sv):
            images[sv] = v
            used.add(v)
            if place_edges(edges_ready(sv), pos):
                return True
            used.discard(v)
            del images[sv]
        return False

    def place_edges(pending: list[SeedEdge], pos: int) -> bool:
        if not pending:
            return try_place(pos + 1)
        edge, rest = pending[0], pending[1:]
        a, b = images[edge.u], images[edge.v]
        if edge.kind == "exact":
            m = adj[a].get(b)
            if m is None or norm(a, b) in used_edges:
                return False
            if not bond_profile_ok(edge, [m]):
                return False
            if norm(a, b) in s.link_edges:  # kept seed edges are never link-edges
                return False
            used_edges.add(norm(a, b))
            exact_done.add(edge.name)
            if place_edges(rest, pos):
                return True
            exact_done.discard(edge.name)
            used_edges.discard(norm(a, b))
            return False
        lo, hi = spec.path_len.get(edge.name, (1, len(interior)))
        edge_catalog = spec.edge_catalog(edge.name)
        for path in _paths_between(adj, a, b, lo, hi, used, used_edges):
            mults = [adj[path[i]][path[i + 1]] for i in range(len(path) - 1)]
            if not bond_profile_ok(edge, mults):
                continue
            if any(dec.fringe_trees[v].code not in edge_catalog for v in path[1:-1]):
                continue
            path_edges = {norm(path[i], path[i + 1]) for i in range(len(path) - 1)}
            if edge.link and not all(e in s.link_edges for e in path_edges):
                continue
            if not edge.link and any(e in s.link_edges for e in path_edges):
                continue
            internals = path[1:-1]
            used.update(internals)
            used_edges.update(path_edges)
            path_of[edge.name] = list(path)
            if place_edges(rest, pos):
                return True
            del path_of[edge.name]
            used_edges.difference_update(path_edges)
            used.difference_update(internals)
        return False

    def finish() -> bool:
        # leftover interior vertices must form pendant trees, each hanging
        # from exactly one used vertex by exactly one edge, and together
        # with the seed-edge images they must cover every interior edge
        leftover = {v for v in interior if v not in used}
        attach_at: dict[int, list[int]] = {}  # anchor -> heights of blocks
        covered: set[tuple[int, int]] = set(used_edges)
        seen: set[int] = set()
        for v0 in sorted(leftover):
            if v0 in seen:
                continue
            comp = {v0}
            seen.add(v0)
            queue = [v0]
            anchor_edges: list[tuple[int, int]] = []
            while queue:
                x = queue.pop()
                for y in adj[x]:
                    if y in leftover:
                        if y not in seen:
                            seen.add(y)
                            comp.add(y)
                            queue.append(y)
                    else:
                        anchor_edges.append((y, x))
            if len(anchor_edges) != 1:
                return False  # pendant component must hang by one edge
            anchor, first = anchor_edges[0]
            inner = {norm(x, y) for x in comp for y in adj[x] if y in comp}
            if len(inner) != len(comp) - 1:
                return False  # pendant component must be a tree
            covered |= inner
            covered.add(norm(anchor, first))
            attach_at.setdefault(anchor, []).append(_component_height(adj, anchor, comp))
        if covered != {norm(u, v) for u, v in dec.interior_edges}:
            return False  # an interior edge escaped the expansion

        for sv, img in images.items():
            heights = attach_at.get(img, [])
            lo, hi = spec.branch_count_vertex.get(sv, (0, 0))
            if not lo <= len(heights) <= hi:
                return False
            ch_lo, ch_hi = spec.branch_height_vertex.get(sv, (0, 0))
            if not ch_lo <= max(heights, default=0) <= ch_hi:
                return False
        consumed = set(images.values())
        for name, path in path_of.items():
            internals = path[1:-1]
            branched = [v for v in internals if attach_at.get(v)]
            lo, hi = spec.branch_count_edge.get(name, (0, 0))
            if not lo <= len(branched) <= hi:
                return False
            ch_lo, ch_hi = spec.branch_height_edge.get(name, (0, 0))
            height = max((h for v in internals for h in attach_at.get(v, [])), default=0)
            if not ch_lo <= height <= ch_hi:
                return False
            consumed.update(internals)
        if any(anchor not in consumed for anchor in attach_at):
            return False
        nonlocal witness
        witness = {
            "images": dict(images),
            "paths": {k: list(v) for k, v in path_of.items()},
            "attachments": {str(k): v for k, v in sorted(attach_at.items())},
        }
        return True

    witness: dict | None = None
    if len(interior) < len(seed.vertices):
        return None, "interior smaller than seed"
    ok = try_place(0)
    if not ok:
        return None, "no seed-expansion embedding found"
    return witness, "witness found"


def _seed_order(seed: SeedGraph) -> list[str]:
    """Place vertices so each one is adjacent to an earlier one via a kept
    edge when possible; path edges anchor new components."""
    exact_adj: dict[str, set[str]] = {v: set() for v in seed.vertices}
    any_adj: dict[str, set[str]] = {v: set() for v in seed.vertices}
    for e in seed.edges:
        any_adj[e.u].add(e.v)
        any_adj[e.v].add(e.u)
        if e.kind == "exact":
            exact_adj[e.u].add(e.v)
            exact_adj[e.v].add(e.u)
    order: list[str] = []
    placed: set[str] = set()
    while len(order) < len(seed.vertices):
        nxt = None
        for v in seed.vertices:
            if v in placed:
                continue
            if exact_adj[v] & placed:
                nxt = v
                break
        if nxt is None:
            for v in seed.vertices:
                if v not in placed and (not placed or any_adj[v] & placed):
                    nxt = v
                    break
        if nxt is None:
            nxt = next(v for v in seed.vertices if v not in placed)
        order.append(nxt)
        placed.add(nxt)
    return order


def _paths_between(adj, a: int, b: int, lo: int, hi: int, used: set[int], used_edges):
    """Simple a-b paths of length lo..hi whose internal vertices are free."""
    def norm(u, v):
        return (u, v) if u <= v else (v, u)

    path = [a]
    on_path = {a}

    def extend(current: int, length: int):
        for w in sorted(adj[current]):
            e = norm(current, w)
            if e in used_edges:
                continue
            if w == b:
                if lo <= length + 1 <= hi:
                    yield path + [b]
                continue
            if w in on_path or w in used or length + 1 >= hi:
                continue
            path.append(w)
            on_path.add(w)
            yield from extend(w, length + 1)
            on_path.discard(w)
            path.pop()

    yield from extend(a, 0)


def _component_height(adj, anchor: int, comp: set[int]) -> int:
    """Longest distance from the anchor into its pendant component."""
    best = 0
    stack = [(anchor, 0, {anchor})]
    while stack:
        v, d, seen = stack.pop()
        for w in adj[v]:
            if w in comp and w not in seen:
                best = max(best, d + 1)
                stack.append((w, d + 1, seen | {w}))
    return best
