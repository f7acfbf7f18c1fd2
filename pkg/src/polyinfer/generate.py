"""Constrained polymer generation by seed-graph expansion.

Enumerates expansions of a specification's seed graph in a fixed order:
replacement path lengths ascending, then pendant-branch placements, then
bond assignments, then fringe-tree choices in catalog order.  Counter
upper bounds prune the search; every survivor is re-checked against the
full specification and the trained model's property window before
emission, and duplicates are suppressed by a canonical form of the whole
monomer graph (interior canonical labeling plus fringe codes).
"""

from __future__ import annotations

import itertools
import time
from collections import Counter
from dataclasses import dataclass, field

from .chemgraph import DEFAULT_TABLE, ChemicalGraph
from .model import ModelBundle
from .topospec import SeedEdge, TopologicalSpec, check_satisfies
from .twolayer import RootedTree, decompose, parse_code


@dataclass(frozen=True)
class CatalogEntry:
    index: int
    code: str
    tree: RootedTree
    element: str
    free_valence: int
    height: int
    elements: tuple[tuple[str, int], ...]  # element counts including the root

    @classmethod
    def build(cls, index: int, code: str) -> "CatalogEntry":
        tree = parse_code(code)
        counts = Counter()

        def walk(t: RootedTree):
            counts[t.label] += 1
            for _, c in t.children:
                walk(c)

        walk(tree)
        return cls(
            index=index,
            code=code,
            tree=tree,
            element=tree.label,
            free_valence=DEFAULT_TABLE.valence(tree.label) - tree.root_bond_sum(),
            height=tree.heavy_height(),
            elements=tuple(sorted(counts.items())),
        )


@dataclass
class GeneratedGraph:
    graph: ChemicalGraph
    prediction: float
    signature: str
    fringe_codes: tuple[str, ...]


@dataclass
class GenerationOutcome:
    results: list[GeneratedGraph] = field(default_factory=list)
    status: str = "exhausted"  # or "limit-candidates" / "limit-seconds"
    candidates_examined: int = 0
    rejected_spec: int = 0
    rejected_window: int = 0
    rejected_oov: int = 0
    duplicates: int = 0


# ---------------------------------------------------------------------------
# Skeleton enumeration (interior structure before elements and fringes)


@dataclass(frozen=True)
class Skeleton:
    """Interior graph shape: vertex roles and bonds, before chemistry.

    Vertices are integers; role maps seed vertices to their name, path
    internals to their seed edge, and pendant vertices to their anchor.
    `tips` are pendant-path ends, which must carry a full-height fringe so
    they stay interior.
    """

    n_vertices: int
    seed_image: dict[str, int]
    edges: tuple[tuple[int, int, int], ...]  # (u, v, multiplicity)
    link_edges: tuple[tuple[int, int], ...]
    tips: frozenset[int]
    allowed_elements: dict[int, tuple[str, ...]]
    allowed_codes: dict[int, tuple[str, ...]]  # per-vertex fringe restriction
    n_lnk: int


def _path_edge_names(spec: TopologicalSpec) -> list[SeedEdge]:
    return [e for e in spec.seed.edges if e.kind == "path"]


def _iter_skeletons(spec: TopologicalSpec):
    path_edges = _path_edge_names(spec)
    length_ranges = [
        range(spec.path_len[e.name][0], spec.path_len[e.name][1] + 1) for e in path_edges
    ]
    for lengths in itertools.product(*length_ranges):
        yield from _iter_branch_layouts(spec, path_edges, lengths)


def _iter_branch_layouts(spec: TopologicalSpec, path_edges, lengths):
    """Pendant-path options per replaced edge: which internal slots carry a
    branch (within the branch-count bounds) and how deep each branch is."""
    per_edge_options: list[list[tuple[tuple[int, ...], tuple[int, ...]]]] = []
    for e, length in zip(path_edges, lengths):
        lo, hi = spec.branch_count_edge.get(e.name, (0, 0))
        ch_lo, ch_hi = spec.branch_height_edge.get(e.name, (0, 0))
        options = []
        for count in range(lo, min(hi, length - 1) + 1):
            for chosen in itertools.combinations(range(length - 1), count):
                depth_low = max(ch_lo, 1)
                for depths in itertools.product(range(depth_low, ch_hi + 1), repeat=count):
                    options.append((chosen, depths))
        per_edge_options.append(options)
    for combo in itertools.product(*per_edge_options):
        yield from _iter_bond_assignments(spec, path_edges, lengths, combo)


def _iter_bond_assignments(spec, path_edges, lengths, branch_combo):
    """Multiplicity choices: kept seed edges by their exact bd2/bd3 bounds,
    path edges by double/triple counts and positions; pendant edges single."""
    seed = spec.seed
    vertex_id: dict[str, int] = {}
    nxt = 1
    for name in seed.vertices:
        vertex_id[name] = nxt
        nxt += 1

    exact_options: list[list[int]] = []
    exact_edges = [e for e in seed.edges if e.kind == "exact"]
    for e in exact_edges:
        lo2, hi2 = spec.double_bonds.get(e.name, (0, 1))
        lo3, hi3 = spec.triple_bonds.get(e.name, (0, 1))
        mults = []
        if lo2 == 0 and lo3 == 0:
            mults.append(1)
        if hi2 >= 1 and lo3 == 0:
            mults.append(2)
        if hi3 >= 1 and lo2 == 0:
            mults.append(3)
        exact_options.append(mults)

    path_bond_options: list[list[tuple[int, ...]]] = []
    for e, length in zip(path_edges, lengths):
        lo2, hi2 = spec.double_bonds.get(e.name, (0, 0))
        lo3, hi3 = spec.triple_bonds.get(e.name, (0, 0))
        options: list[tuple[int, ...]] = []
        for d2 in range(lo2, min(hi2, length) + 1):
            for d3 in range(lo3, min(hi3, length - d2) + 1):
                for dbl_pos in itertools.combinations(range(length), d2):
                    rest = [i for i in range(length) if i not in dbl_pos]
                    for trp_pos in itertools.combinations(rest, d3):
                        mults = [1] * length
                        for i in dbl_pos:
                            mults[i] = 2
                        for i in trp_pos:
                            mults[i] = 3
                        options.append(tuple(mults))
        path_bond_options.append(options)

    for exact_mults in itertools.product(*exact_options):
        for path_mults in itertools.product(*path_bond_options):
            edges: list[tuple[int, int, int]] = []
            link_edges: list[tuple[int, int]] = []
            allowed: dict[int, tuple[str, ...]] = {}
            codes: dict[int, tuple[str, ...]] = {}
            tips: set[int] = set()
            counter = len(seed.vertices) + 1
            heavy = tuple(a for a in spec.elements if a != "H")
            for name in seed.vertices:
                allowed[vertex_id[name]] = spec.vertex_elements.get(name, heavy)
                codes[vertex_id[name]] = spec.vertex_catalog(name)
            for e, m in zip(exact_edges, exact_mults):
                edges.append((vertex_id[e.u], vertex_id[e.v], m))
            for (e, length), mults, (slots, depths) in zip(
                zip(path_edges, lengths), path_mults, branch_combo
            ):
                chain = [vertex_id[e.u]]
                for _ in range(length - 1):
                    chain.append(counter)
                    allowed[counter] = heavy
                    codes[counter] = spec.edge_catalog(e.name)
                    counter += 1
                chain.append(vertex_id[e.v])
                for i in range(length):
                    edges.append((chain[i], chain[i + 1], mults[i]))
                    if e.link:
                        link_edges.append((chain[i], chain[i + 1]))
                for slot, depth in zip(slots, depths):
                    anchor = chain[slot + 1]
                    prev = anchor
                    for d in range(depth):
                        edges.append((prev, counter, 1))
                        allowed[counter] = heavy
                        codes[counter] = spec.fringe_catalog
                        prev = counter
                        if d == depth - 1:
                            tips.add(counter)
                        counter += 1
            link_deg = Counter(v for uv in link_edges for v in uv)
            yield Skeleton(
                n_vertices=counter - 1,
                seed_image=dict(vertex_id),
                edges=tuple(edges),
                link_edges=tuple(link_edges),
                tips=frozenset(tips),
                allowed_elements=allowed,
                allowed_codes=codes,
                n_lnk=sum(1 for c in link_deg.values() if c == 2),
            )


# ---------------------------------------------------------------------------
# Fringe assignment and materialization


def _skeleton_admissible(spec: TopologicalSpec, sk: Skeleton, prune: bool) -> bool:
    if not prune:
        return True
    if not spec.n_int[0] <= sk.n_vertices <= spec.n_int[1]:
        return False
    if not spec.n_lnk[0] <= sk.n_lnk <= spec.n_lnk[1]:
        return False
    if sk.n_vertices > spec.n[1]:  # every interior vertex is one heavy atom
        return False
    return True


def _assign_fringes(
    spec: TopologicalSpec,
    sk: Skeleton,
    catalog: list[CatalogEntry],
    prune: bool,
):
    bond_sum = Counter()
    for u, v, m in sk.edges:
        bond_sum[u] += m
        bond_sum[v] += m

    order = list(range(1, sk.n_vertices + 1))
    choices: list[list[CatalogEntry]] = []
    for v in order:
        opts = [
            c
            for c in catalog
            if c.element in sk.allowed_elements[v]
            and c.code in sk.allowed_codes[v]
            and c.free_valence == bond_sum[v]
            and (v not in sk.tips or c.height == spec.rho)
        ]
        if not opts:
            return
        choices.append(opts)

    na = Counter()
    fc = Counter()
    picked: list[CatalogEntry] = []

    def admissible(entry: CatalogEntry) -> bool:
        if not prune:
            return True
        if fc[entry.code] + 1 > spec.fc.get(entry.code, (0, sk.n_vertices + spec.n[1]))[1]:
            return False
        for elem, cnt in entry.elements:
            bound = spec.na.get(elem)
            if bound is not None and na[elem] + cnt > bound[1]:
                return False
            if elem != "H" and elem not in spec.elements:
                return False
        heavy_now = sum(na[e] for e in na if e != "H") + sum(
            c for e, c in entry.elements if e != "H"
        )
        remaining = len(order) - len(picked) - 1
        if heavy_now + remaining > spec.n[1]:
            return False
        return True

    def rec(pos: int):
        if pos == len(order):
            yield tuple(picked)
            return
        for entry in choices[pos]:
            if not admissible(entry):
                continue
            picked.append(entry)
            fc[entry.code] += 1
            for elem, cnt in entry.elements:
                na[elem] += cnt
            yield from rec(pos + 1)
            for elem, cnt in entry.elements:
                na[elem] -= cnt
            fc[entry.code] -= 1
            picked.pop()

    yield from rec(0)


def _materialize(sk: Skeleton, assignment: tuple[CatalogEntry, ...]) -> ChemicalGraph:
    atoms: list[tuple[int, str]] = []
    bonds: list[tuple[int, int, int]] = [(u, v, m) for u, v, m in sk.edges]
    nxt = sk.n_vertices + 1
    for v, entry in zip(range(1, sk.n_vertices + 1), assignment):
        atoms.append((v, entry.element))
        stack = [(v, entry.tree)]
        while stack:
            parent, tree = stack.pop()
            for mult, child in tree.children:
                atoms.append((nxt, child.label))
                bonds.append((parent, nxt, mult))
                stack.append((nxt, child))
                nxt += 1
    return ChemicalGraph(
        atoms=tuple(atoms),
        bonds=tuple(bonds),
        link_edges=frozenset(sk.link_edges),
    )


# ---------------------------------------------------------------------------
# Canonical signatures (duplicate suppression)


def canonical_signature(g: ChemicalGraph, rho: int) -> str:
    """Isomorphism-invariant encoding: canonical labeling of the interior
    graph with fringe codes as vertex colors, link flags on edges."""
    dec = decompose(g, rho)
    s = dec.suppressed
    vertices = sorted(dec.interior_vertices)
    if not vertices:  # degenerate: the whole graph is one fringe
        codes = sorted(ft.code for ft in dec.fringe_trees.values())
        return "|".join(codes) + "||" + "acyclic"
    index = {v: i for i, v in enumerate(vertices)}
    connecting = set(g.connecting or ())
    colors = [
        (
            s.label(v),
            dec.fringe_trees[v].code,
            v in connecting,
        )
        for v in vertices
    ]
    adj: list[list[tuple[int, tuple[int, bool]]]] = [[] for _ in vertices]
    for u, v in dec.interior_edges:
        lab = (s.neighbors(u)[v], ((u, v) if u <= v else (v, u)) in s.link_edges)
        adj[index[u]].append((index[v], lab))
        adj[index[v]].append((index[u], lab))
    return _canonical_form(colors, adj)


def _refine(colors: list[int], adj) -> list[int]:
    n = len(colors)
    while True:
        sig = [
            (colors[v], tuple(sorted((lab, colors[w]) for w, lab in adj[v])))
            for v in range(n)
        ]
        ranks = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [ranks[s] for s in sig]
        if new == colors:
            return colors
        colors = new


def _canonical_form(raw_colors, adj) -> str:
    n = len(raw_colors)
    base = {c: i for i, c in enumerate(sorted(set(raw_colors)))}
    start = _refine([base[c] for c in raw_colors], adj)
    label_of = {i: repr(c) for i, c in enumerate(raw_colors)}

    best: list[str] = []

    def encode(order: list[int]) -> str:
        pos = {v: i for i, v in enumerate(order)}
        rows = []
        for v in order:
            edges = sorted((pos[w], lab) for w, lab in adj[v])
            rows.append(label_of[v] + ";" + ",".join(f"{p}:{lab}" for p, lab in edges))
        return "\n".join(rows)

    def search(colors: list[int]):
        groups: dict[int, list[int]] = {}
        for v, c in enumerate(colors):
            groups.setdefault(c, []).append(v)
        cell = None
        for c in sorted(groups):
            if len(groups[c]) > 1:
                cell = groups[c]
                break
        if cell is None:
            order = sorted(range(n), key=lambda v: colors[v])
            cand = encode(order)
            if not best or cand < best[0]:
                best.clear()
                best.append(cand)
            return
        mark = max(colors) + 1
        for v in cell:
            branched = list(colors)
            branched[v] = mark
            search(_refine(branched, adj))

    search(start)
    return best[0]


# ---------------------------------------------------------------------------
# Top-level generation


def iter_generate(
    spec: TopologicalSpec,
    model: ModelBundle,
    window: tuple[float, float],
    outcome: GenerationOutcome,
    limit_candidates: int | None = None,
    limit_seconds: float | None = None,
    prune: bool = True,
    covariates: dict[str, float] | None = None,
):
    """Yield GeneratedGraph records; status and counts land in `outcome`."""
    if spec.rho != model.registry.rho:
        raise ValueError(
            f"spec rho {spec.rho} differs from the model's {model.registry.rho}"
        )
    catalog = [CatalogEntry.build(i, code) for i, code in enumerate(spec.fringe_catalog, 1)]
    lo, hi = window
    seen: set[str] = set()
    deadline = None if limit_seconds is None else time.monotonic() + limit_seconds
    for sk in _iter_skeletons(spec):
        if not _skeleton_admissible(spec, sk, prune):
            continue
        for assignment in _assign_fringes(spec, sk, catalog, prune):
            if deadline is not None and time.monotonic() > deadline:
                outcome.status = "limit-seconds"
                return
            if limit_candidates is not None and outcome.candidates_examined >= limit_candidates:
                outcome.status = "limit-candidates"
                return
            outcome.candidates_examined += 1
            g = _materialize(sk, assignment)
            # bounds first; the expansion itself is the structural witness,
            # re-established below for every emitted graph
            report = check_satisfies(g, spec, search_witness=False)
            if not report.passed:
                outcome.rejected_spec += 1
                continue
            prediction, oov = model.predict_graph(g, covariates)
            if oov:
                outcome.rejected_oov += 1
                continue
            if not lo <= prediction <= hi:
                outcome.rejected_window += 1
                continue
            sig = canonical_signature(g, spec.rho)
            if sig in seen:
                outcome.duplicates += 1
                continue
            seen.add(sig)
            full = check_satisfies(g, spec)
            if not full.passed:  # pragma: no cover - construction is a witness
                raise RuntimeError(f"constructed graph lost its witness: {full.failures()}")
            result = GeneratedGraph(
                graph=g,
                prediction=prediction,
                signature=sig,
                fringe_codes=tuple(e.code for e in assignment),
            )
            outcome.results.append(result)
            yield result
    outcome.status = "exhausted"


def run_generation(
    spec: TopologicalSpec,
    model: ModelBundle,
    window: tuple[float, float],
    limit_candidates: int | None = None,
    limit_seconds: float | None = None,
    prune: bool = True,
    covariates: dict[str, float] | None = None,
) -> GenerationOutcome:
    outcome = GenerationOutcome()
    for _ in iter_generate(
        spec, model, window, outcome, limit_candidates, limit_seconds, prune, covariates
    ):
        pass
    return outcome


# ---------------------------------------------------------------------------
# Round-trip verification


@dataclass(frozen=True)
class RoundtripCheck:
    name: str
    ok: bool
    detail: str


def verify_roundtrip(
    g: ChemicalGraph,
    spec: TopologicalSpec,
    model: ModelBundle,
    window: tuple[float, float],
    covariates: dict[str, float] | None = None,
) -> list[RoundtripCheck]:
    """Recompute decomposition, specification bounds, features and the
    prediction; one named check per stage."""
    checks: list[RoundtripCheck] = []
    dec = decompose(g, spec.rho)
    checks.append(
        RoundtripCheck(
            "decomposition",
            len(dec.interior_vertices) > 0,
            f"{len(dec.interior_vertices)} interior / {len(dec.exterior_vertices)} exterior",
        )
    )
    report = check_satisfies(g, spec)
    checks.append(
        RoundtripCheck(
            "specification",
            report.passed,
            "pass" if report.passed else "; ".join(report.failures()[:4]),
        )
    )
    prediction, oov = model.predict_graph(g, covariates)
    checks.append(
        RoundtripCheck(
            "vocabulary",
            not oov,
            "all configurations known" if not oov else f"unknown: {', '.join(oov[:4])}",
        )
    )
    lo, hi = window
    in_window = lo <= prediction <= hi
    detail = f"prediction {prediction:.6g} vs [{lo:.6g}, {hi:.6g}]"
    if oov:
        detail += " (unreliable: out-of-vocabulary configs)"
    checks.append(RoundtripCheck("window", in_window, detail))
    return checks
