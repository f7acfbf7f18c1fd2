"""Chemical graph data model for polymers in monomer representation.

A polymer repeating unit is stored as a single connected graph whose two
connecting-edges have been merged into one edge; the edges that every
path between the former connecting-edges must traverse are marked as
link-edges and always form a circular set (one common cycle such that
removing any member turns the rest into bridges).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property


class GraphError(ValueError):
    pass


class PmgParseError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# ---------------------------------------------------------------------------
# Element table


@dataclass(frozen=True)
class ElementSpec:
    symbol: str
    valence: int
    mass: float


DEFAULT_ELEMENTS: tuple[ElementSpec, ...] = (
    ElementSpec("H", 1, 1.008),
    ElementSpec("C", 4, 12.011),
    ElementSpec("N", 3, 14.007),
    ElementSpec("O", 2, 15.999),
    ElementSpec("O(1)", 1, 15.999),
    ElementSpec("O(2)", 2, 15.999),
    ElementSpec("F", 1, 18.998),
    ElementSpec("Si(4)", 4, 28.085),
    ElementSpec("P(5)", 5, 30.974),
    ElementSpec("S(2)", 2, 32.06),
    ElementSpec("S(4)", 4, 32.06),
    ElementSpec("S(6)", 6, 32.06),
    ElementSpec("Cl", 1, 35.45),
)


def split_symbol(symbol: str) -> tuple[str, int]:
    """Split an element token into (base, valence suffix); suffix 0 if absent."""
    if "(" in symbol:
        base, _, rest = symbol.partition("(")
        if not rest.endswith(")") or not rest[:-1].isdigit():
            raise GraphError(f"malformed element token {symbol!r}")
        return base, int(rest[:-1])
    return symbol, 0


def element_sort_key(symbol: str) -> tuple[str, int]:
    return split_symbol(symbol)


class ElementTable:
    """Ordered element catalog with valence and mass per token.

    A suffixed token like S(2) is a distinct symbol whose valence equals
    its suffix; all valences lie in [1, 6].
    """

    def __init__(self, entries: tuple[ElementSpec, ...] = DEFAULT_ELEMENTS):
        by_symbol: dict[str, ElementSpec] = {}
        for spec in entries:
            if spec.symbol in by_symbol:
                raise GraphError(f"duplicate element symbol {spec.symbol!r}")
            if not 1 <= spec.valence <= 6:
                raise GraphError(f"valence of {spec.symbol!r} outside [1,6]")
            base, suffix = split_symbol(spec.symbol)
            if suffix and suffix != spec.valence:
                raise GraphError(
                    f"suffixed symbol {spec.symbol!r} must have valence {suffix}"
                )
            by_symbol[spec.symbol] = spec
        self.entries = tuple(entries)
        self._by_symbol = by_symbol

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._by_symbol

    def valence(self, symbol: str) -> int:
        try:
            return self._by_symbol[symbol].valence
        except KeyError:
            raise GraphError(f"unknown element symbol {symbol!r}") from None

    def mass(self, symbol: str) -> float:
        try:
            return self._by_symbol[symbol].mass
        except KeyError:
            raise GraphError(f"unknown element symbol {symbol!r}") from None


DEFAULT_TABLE = ElementTable()


# ---------------------------------------------------------------------------
# Plain-graph helpers (work on explicit vertex/edge collections)

Edge = tuple[int, int]


def _norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u <= v else (v, u)


def _adjacency(vertices, edges) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return adj


def is_connected(vertices, edges) -> bool:
    vertices = list(vertices)
    if not vertices:
        return True
    adj = _adjacency(vertices, edges)
    seen = {vertices[0]}
    queue = deque([vertices[0]])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(vertices)


def rank(vertices, edges) -> int:
    """Cycle rank |E| - |V| + 1 of a connected graph."""
    vertices = list(vertices)
    edges = list(edges)
    if not is_connected(vertices, edges):
        raise GraphError("rank undefined for disconnected graph")
    return len(edges) - len(vertices) + 1

def bridges(vertices, edges) -> set[Edge]:
    """All bridges of a connected graph, by DFS lowlink."""
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in vertices}
    for idx, (u, v) in enumerate(edges):
        adj[u].append((v, idx))
        adj[v].append((u, idx))
    order: dict[int, int] = {}
    low: dict[int, int] = {}
    out: set[Edge] = set()
    counter = 0
    for start in vertices:
        if start in order:
            continue
        # iterative DFS; (vertex, incoming edge index, neighbor iterator)
        stack = [(start, -1, iter(adj[start]))]
        order[start] = low[start] = counter
        counter += 1
        while stack:
            u, in_idx, it = stack[-1]
            advanced = False
            for w, idx in it:
                if idx == in_idx:
                    continue
                if w not in order:
                    order[w] = low[w] = counter
                    counter += 1
                    stack.append((w, idx, iter(adj[w])))
                    advanced = True
                    break
                low[u] = min(low[u], order[w])
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[u])
                    if low[u] > order[parent]:
                        out.add(_norm_edge(parent, u))
        # tree edges with low[child] > order[parent] are bridges
    return out


def core_edges(vertices, edges) -> tuple[set[Edge], set[int]]:
    """Core edges and core vertices of a connected cyclic graph.

    An edge is a core-edge iff it lies on a cycle, or it is a bridge whose
    removal leaves two components that each contain a cycle.
    """
    vertices = list(vertices)
    edges = [_norm_edge(u, v) for u, v in edges]
    if rank(vertices, edges) == 0:
        raise GraphError("core undefined for acyclic graph")
    bridge_set = bridges(vertices, edges)
    core: set[Edge] = {e for e in edges if e not in bridge_set}
    for e in bridge_set:
        rest = [f for f in edges if f != e]
        adj = _adjacency(vertices, rest)
        for side_root in e:
            seen = {side_root}
            queue = deque([side_root])
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
            n_edges = sum(1 for u, v in rest if u in seen and v in seen)
            if n_edges < len(seen):  # acyclic side
                break
        else:
            core.add(e)
    core_vertices = {u for e in core for u in e}
    return core, core_vertices


def leaf_strip_heights(vertices, edges, root: int | None = None) -> tuple[dict[int, int], set[int]]:
    """Heights by iterated leaf removal.

    Removes degree-1 non-root vertices round by round; a vertex removed in
    round i has height i.  Surviving vertices adjacent to a removed one get
    height 1 + max over removed neighbors; others stay without a height.
    Returns (heights, tree_vertices).
    """
    adj = {v: set() for v in vertices}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    heights: dict[int, int] = {}
    tree: set[int] = set()
    alive = set(vertices)
    level = 0
    while True:
        leaves = [v for v in alive if len(adj[v]) == 1 and v != root]
        if not leaves:
            break
        for v in leaves:
            heights[v] = level
            tree.add(v)
        for v in leaves:
            alive.discard(v)
            for w in adj[v]:
                adj[w].discard(v)
            adj[v] = set()
        level += 1
    # heights of survivors adjacent to stripped vertices
    neighbor_of: dict[int, list[int]] = {v: [] for v in alive}
    for u, v in edges:
        if u in alive and v in tree:
            neighbor_of[u].append(v)
        if v in alive and u in tree:
            neighbor_of[v].append(u)
    for v in alive:
        if neighbor_of[v]:
            heights[v] = 1 + max(heights[w] for w in neighbor_of[v])
    return heights, tree


def k_lean(vertices, edges, k: int, root: int | None = None) -> bool:
    """Whether the graph has at most one leaf k-branch per pendant tree.

    For a cyclic graph the non-core-edges induce trees rooted at
    core-vertices and each of them is tested; an acyclic graph is tested
    as a single rooted tree and requires an explicit root.
    """
    vertices = list(vertices)
    edges = [_norm_edge(u, v) for u, v in edges]
    if rank(vertices, edges) == 0:
        if root is None:
            raise GraphError("k_lean on an acyclic graph requires a root")
        heights, _ = leaf_strip_heights(vertices, edges, root=root)
        return sum(1 for h in heights.values() if h == k) <= 1
    core, core_vertices = core_edges(vertices, edges)
    pendant = [e for e in edges if e not in core]
    if not pendant:
        return True
    adj = _adjacency(vertices, pendant)
    seen: set[int] = set()
    for r in core_vertices:
        if not adj.get(r):
            continue
        tree_vertices = [r]
        queue = deque([r])
        seen.add(r)
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in seen and w not in core_vertices:
                    seen.add(w)
                    tree_vertices.append(w)
                    queue.append(w)
        tree_edges = [e for e in pendant if e[0] in tree_vertices and e[1] in tree_vertices]
        heights, _ = leaf_strip_heights(tree_vertices, tree_edges, root=r)
        if sum(1 for h in heights.values() if h == k) > 1:
            return False
    return True


def _separates(vertices, edges, removed: set[Edge], a: int, b: int) -> bool:
    adj = _adjacency(vertices, [e for e in edges if e not in removed])
    seen = {a}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return b not in seen


def is_circular_set(vertices, edges, marked) -> bool:
    """Whether `marked` edges all lie on one cycle that removing any one of
    them turns the rest into bridges."""
    edges = [_norm_edge(u, v) for u, v in edges]
    marked = [_norm_edge(u, v) for u, v in marked]
    if len(set(marked)) != len(marked):
        return False
    if not marked:
        return True
    edge_set = set(edges)
    if any(e not in edge_set for e in marked):
        return False
    all_bridges = bridges(vertices, edges)
    if any(e in all_bridges for e in marked):
        return False  # a bridge is on no cycle
    for e in marked:
        others = [f for f in marked if f != e]
        remaining = [f for f in edges if f != e]
        rem_bridges = bridges(vertices, remaining)
        if any(f not in rem_bridges for f in others):
            return False
    # every other marked edge must separate the endpoints of e in G - e,
    # which puts them all on one cycle through e
    e0 = marked[0]
    for f in marked[1:]:
        if not _separates(vertices, edges, {e0, f}, e0[0], e0[1]):
            return False
    return True


# ---------------------------------------------------------------------------
# Chemical graph


@dataclass(frozen=True)
class ChemicalGraph:
    """Connected simple graph with element labels and bond multiplicities.

    `atoms` is ((id, element), ...) in ascending id; `bonds` is
    ((u, v, multiplicity), ...) with u < v.  Immutable after construction;
    all invariants are checked eagerly.
    """

    atoms: tuple[tuple[int, str], ...]
    bonds: tuple[tuple[int, int, int], ...]
    link_edges: frozenset[Edge] = frozenset()
    connecting: tuple[int, int] | None = None
    elements: ElementTable = field(default=DEFAULT_TABLE, repr=False, compare=False)
    max_abs_charge: int = 0

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(sorted(self.atoms)))
        object.__setattr__(
            self, "bonds", tuple(sorted((_norm_edge(u, v) + (m,)) for u, v, m in self.bonds))
        )
        object.__setattr__(
            self, "link_edges", frozenset(_norm_edge(u, v) for u, v in self.link_edges)
        )
        if self.connecting is not None:
            object.__setattr__(self, "connecting", _norm_edge(*self.connecting))
        self._validate()

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        ids = [i for i, _ in self.atoms]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate atom id")
        if not ids:
            raise GraphError("empty graph")
        id_set = set(ids)
        seen_edges: set[Edge] = set()
        for u, v, m in self.bonds:
            if u == v:
                raise GraphError(f"self-loop at atom {u}")
            if u not in id_set or v not in id_set:
                raise GraphError(f"bond references unknown atom: {u}-{v}")
            if (u, v) in seen_edges:
                raise GraphError(f"duplicate bond {u}-{v}")
            if m not in (1, 2, 3):
                raise GraphError(f"bond multiplicity {m} outside [1,3]")
            seen_edges.add((u, v))
        for sym in (s for _, s in self.atoms):
            if sym not in self.elements:
                raise GraphError(f"unknown element symbol {sym!r}")
        if not is_connected(ids, seen_edges):
            raise GraphError("graph is not connected")
        for i, sym in self.atoms:
            ele = self.beta_sum(i) - self.elements.valence(sym)
            if abs(ele) > self.max_abs_charge:
                raise GraphError(
                    f"valence violation at atom {i} ({sym}): bond sum "
                    f"{self.beta_sum(i)} vs valence {self.elements.valence(sym)}"
                )
        if self.link_edges:
            if any(e not in seen_edges for e in self.link_edges):
                raise GraphError("link edge is not an existing bond")
            if any(self.label(u) == "H" or self.label(v) == "H" for u, v in self.link_edges):
                raise GraphError("link edge touches a hydrogen")
            # hydrogens are degree-1 and lie on no cycle; dropping them
            # changes neither bridges nor separations among heavy edges
            heavy = [i for i, s in self.atoms if s != "H"]
            heavy_set = set(heavy)
            heavy_edges = [
                (u, v) for u, v in seen_edges if u in heavy_set and v in heavy_set
            ]
            if not is_circular_set(heavy, heavy_edges, self.link_edges):
                raise GraphError("link-edge set is not a circular set")
        if self.connecting is not None:
            if self.connecting not in self.link_edges:
                raise GraphError("connecting vertices must span a link edge")

    # -- basic accessors ----------------------------------------------------

    @cached_property
    def _labels(self) -> dict[int, str]:
        return dict(self.atoms)

    @cached_property
    def _adj(self) -> dict[int, dict[int, int]]:
        adj: dict[int, dict[int, int]] = {i: {} for i, _ in self.atoms}
        for u, v, m in self.bonds:
            adj[u][v] = m
            adj[v][u] = m
        return adj

    def label(self, v: int) -> str:
        return self._labels[v]

    def neighbors(self, v: int) -> dict[int, int]:
        return self._adj[v]

    def beta_sum(self, v: int) -> int:
        return sum(self._adj[v].values())

    @property
    def vertex_ids(self) -> list[int]:
        return [i for i, _ in self.atoms]

    @property
    def edge_list(self) -> list[Edge]:
        return [(u, v) for u, v, _ in self.bonds]

    def bond_multiplicity(self, u: int, v: int) -> int:
        return self._adj[u][v]

    def non_hydrogen_count(self) -> int:
        return sum(1 for _, s in self.atoms if s != "H")

    def heavy_neighbor_count(self, v: int) -> int:
        return sum(1 for w in self._adj[v] if self._labels[w] != "H")

    def mass_average(self) -> float:
        heavy = [self.elements.mass(s) for _, s in self.atoms if s != "H"]
        if not heavy:
            raise GraphError("no non-hydrogen atom")
        return sum(heavy) / len(heavy)


@dataclass(frozen=True)
class SuppressedGraph:
    """Hydrogen-suppressed view of a ChemicalGraph.

    Keeps original ids for the remaining vertices; `hydrogens` records how
    many H atoms were removed from each of them, so the original graph can
    be rebuilt up to isomorphism.
    """

    atoms: tuple[tuple[int, str], ...]
    bonds: tuple[tuple[int, int, int], ...]
    link_edges: frozenset[Edge]
    connecting: tuple[int, int] | None
    hydrogens: tuple[tuple[int, int], ...]  # (vertex id, removed H count)

    @cached_property
    def _labels(self) -> dict[int, str]:
        return dict(self.atoms)

    @cached_property
    def _adj(self) -> dict[int, dict[int, int]]:
        adj: dict[int, dict[int, int]] = {i: {} for i, _ in self.atoms}
        for u, v, m in self.bonds:
            adj[u][v] = m
            adj[v][u] = m
        return adj

    @cached_property
    def h_count(self) -> dict[int, int]:
        return dict(self.hydrogens)

    def label(self, v: int) -> str:
        return self._labels[v]

    def neighbors(self, v: int) -> dict[int, int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    @property
    def vertex_ids(self) -> list[int]:
        return [i for i, _ in self.atoms]

    @property
    def edge_list(self) -> list[Edge]:
        return [(u, v) for u, v, _ in self.bonds]

    def rank(self) -> int:
        return rank(self.vertex_ids, self.edge_list)


def hydrogen_suppress(g: ChemicalGraph) -> SuppressedGraph:
    """Remove all H vertices, recording how many were attached where."""
    keep = [(i, s) for i, s in g.atoms if s != "H"]
    if not keep:
        raise GraphError("hydrogen-only graph has no suppressed form")
    keep_ids = {i for i, _ in keep}
    bonds = tuple((u, v, m) for u, v, m in g.bonds if u in keep_ids and v in keep_ids)
    h_counts = {i: 0 for i in keep_ids}
    for u, v, _ in g.bonds:
        if u in keep_ids and g.label(v) == "H":
            h_counts[u] += 1
        elif v in keep_ids and g.label(u) == "H":
            h_counts[v] += 1
    return SuppressedGraph(
        atoms=tuple(keep),
        bonds=bonds,
        link_edges=g.link_edges,
        connecting=g.connecting,
        hydrogens=tuple(sorted(h_counts.items())),
    )


def reattach_hydrogens(s: SuppressedGraph) -> ChemicalGraph:
    """Rebuild a full chemical graph from a suppressed one (fresh H ids)."""
    atoms = list(s.atoms)
    bonds = list(s.bonds)
    next_id = max(i for i, _ in atoms) + 1
    for v, count in s.hydrogens:
        for _ in range(count):
            atoms.append((next_id, "H"))
            bonds.append((v, next_id, 1))
            next_id += 1
    return ChemicalGraph(
        atoms=tuple(atoms),
        bonds=tuple(bonds),
        link_edges=s.link_edges,
        connecting=s.connecting,
    )


def validate_link_edges(g: ChemicalGraph) -> bool:
    """Whether g's marked link edges form a circular set."""
    return is_circular_set(g.vertex_ids, g.edge_list, g.link_edges)


# ---------------------------------------------------------------------------
# PMG text format

PMG_HEADER = "PMG 1"


def parse_pmg(
    text: str,
    elements: ElementTable = DEFAULT_TABLE,
    max_abs_charge: int = 0,
) -> ChemicalGraph:
    """Parse the line-oriented PMG format into a validated ChemicalGraph."""
    atoms: list[tuple[int, str]] = []
    bonds: list[tuple[int, int, int]] = []
    links: list[Edge] = []
    connect: tuple[int, int] | None = None
    atom_ids: set[int] = set()
    bond_set: set[Edge] = set()
    header_seen = False

    def want_int(token: str, lineno: int, what: str) -> int:
        try:
            return int(token)
        except ValueError:
            raise PmgParseError(f"{what} is not an integer: {token!r}", lineno) from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            if line != PMG_HEADER:
                raise PmgParseError(f"expected {PMG_HEADER!r} header", lineno)
            header_seen = True
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "ATOM":
            if len(parts) != 3:
                raise PmgParseError("ATOM needs <id> <element>", lineno)
            i = want_int(parts[1], lineno, "atom id")
            sym = parts[2]
            if i in atom_ids:
                raise PmgParseError(f"duplicate atom id {i}", lineno)
            if sym not in elements:
                raise PmgParseError(f"unknown element symbol {sym!r}", lineno)
            atom_ids.add(i)
            atoms.append((i, sym))
        elif kind == "BOND":
            if len(parts) != 4:
                raise PmgParseError("BOND needs <id1> <id2> <mult>", lineno)
            u = want_int(parts[1], lineno, "atom id")
            v = want_int(parts[2], lineno, "atom id")
            m = want_int(parts[3], lineno, "multiplicity")
            if u == v:
                raise PmgParseError("self-loop bond", lineno)
            if u not in atom_ids or v not in atom_ids:
                raise PmgParseError(f"bond references undeclared atom {u}-{v}", lineno)
            if m not in (1, 2, 3):
                raise PmgParseError(f"multiplicity {m} outside 1..3", lineno)
            e = _norm_edge(u, v)
            if e in bond_set:
                raise PmgParseError(f"duplicate bond {u}-{v}", lineno)
            bond_set.add(e)
            bonds.append((e[0], e[1], m))
        elif kind == "LINK":
            if len(parts) != 3:
                raise PmgParseError("LINK needs <id1> <id2>", lineno)
            u = want_int(parts[1], lineno, "atom id")
            v = want_int(parts[2], lineno, "atom id")
            e = _norm_edge(u, v)
            if e not in bond_set:
                raise PmgParseError(f"LINK names a nonexistent bond {u}-{v}", lineno)
            if e in links:
                raise PmgParseError(f"duplicate LINK {u}-{v}", lineno)
            links.append(e)
        elif kind == "CONNECT":
            if len(parts) != 3:
                raise PmgParseError("CONNECT needs <id1> <id2>", lineno)
            u = want_int(parts[1], lineno, "atom id")
            v = want_int(parts[2], lineno, "atom id")
            if connect is not None:
                raise PmgParseError("duplicate CONNECT", lineno)
            e = _norm_edge(u, v)
            if e not in links:
                raise PmgParseError(f"CONNECT must name a LINK edge {u}-{v}", lineno)
            connect = e
        else:
            raise PmgParseError(f"unknown directive {kind!r}", lineno)

    if not header_seen:
        raise PmgParseError("missing PMG header")
    try:
        return ChemicalGraph(
            atoms=tuple(atoms),
            bonds=tuple(bonds),
            link_edges=frozenset(links),
            connecting=connect,
            elements=elements,
            max_abs_charge=max_abs_charge,
        )
    except GraphError as exc:
        raise PmgParseError(str(exc)) from exc


def serialize_pmg(g: ChemicalGraph) -> str:
    """Emit PMG text: atoms ascending, bonds and links lexicographic."""
    out = [PMG_HEADER]
    for i, sym in g.atoms:
        out.append(f"ATOM {i} {sym}")
    for u, v, m in g.bonds:
        out.append(f"BOND {u} {v} {m}")
    for u, v in sorted(g.link_edges):
        out.append(f"LINK {u} {v}")
    if g.connecting is not None:
        out.append(f"CONNECT {g.connecting[0]} {g.connecting[1]}")
    return "\n".join(out) + "\n"
