"""Two-layer decomposition of a monomer graph at a branch parameter.

Vertices of the hydrogen-suppressed graph that are stripped away within
`rho` rounds of leaf removal are exterior; everything else (cycle
vertices, vertices of undefined height and tree vertices of height at
least rho) is interior.  Exterior edges hang off interior roots as
fringe trees, which carry their original hydrogens and are compared by a
canonical parenthesized code.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .chemgraph import (
    ChemicalGraph,
    GraphError,
    SuppressedGraph,
    element_sort_key,
    hydrogen_suppress,
    leaf_strip_heights,
)

BOND_MARK = {1: "-", 2: "=", 3: "#"}
MARK_BOND = {v: k for k, v in BOND_MARK.items()}


# ---------------------------------------------------------------------------
# Rooted chemical trees and their canonical codes


@dataclass(frozen=True)
class RootedTree:
    """Rooted tree with element labels and bond multiplicities to children."""

    label: str
    children: tuple[tuple[int, "RootedTree"], ...] = ()

    @cached_property
    def code(self) -> str:
        return encode_tree(self)

    def size(self) -> int:
        return 1 + sum(c.size() for _, c in self.children)

    def heavy_size(self) -> int:
        own = 0 if self.label == "H" else 1
        return own + sum(c.heavy_size() for _, c in self.children)

    def heavy_height(self) -> int:
        """Depth of the deepest non-hydrogen vertex."""
        depths = [1 + c.heavy_height() for _, c in self.children if c.heavy_size() > 0]
        return max(depths, default=0)

    def root_bond_sum(self) -> int:
        return sum(m for m, _ in self.children)

    def root_h_count(self) -> int:
        return sum(1 for _, c in self.children if c.label == "H")


def encode_tree(t: RootedTree) -> str:
    """Canonical code: element followed by sorted child groups.

    Child groups are `(<mark><code>)` with marks -, =, # for bond
    multiplicities 1..3, sorted by (multiplicity, code); two rooted
    chemical trees get the same string iff they are rooted-isomorphic.
    """
    parts = sorted((m, encode_tree(c)) for m, c in t.children)
    return t.label + "".join(f"({BOND_MARK[m]}{code})" for m, code in parts)


def parse_code(code: str) -> RootedTree:
    """Parse a canonical code back into a RootedTree."""
    tree, pos = _parse_node(code, 0)
    if pos != len(code):
        raise GraphError(f"trailing characters in code {code!r}")
    return tree


def _parse_node(s: str, pos: int) -> tuple[RootedTree, int]:
    start = pos
    while pos < len(s) and (s[pos].isalpha() or s[pos].isdigit()):
        pos += 1
    # a '(digits)' right after the base symbol is a valence suffix, part of
    # the element token (children always start with a bond mark)
    if pos < len(s) and s[pos] == "(" and pos + 1 < len(s) and s[pos + 1].isdigit():
        close = s.index(")", pos)
        pos = close + 1
    label = s[start:pos]
    if not label:
        raise GraphError(f"expected element at position {start} in {s!r}")
    children: list[tuple[int, RootedTree]] = []
    while pos < len(s) and s[pos] == "(":
        mark = s[pos + 1]
        if mark not in MARK_BOND:
            raise GraphError(f"expected bond mark at position {pos + 1} in {s!r}")
        child, pos = _parse_node(s, pos + 2)
        if pos >= len(s) or s[pos] != ")":
            raise GraphError(f"unbalanced parentheses in {s!r}")
        pos += 1
        children.append((MARK_BOND[mark], child))
    return RootedTree(label, tuple(children)), pos


def canonical_encode(t: RootedTree) -> str:
    return encode_tree(t)


# ---------------------------------------------------------------------------
# Edge and adjacency configurations

EdgeConfig = tuple[str, int, str, int, int]
AdjacencyConfig = tuple[str, str, int]


def _vertex_symbol_key(sym: str, deg: int) -> tuple[tuple[str, int], int]:
    return (element_sort_key(sym), deg)


def make_edge_config(a: str, d: int, b: str, dp: int, m: int) -> EdgeConfig:
    if _vertex_symbol_key(a, d) <= _vertex_symbol_key(b, dp):
        return (a, d, b, dp, m)
    return (b, dp, a, d, m)


def make_adjacency_config(a: str, b: str, m: int) -> AdjacencyConfig:
    if element_sort_key(a) <= element_sort_key(b):
        return (a, b, m)
    return (b, a, m)


def adjacency_of(cfg: EdgeConfig) -> AdjacencyConfig:
    a, _, b, _, m = cfg
    return make_adjacency_config(a, b, m)


def config_str(cfg: EdgeConfig) -> str:
    a, d, b, dp, m = cfg
    return f"({a}{d},{b}{dp},{m})"


def adjacency_str(cfg: AdjacencyConfig) -> str:
    a, b, m = cfg
    return f"({a},{b},{m})"


# ---------------------------------------------------------------------------
# Decomposition


@dataclass(frozen=True)
class FringeTree:
    root: int
    tree: RootedTree  # includes re-attached hydrogens

    @property
    def code(self) -> str:
        return self.tree.code


@dataclass(frozen=True)
class TwoLayeredDecomposition:
    rho: int
    suppressed: SuppressedGraph
    interior_vertices: frozenset[int]
    exterior_vertices: frozenset[int]
    interior_edges: frozenset[tuple[int, int]]
    exterior_edges: frozenset[tuple[int, int]]
    fringe_trees: dict[int, FringeTree]

    def interior_degree(self, v: int) -> int:
        return sum(1 for w in self.suppressed.neighbors(v) if w in self.interior_vertices)


def decompose(g: ChemicalGraph | SuppressedGraph, rho: int) -> TwoLayeredDecomposition:
    """Partition the hydrogen-suppressed graph at branch parameter rho."""
    if rho < 1:
        raise GraphError("rho must be at least 1")
    s = hydrogen_suppress(g) if isinstance(g, ChemicalGraph) else g
    heights, tree_vertices = leaf_strip_heights(s.vertex_ids, s.edge_list)
    exterior = frozenset(v for v in tree_vertices if heights[v] < rho)
    interior = frozenset(v for v in s.vertex_ids if v not in exterior)
    ext_edges = frozenset(
        (u, v) for u, v in s.edge_list if u in exterior or v in exterior
    )
    int_edges = frozenset(e for e in s.edge_list if e not in ext_edges)

    fringe_trees: dict[int, FringeTree] = {}
    for u in sorted(interior):
        fringe_trees[u] = FringeTree(root=u, tree=_build_fringe(s, u, exterior))
    return TwoLayeredDecomposition(
        rho=rho,
        suppressed=s,
        interior_vertices=interior,
        exterior_vertices=exterior,
        interior_edges=int_edges,
        exterior_edges=ext_edges,
        fringe_trees=fringe_trees,
    )


def _build_fringe(s: SuppressedGraph, root: int, exterior: frozenset[int]) -> RootedTree:
    def build(v: int, parent: int | None) -> RootedTree:
        children: list[tuple[int, RootedTree]] = []
        for _ in range(s.h_count.get(v, 0)):
            children.append((1, RootedTree("H")))
        for w, m in sorted(s.neighbors(v).items()):
            if w == parent or w not in exterior:
                continue
            children.append((m, build(w, v)))
        return RootedTree(s.label(v), tuple(children))

    return build(root, None)


def edge_config(dec: TwoLayeredDecomposition, e: tuple[int, int]) -> EdgeConfig:
    """Edge configuration (a d, b d', m) of an interior edge, degrees taken
    in the hydrogen-suppressed graph."""
    u, v = e
    key = (u, v) if u <= v else (v, u)
    if key not in dec.interior_edges:
        raise GraphError(f"edge {e} is not interior")
    s = dec.suppressed
    return make_edge_config(
        s.label(u), s.degree(u), s.label(v), s.degree(v), s.neighbors(u)[v]
    )


def interior_edge_configs(dec: TwoLayeredDecomposition) -> list[EdgeConfig]:
    return [edge_config(dec, e) for e in sorted(dec.interior_edges)]


def link_edge_configs(dec: TwoLayeredDecomposition) -> list[EdgeConfig]:
    out = []
    for e in sorted(dec.suppressed.link_edges):
        out.append(edge_config(dec, e))
    return out


def leaf_edge_adjacency_configs(s: SuppressedGraph) -> list[AdjacencyConfig]:
    """Adjacency configurations of leaf edges, oriented inner-to-leaf.

    A leaf edge is incident to a degree-1 vertex of the suppressed graph;
    the non-leaf endpoint comes first (canonical order when both ends are
    leaves).
    """
    out: list[AdjacencyConfig] = []
    for u, v, m in s.bonds:
        du, dv = s.degree(u), s.degree(v)
        if du != 1 and dv != 1:
            continue
        if du == 1 and dv == 1:
            out.append(make_adjacency_config(s.label(u), s.label(v), m))
        elif dv == 1:
            out.append((s.label(u), s.label(v), m))
        else:
            out.append((s.label(v), s.label(u), m))
    return sorted(out)
