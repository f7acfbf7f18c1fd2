"""One-off generator for the shipped two-ring demo polymer (data/demo_polymer.pmg)."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from polyinfer.chemgraph import ChemicalGraph, parse_pmg, serialize_pmg

ELEMENTS = {3: "N", 16: "O", 28: "N"}  # interior non-carbons

INTERIOR_EDGES = [
    # ring A
    (1, 19), (19, 20), (20, 21), (21, 1),
    (20, 2),
    # ring B
    (2, 22), (22, 3), (3, 9), (9, 23), (23, 2),
    # link paths
    (1, 15), (15, 5), (3, 16), (16, 17), (17, 18), (18, 4),
    # ring C
    (4, 5), (5, 6), (6, 24), (24, 7), (7, 8), (8, 4),
    # pendant interior chain and arms
    (9, 10), (10, 11), (11, 12), (12, 13), (13, 14),
    (10, 27), (27, 26),
    (18, 28), (28, 29), (28, 25),
]

LINKS = [(1, 15), (15, 5), (3, 16), (16, 17), (17, 18), (4, 18)]

# (parent interior vertex, exterior id, element, bond multiplicity, h-children ids)
CHAINS = [  # parent -> CH2 -> CH3
    (14, 30, 31), (25, 32, 33), (26, 34, 35), (29, 36, 37), (24, 38, 39), (17, 43, 44),
]
LEAVES = [  # single exterior atoms
    (6, 45, "O", 2), (7, 46, "C", 1), (8, 47, "O", 1), (10, 48, "C", 1),
    (11, 49, "C", 1), (12, 50, "C", 1), (13, 51, "C", 1), (18, 52, "C", 1),
    (19, 53, "C", 1), (21, 54, "C", 1), (27, 55, "C", 1),
]


def build() -> ChemicalGraph:
    atoms: list[tuple[int, str]] = []
    bonds: list[tuple[int, int, int]] = []
    for i in range(1, 30):
        atoms.append((i, ELEMENTS.get(i, "C")))
    for u, v in INTERIOR_EDGES:
        bonds.append((u, v, 1))
    for parent, mid, tip in CHAINS:
        atoms += [(mid, "C"), (tip, "C")]
        bonds += [(parent, mid, 1), (mid, tip, 1)]
    # isopropyl arm on u5
    atoms += [(40, "C"), (41, "C"), (42, "C")]
    bonds += [(5, 40, 1), (40, 41, 1), (40, 42, 1)]
    for parent, w, sym, mult in LEAVES:
        atoms.append((w, sym))
        bonds.append((parent, w, mult))

    # hydrogens fill every remaining valence
    valence = {"H": 1, "C": 4, "N": 3, "O": 2}
    bond_sum = {i: 0 for i, _ in atoms}
    for u, v, m in bonds:
        bond_sum[u] += m
        bond_sum[v] += m
    next_id = 56
    for i, sym in list(atoms):
        for _ in range(valence[sym] - bond_sum[i]):
            atoms.append((next_id, "H"))
            bonds.append((i, next_id, 1))
            next_id += 1

    return ChemicalGraph(
        atoms=tuple(atoms),
        bonds=tuple(bonds),
        link_edges=frozenset(LINKS),
        connecting=(16, 17),
    )


if __name__ == "__main__":
    g = build()
    text = serialize_pmg(g)
    assert parse_pmg(text) == g
    out = Path(__file__).resolve().parents[1] / "src" / "polyinfer" / "data" / "demo_polymer.pmg"
    out.write_text(text)
    print(f"wrote {out}: {len(g.atoms)} atoms, {len(g.bonds)} bonds, {len(g.link_edges)} links")
