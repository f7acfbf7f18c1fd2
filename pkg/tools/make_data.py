"""One-off generator for the default fringe catalog and reference polymers."""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from corpus import make_polymer  # noqa: E402
from polyinfer.chemgraph import parse_pmg  # noqa: E402
from polyinfer.twolayer import decompose, parse_code  # noqa: E402

# raw (non-canonical) forms; encoded canonically below
CATALOG = [
    "C",
    "C(-H)",
    "C(-H)(-H)",
    "C(-H)(-H)(-H)",
    "O",
    "O(-H)",
    "N(-H)",
    "N(-H)(-H)",
    "S(2)",
    "C(-Cl)",
    "C(=O)",
    "C(-C(-H)(-H)(-H))",
    "C(-H)(-C(-H)(-H)(-H))",
    "C(-O(-H))",
    "C(-C(-H)(-H)(-C(-H)(-H)(-H)))",
    "C(-H)(-H)(-C(-H)(-H)(-H))",
    "C(-H)(-H)(-C(-H)(-H)(-C(-H)(-H)(-H)))",
]

EXAMPLES = {
    1: dict(bridge_a=("C",), bridge_b=("C",)),
    2: dict(bridge_a=("O",), bridge_b=("C", "C"), subst={2: ("C",)}),
    3: dict(bridge_a=("C",), bridge_b=("C", "O"), subst={2: ("C",)}),
    4: dict(bridge_a=("C", "C", "C"), bridge_b=("O",), subst={2: ("Cl",), 9: ("C",)}),
}

if __name__ == "__main__":
    data = ROOT / "src" / "polyinfer" / "data"
    codes = [parse_code(c).code for c in CATALOG]
    assert len(set(codes)) == 17
    lines = ["# default 17-tree fringe catalog (canonical codes, height <= 2)"]
    lines += codes
    (data / "fringe_catalog_17.txt").write_text("\n".join(lines) + "\n")
    print("catalog:", codes)

    for idx, kwargs in EXAMPLES.items():
        text = make_polymer(**kwargs)
        g = parse_pmg(text)
        dec = decompose(g, 2)
        missing = [ft.code for ft in dec.fringe_trees.values() if ft.code not in codes]
        assert not missing, f"example {idx} uses non-catalog fringes: {missing}"
        (data / f"example_polymer_{idx}.pmg").write_text(text)
        print(f"example {idx}: n={g.non_hydrogen_count()}, links={len(g.link_edges)}")
