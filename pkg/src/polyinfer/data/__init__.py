"""Packaged data files: the two-ring demo polymer, the default
fringe-tree catalog and the four reference polymers."""

from __future__ import annotations

from importlib import resources


def _read(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")


def demo_polymer_text() -> str:
    return _read("demo_polymer.pmg")


def fringe_catalog_text() -> str:
    return _read("fringe_catalog_17.txt")


def example_polymer_text(index: int) -> str:
    if index not in (1, 2, 3, 4):
        raise ValueError("example polymer index must be 1..4")
    return _read(f"example_polymer_{index}.pmg")
