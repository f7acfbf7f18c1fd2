"""Descriptor registry and feature vectors for monomer graphs.

The registry is derived deterministically from a training dataset: scalar
descriptors first, then per-key count families in sorted key order.  A
feature vector holds one real per descriptor; configurations that a graph
exhibits but the registry does not know go into an out-of-vocabulary
report instead of the vector.
"""

from __future__ import annotations

import csv
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chemgraph import (
    ChemicalGraph,
    GraphError,
    element_sort_key,
    parse_pmg,
)
from .twolayer import (
    TwoLayeredDecomposition,
    adjacency_of,
    adjacency_str,
    config_str,
    decompose,
    interior_edge_configs,
    leaf_edge_adjacency_configs,
    link_edge_configs,
)

SCALAR_KINDS = ("n", "rank", "n_int", "ms_avg", "n_lnk")
FAMILY_KINDS = ("na", "ns_int", "ec_int", "ec_lnk", "ac_int", "ac_lnk", "ac_lf", "fc", "cov")
# registry layout: scalars and families in this fixed order
KIND_ORDER = ("n", "rank", "n_int", "ms_avg", "na", "ns_int", "ec_int", "ec_lnk", "ac_lf", "fc", "n_lnk", "cov")
REAL_KINDS = {"ms_avg", "cov"}  # everything else is integer-valued


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class Descriptor:
    kind: str
    key: str = ""

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.key}" if self.key else self.kind


@dataclass(frozen=True)
class DescriptorRegistry:
    rho: int
    descriptors: tuple[Descriptor, ...]

    def __len__(self) -> int:
        return len(self.descriptors)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    def integer_indices(self) -> list[int]:
        return [j for j, d in enumerate(self.descriptors) if d.kind not in REAL_KINDS]

    def nonnegative_indices(self) -> list[int]:
        return [j for j, d in enumerate(self.descriptors) if d.kind != "cov"]

    def keys_of(self, kind: str) -> list[str]:
        return [d.key for d in self.descriptors if d.kind == kind]

    def to_json(self) -> str:
        payload = {
            "rho": self.rho,
            "descriptors": [{"kind": d.kind, "key": d.key} for d in self.descriptors],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "DescriptorRegistry":
        payload = json.loads(text)
        return cls(
            rho=int(payload["rho"]),
            descriptors=tuple(Descriptor(d["kind"], d["key"]) for d in payload["descriptors"]),
        )

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


@dataclass
class FeatureVector:
    values: np.ndarray
    registry: DescriptorRegistry
    oov: tuple[str, ...] = ()  # configurations unknown to the registry


# ---------------------------------------------------------------------------
# Dataset


@dataclass(frozen=True)
class DataRecord:
    id: str
    graph: ChemicalGraph
    value: float
    covariates: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Dataset:
    records: tuple[DataRecord, ...]
    covariate_names: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records], dtype=float)


@dataclass(frozen=True)
class EliminationReport:
    eliminated: tuple[tuple[str, str], ...]  # (id, reason)


def stage1_reason(g: ChemicalGraph) -> str | None:
    """Reason to drop a record, or None if it is usable."""
    for i, sym in g.atoms:
        if sym != "H" and g.heavy_neighbor_count(i) > 4:
            return f"atom {i} has {g.heavy_neighbor_count(i)} non-hydrogen neighbors"
    link_ends = {v for e in g.link_edges for v in e}
    if len(link_ends) < 2:
        return "fewer than two link-edge end-vertices"
    return None


def load_dataset(
    graph_dir: str | Path,
    values_csv: str | Path,
    max_abs_charge: int = 0,
) -> tuple[Dataset, EliminationReport]:
    """Read one PMG file per CSV id and apply the stage-1 elimination rules.

    CSV columns: id, value and optionally extra covariate columns (e.g. a
    measurement frequency).  Connectivity failures surface as parse errors
    and eliminate the record rather than aborting the load; max_abs_charge
    relaxes the neutral-molecule valence rule.
    """
    graph_dir = Path(graph_dir)
    rows: list[dict[str, str]] = []
    with open(values_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames or "value" not in reader.fieldnames:
            raise FeatureError("values CSV needs 'id' and 'value' columns")
        covariate_names = tuple(c for c in reader.fieldnames if c not in ("id", "value"))
        rows = list(reader)
    if not rows:
        raise FeatureError("values CSV has no records")

    records: list[DataRecord] = []
    eliminated: list[tuple[str, str]] = []
    for row in rows:
        rid = row["id"]
        path = graph_dir / f"{rid}.pmg"
        if not path.exists():
            raise FeatureError(f"missing graph file {path}")
        try:
            value = float(row["value"])
            covs = {c: float(row[c]) for c in covariate_names}
        except (TypeError, ValueError) as exc:
            raise FeatureError(f"malformed CSV row for id {rid}: {exc}") from exc
        try:
            g = parse_pmg(path.read_text(), max_abs_charge=max_abs_charge)
        except GraphError as exc:
            eliminated.append((rid, str(exc)))
            continue
        reason = stage1_reason(g)
        if reason is not None:
            eliminated.append((rid, reason))
            continue
        records.append(DataRecord(id=rid, graph=g, value=value, covariates=covs))
    if not records:
        raise FeatureError("no record survived stage-1 elimination")
    return Dataset(tuple(records), covariate_names), EliminationReport(tuple(eliminated))


# ---------------------------------------------------------------------------
# Registry construction and featurization


def _graph_counts(dec: TwoLayeredDecomposition) -> dict[str, Counter]:
    s = dec.suppressed
    na = Counter(sym for _, sym in s.atoms)
    for v, h in s.hydrogens:
        if h:
            na["H"] += h
    ns_int = Counter(
        f"({s.label(v)},{s.degree(v)})" for v in dec.interior_vertices
    )
    ec_int = Counter(config_str(c) for c in interior_edge_configs(dec))
    ec_lnk = Counter(config_str(c) for c in link_edge_configs(dec))
    ac_int = Counter(adjacency_str(adjacency_of(c)) for c in interior_edge_configs(dec))
    ac_lnk = Counter(adjacency_str(adjacency_of(c)) for c in link_edge_configs(dec))
    ac_lf = Counter(adjacency_str(c) for c in leaf_edge_adjacency_configs(s))
    fc = Counter(ft.code for ft in dec.fringe_trees.values())
    return {
        "na": na,
        "ns_int": ns_int,
        "ec_int": ec_int,
        "ec_lnk": ec_lnk,
        "ac_int": ac_int,
        "ac_lnk": ac_lnk,
        "ac_lf": ac_lf,
        "fc": fc,
    }


def _sorted_keys(kind: str, keys) -> list[str]:
    if kind == "na":
        return sorted(keys, key=element_sort_key)
    return sorted(keys)


def build_registry(dataset: Dataset, rho: int) -> DescriptorRegistry:
    """Derive the descriptor catalog from a dataset, in fixed kind order
    with sorted keys, so equal datasets give byte-identical registries."""
    if not dataset.records:
        raise FeatureError("empty dataset")
    observed: dict[str, set[str]] = {k: set() for k in FAMILY_KINDS}
    for rec in dataset.records:
        counts = _graph_counts(decompose(rec.graph, rho))
        for kind in counts:
            observed[kind].update(counts[kind].keys())

    descriptors: list[Descriptor] = []
    for kind in KIND_ORDER:
        if kind in ("n", "rank", "n_int", "ms_avg", "n_lnk"):
            descriptors.append(Descriptor(kind))
        elif kind == "cov":
            descriptors.extend(Descriptor("cov", c) for c in dataset.covariate_names)
        else:
            descriptors.extend(
                Descriptor(kind, key) for key in _sorted_keys(kind, observed[kind])
            )
    return DescriptorRegistry(rho=rho, descriptors=tuple(descriptors))


def featurize(
    g: ChemicalGraph,
    registry: DescriptorRegistry,
    covariates: dict[str, float] | None = None,
) -> FeatureVector:
    """Evaluate every registry descriptor on a graph.

    Configurations of g that the registry does not carry are reported as
    out-of-vocabulary rather than failing; their counts do not enter the
    vector.
    """
    dec = decompose(g, registry.rho)
    s = dec.suppressed
    counts = _graph_counts(dec)
    scalars = {
        "n": float(g.non_hydrogen_count()),
        "rank": float(s.rank()),
        "n_int": float(len(dec.interior_vertices)),
        "ms_avg": g.mass_average(),
        "n_lnk": float(len(s.link_edges)),
    }
    values = np.zeros(len(registry), dtype=float)
    for j, d in enumerate(registry.descriptors):
        if d.kind in scalars:
            values[j] = scalars[d.kind]
        elif d.kind == "cov":
            if covariates is None or d.key not in covariates:
                raise FeatureError(f"missing covariate {d.key!r}")
            values[j] = covariates[d.key]
        else:
            values[j] = counts[d.kind].get(d.key, 0)

    oov: list[str] = []
    for kind in ("na", "ns_int", "ec_int", "ec_lnk", "ac_lf", "fc"):
        known = set(registry.keys_of(kind))
        for key in counts[kind]:
            if key not in known:
                oov.append(f"{kind}:{key}")
    return FeatureVector(values=values, registry=registry, oov=tuple(sorted(oov)))


def feature_matrix(
    dataset: Dataset, registry: DescriptorRegistry
) -> tuple[np.ndarray, list[tuple[str, ...]]]:
    rows = []
    oovs = []
    for rec in dataset.records:
        fv = featurize(rec.graph, registry, rec.covariates)
        rows.append(fv.values)
        oovs.append(fv.oov)
    return np.vstack(rows), oovs


# ---------------------------------------------------------------------------
# Min-max standardization


@dataclass(frozen=True)
class Standardizer:
    """Per-descriptor and property min/max maps onto [0, 1].

    Descriptors with max == min are flagged constant and map to 0; the
    MILP later pins their standardized variable instead of dividing by a
    zero range.
    """

    feature_min: np.ndarray
    feature_max: np.ndarray
    value_min: float
    value_max: float

    @property
    def constant_mask(self) -> np.ndarray:
        return self.feature_max <= self.feature_min

    def transform(self, x: np.ndarray) -> np.ndarray:
        span = np.where(self.constant_mask, 1.0, self.feature_max - self.feature_min)
        out = (np.asarray(x, dtype=float) - self.feature_min) / span
        return np.where(self.constant_mask, 0.0, out)

    def transform_value(self, a: float) -> float:
        if self.value_max <= self.value_min:
            raise FeatureError("property range is degenerate")
        return (a - self.value_min) / (self.value_max - self.value_min)

    def inverse_value(self, t: float) -> float:
        return self.value_min + t * (self.value_max - self.value_min)

    def to_json(self) -> str:
        return json.dumps(
            {
                "feature_min": self.feature_min.tolist(),
                "feature_max": self.feature_max.tolist(),
                "value_min": self.value_min,
                "value_max": self.value_max,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Standardizer":
        d = json.loads(text)
        return cls(
            feature_min=np.array(d["feature_min"], dtype=float),
            feature_max=np.array(d["feature_max"], dtype=float),
            value_min=float(d["value_min"]),
            value_max=float(d["value_max"]),
        )


def standardize(dataset: Dataset, registry: DescriptorRegistry) -> tuple[Standardizer, np.ndarray, np.ndarray]:
    """Fit the min-max maps on a dataset; returns (standardizer,
    standardized feature matrix, standardized property values)."""
    X, _ = feature_matrix(dataset, registry)
    a = dataset.values()
    std = Standardizer(
        feature_min=X.min(axis=0),
        feature_max=X.max(axis=0),
        value_min=float(a.min()),
        value_max=float(a.max()),
    )
    Xs = np.vstack([std.transform(row) for row in X])
    ys = np.array([std.transform_value(v) for v in a])
    return std, Xs, ys
