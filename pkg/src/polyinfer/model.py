"""Trained model bundle: descriptor registry, min-max maps and hyperplane."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .chemgraph import ChemicalGraph
from .features import DescriptorRegistry, Standardizer, featurize
from .regress import Hyperplane, predict


@dataclass(frozen=True)
class ModelBundle:
    registry: DescriptorRegistry
    standardizer: Standardizer
    hyperplane: Hyperplane
    lam: float

    def predict_graph(
        self, g: ChemicalGraph, covariates: dict[str, float] | None = None
    ) -> tuple[float, tuple[str, ...]]:
        """Original-unit prediction and any out-of-vocabulary configs.

        A non-empty OOV report marks the prediction unreliable: the
        hyperplane has no weight for those configurations.
        """
        fv = featurize(g, self.registry, covariates)
        xs = self.standardizer.transform(fv.values)
        y_std = predict(self.hyperplane, xs)
        return self.standardizer.inverse_value(y_std), fv.oov

    def to_json(self) -> str:
        return json.dumps(
            {
                "registry_digest": self.registry.digest(),
                "registry": json.loads(self.registry.to_json()),
                "standardizer": json.loads(self.standardizer.to_json()),
                "w": self.hyperplane.w.tolist(),
                "b": self.hyperplane.b,
                "lambda": self.lam,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelBundle":
        d = json.loads(text)
        registry = DescriptorRegistry.from_json(json.dumps(d["registry"]))
        if d.get("registry_digest") not in (None, registry.digest()):
            raise ValueError("model file registry digest mismatch")
        import numpy as np

        return cls(
            registry=registry,
            standardizer=Standardizer.from_json(json.dumps(d["standardizer"])),
            hyperplane=Hyperplane(w=np.array(d["w"], dtype=float), b=float(d["b"])),
            lam=float(d["lambda"]),
        )
