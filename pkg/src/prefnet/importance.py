"""Attribute importance weights and ranks from the regression coefficients.

The magnitude of each linear-regression coefficient, normalized by the
largest magnitude, serves as the attribute's importance weight; ranks
order the weights descending. Coefficients only align with attributes on a
plain (non-expanded) fit, so expanded models are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .ml import LINEAR_REGRESSION, Model


@dataclass(frozen=True)
class FeatureWeight:
    feature: str
    coefficient: float
    weight: float  # |coefficient| / max |coefficient|
    rank: int      # 1 = most important


@dataclass
class ImportanceReport:
    task: str
    network: str
    rows: list[FeatureWeight]  # in feature order

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(row.feature for row in self.rows)

    def ranked(self) -> list[FeatureWeight]:
        return sorted(self.rows, key=lambda r: r.rank)

    def rank_of(self, feature: str) -> int:
        for row in self.rows:
            if row.feature == feature:
                return row.rank
        raise KeyError(f"unknown feature {feature!r}")

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "network": self.network,
            "features": [{"feature": r.feature, "coefficient": r.coefficient,
                          "weight": r.weight, "rank": r.rank} for r in self.rows],
        }


def attribute_weights(model: Model) -> ImportanceReport:
    """Normalized importance weights and ranks for a trained regression model."""
    if model.kind != LINEAR_REGRESSION:
        raise ValueError(f"importance weights need a linear regression model, got {model.kind!r}")
    if model.transform.expanded:
        raise ValueError("importance weights need a non-expanded regression fit")
    coefficients = [float(c) for c in model.params["coef"]]
    magnitudes = [abs(c) for c in coefficients]
    top = max(magnitudes)
    weights = [m / top if top > 0 else 0.0 for m in magnitudes]
    # rank by descending weight; ties keep feature order
    order = sorted(range(len(weights)), key=lambda i: (-weights[i], i))
    ranks = [0] * len(weights)
    for position, i in enumerate(order, start=1):
        ranks[i] = position
    rows = [FeatureWeight(feature=name, coefficient=c, weight=w, rank=r)
            for name, c, w, r in zip(model.feature_names, coefficients, weights, ranks)]
    return ImportanceReport(task=model.task, network=model.network, rows=rows)


def compare_rankings(reports: Mapping[str, ImportanceReport], top_k: int = 5) -> dict:
    """Top-k features per (task, network) cell and their intersection structure."""
    if not reports:
        raise ValueError("no importance reports to compare")
    cells = sorted(reports)
    names = reports[cells[0]].feature_names
    for cell in cells[1:]:
        if reports[cell].feature_names != names:
            raise ValueError(f"cell {cell!r} ranks a different feature set")
    top_sets = {cell: [row.feature for row in reports[cell].ranked()[:top_k]]
                for cell in cells}
    membership: dict[str, list[str]] = {}
    for cell in cells:
        for feature in top_sets[cell]:
            membership.setdefault(feature, []).append(cell)
    shared = sorted(f for f, in_cells in membership.items() if len(in_cells) == len(cells))
    return {
        "top_k": top_k,
        "cells": top_sets,
        "membership": dict(sorted(membership.items())),
        "shared_by_all": shared,
    }
