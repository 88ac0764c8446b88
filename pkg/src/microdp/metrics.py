"""Utility metrics comparing an original dataset against its release.

Three views of distortion: per-value relative error (with a sanity bound
so near-zero originals cannot blow up the ratio), the relative change of
each numeric attribute's variance, and the Jensen-Shannon divergence of
per-attribute histograms.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data import CATEGORICAL, NUMERIC, DataError, Dataset


@dataclass(frozen=True)
class MetricConfig:
    """Knobs shared by the metric functions.

    `sanity_divisor` sets the relative-error floor to domain width / that
    value. `numeric_bins` is the histogram resolution for continuous
    attributes; attributes named in `discrete` get one bin per distinct
    value instead (categorical attributes always do).
    """

    sanity_divisor: float = 100.0
    numeric_bins: int = 100
    discrete: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class UtilityReport:
    """Bundle of all metric values for one release."""

    re_per_attribute: Mapping[str, float]
    re_dataset: float
    jsd_per_attribute: Mapping[str, float]
    jsd_dataset: float
    variance_delta_per_attribute: Mapping[str, float | None]
    params: Mapping[str, object]

    def to_json_dict(self) -> dict:
        return {
            "re_per_attribute": dict(self.re_per_attribute),
            "re_dataset": self.re_dataset,
            "jsd_per_attribute": dict(self.jsd_per_attribute),
            "jsd_dataset": self.jsd_dataset,
            "variance_delta_per_attribute": dict(self.variance_delta_per_attribute),
            "params": dict(self.params),
        }


def _check_comparable(original: Dataset, masked: Dataset) -> None:
    if original.schema.names != masked.schema.names:
        raise DataError("datasets have different attributes")
    if original.n != masked.n:
        raise DataError(f"record counts differ: {original.n} vs {masked.n}")
    if original.n == 0:
        raise DataError("metrics are undefined on an empty dataset")


def relative_error(
    original: Dataset,
    masked: Dataset,
    cfg: MetricConfig = MetricConfig(),
) -> tuple[dict[str, float], float]:
    """Mean per-value relative error, per attribute and overall.

    Numeric values score |a - a'| / max(bound, |a|) with
    bound = (upper - lower) / sanity_divisor; categorical values score
    their semantic distance, already in [0, 1). The dataset figure is the
    mean of the attribute means.
    """
    _check_comparable(original, masked)
    per_attr: dict[str, float] = {}
    for attr in original.schema:
        a = original.column(attr.name)
        b = masked.column(attr.name)
        if attr.kind == NUMERIC:
            bound = attr.sensitivity / cfg.sanity_divisor
            errors = np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(bound, np.abs(a))
            per_attr[attr.name] = float(errors.mean())
        else:
            taxonomy = original.schema.taxonomy_for(attr.name)
            total = sum(taxonomy.semantic_distance(x, y) for x, y in zip(a, b))
            per_attr[attr.name] = total / len(a)
    return per_attr, float(np.mean(list(per_attr.values())))


def variance_delta(original: Dataset, masked: Dataset) -> dict[str, float | None]:
    """Relative variance change per numeric attribute.

    |var(masked) - var(original)| / var(original) with population
    variances on both sides. Attributes whose original variance is zero
    get None: the ratio is undefined there.
    """
    _check_comparable(original, masked)
    out: dict[str, float | None] = {}
    for attr in original.schema:
        if attr.kind != NUMERIC:
            continue
        base = float(np.var(np.asarray(original.column(attr.name))))
        new = float(np.var(np.asarray(masked.column(attr.name))))
        out[attr.name] = None if base == 0.0 else abs(new - base) / base
    return out


def jensen_shannon(p: np.ndarray, q: np.ndarray) -> float:
    """Base-2 JSD of two probability vectors; 0*log(0/x) counts as 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mid = 0.5 * (p + q)

    def half(dist: np.ndarray) -> float:
        mask = dist > 0
        return float(np.sum(dist[mask] * np.log2(dist[mask] / mid[mask])))

    return 0.5 * half(p) + 0.5 * half(q)


def _histogram(attr, column, support, cfg: MetricConfig) -> np.ndarray:
    if support is None:
        clipped = np.clip(np.asarray(column), attr.lower, attr.upper)
        counts, _ = np.histogram(clipped, bins=cfg.numeric_bins, range=(attr.lower, attr.upper))
        counts = counts.astype(float)
    else:
        counter = Counter(column)
        counts = np.array([counter.get(v, 0) for v in support], dtype=float)
    return counts / counts.sum()


def jsd(
    original: Dataset,
    masked: Dataset,
    cfg: MetricConfig = MetricConfig(),
) -> tuple[dict[str, float], float]:
    """Histogram divergence per attribute, in [0, 1], and its mean.

    Continuous attributes use `numeric_bins` equal-width bins over the
    attribute domain, with out-of-domain values counted in the nearest
    edge bin. Discrete and categorical attributes use one bin per value
    observed in either dataset.
    """
    _check_comparable(original, masked)
    per_attr: dict[str, float] = {}
    for attr in original.schema:
        a = original.column(attr.name)
        b = masked.column(attr.name)
        if attr.kind == NUMERIC and attr.name not in cfg.discrete:
            support = None
        else:
            support = sorted(set(a) | set(b))
        p = _histogram(attr, a, support, cfg)
        q = _histogram(attr, b, support, cfg)
        per_attr[attr.name] = jensen_shannon(p, q)
    return per_attr, float(np.mean(list(per_attr.values())))
