"""Release mechanisms: calibrated noise on top of microaggregation.

The main release microaggregates each attribute with individual ranking
and perturbs each cluster centroid once, so every record of a cluster
receives the same draw. One changed record moves the centroid sequence
by at most delta/k in L1, which is why the per-attribute Laplace scale
is delta / (k * epsilon_attr); fresh noise per record would multiply the
effective sensitivity by k and break the guarantee. Under an m-attribute
budget each attribute runs with epsilon_total / m.

Baselines: `plain_laplace_release` perturbs raw records (scale
m * delta / epsilon_total), `mv_dp_release` reuses one record-level
partition for all attributes (scale (n/k) * delta / (k * epsilon_total)),
and the `*_only` variants release bare centroids without noise.

Randomness: every attribute draws from its own substream seeded by
(seed, attribute index), so results do not depend on attribute evaluation
order and identical inputs reproduce byte-identical releases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .data import CATEGORICAL, NUMERIC, Dataset, NeighborPair
from .taxonomy import Taxonomy, marginality, spanned_subtree

METHODS = ("ir-dp", "plain-laplace", "mv-dp", "ir-only", "mv-only")


@dataclass(frozen=True)
class PrivacyBudget:
    """Total epsilon and the attribute count it is split across."""

    epsilon_total: float
    m: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon_total) and self.epsilon_total > 0):
            raise ValueError(f"epsilon_total must be positive and finite, got {self.epsilon_total}")
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")

    @property
    def epsilon_per_attribute(self) -> float:
        return self.epsilon_total / self.m


@dataclass(frozen=True)
class MechanismConfig:
    """Everything needed to reproduce one release."""

    method: str
    k: int
    budget: PrivacyBudget
    seed: int
    clamp: bool = True

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def effective_k(self) -> int:
        """plain-laplace has no clustering; k is treated as 1 there."""
        return 1 if self.method == "plain-laplace" else self.k


def attribute_substream(seed: int, attribute_index: int) -> np.random.Generator:
    """Independent generator for one attribute of one release."""
    return np.random.default_rng([int(seed), int(attribute_index)])


def laplace_from_uniform(u: np.ndarray | float, scale: float) -> np.ndarray | float:
    """Inverse-CDF transform of uniform draws in [0, 1) to Laplace(scale).

    A single uniform value maps deterministically to a single Laplace
    value (u = 0.5 maps to exactly 0), which keeps noise streams
    reproducible across platforms for a fixed generator sequence.
    """
    if not (math.isfinite(scale) and scale > 0):
        raise ValueError(f"scale must be positive and finite, got {scale}")
    u = np.asarray(u, dtype=float)
    u = np.where(u == 0.0, 2.0 ** -53, u)
    shifted = u - 0.5
    out = -scale * np.sign(shifted) * np.log1p(-2.0 * np.abs(shifted))
    return out if out.ndim else float(out)


def laplace_sample(scale: float, rng: np.random.Generator) -> float:
    """One Laplace(scale) draw consuming exactly one uniform."""
    return float(laplace_from_uniform(rng.random(), scale))


def noise_scale(
    method: str,
    *,
    delta: float,
    budget: PrivacyBudget,
    k: int = 1,
    n: int | None = None,
) -> float:
    """Laplace scale used by `method` for an attribute of width `delta`.

    ir-dp divides the per-attribute budget by k (centroid sensitivity
    delta/k); plain-laplace carries full record sensitivity; mv-dp pays
    for all n/k centroids of the shared partition at once. The noiseless
    baselines return 0.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if method == "ir-dp":
        return delta / (k * budget.epsilon_per_attribute)
    if method == "plain-laplace":
        return delta / budget.epsilon_per_attribute
    if method == "mv-dp":
        if n is None:
            raise ValueError("mv-dp scale needs the record count n")
        return (n / k) * delta / (k * budget.epsilon_total)
    if method in ("ir-only", "mv-only"):
        return 0.0
    raise ValueError(f"unknown method {method!r}")


def exponential_mechanism_centroid(
    taxonomy: Taxonomy,
    cluster_values: Sequence[str],
    epsilon: float,
    sensitivity_q: float,
    rng: np.random.Generator,
    candidates: Iterable[str] | None = None,
) -> str:
    """Draw a centroid label with probability falling off in marginality.

    Candidates default to the subtree spanned by the cluster; a fixed
    candidate set can be supplied instead (the per-record baseline uses
    the full taxonomy). Quality of a candidate is the negated marginality
    against the cluster multiset, and a label is drawn with probability
    proportional to exp(epsilon * quality / (2 * sensitivity_q)).
    """
    values = list(cluster_values)
    if not values:
        raise ValueError("empty cluster")
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    if sensitivity_q <= 0:
        raise ValueError(f"sensitivity_q must be positive, got {sensitivity_q}")
    cands = sorted(candidates) if candidates is not None else sorted(spanned_subtree(taxonomy, values))
    scores = np.array([-marginality(taxonomy, values, c) for c in cands])
    logits = epsilon * scores / (2.0 * sensitivity_q)
    logits -= logits.max()
    weights = np.exp(logits)
    cdf = np.cumsum(weights / weights.sum())
    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
    return cands[min(idx, len(cands) - 1)]


def _clamp(values: np.ndarray, lower: float, upper: float, clamp: bool) -> np.ndarray:
    return np.clip(values, lower, upper) if clamp else values


def ir_dp_release(
    data: Dataset,
    k: int,
    budget: PrivacyBudget,
    seed: int,
    clamp: bool = True,
) -> Dataset:
    """Individual-ranking release with per-cluster calibrated noise.

    Numeric attributes add one shared Laplace draw per cluster at scale
    delta / (k * epsilon_attr); categorical attributes draw one label per
    cluster through the exponential mechanism. Record order is preserved.
    """
    from .microagg import individual_ranking

    released: list[np.ndarray | tuple] = []
    for index, attr in enumerate(data.schema):
        rng = attribute_substream(seed, index)
        column = data.column(attr.name)
        plan = individual_ranking(
            column, k,
            taxonomy=None if attr.kind == NUMERIC else data.schema.taxonomy_for(attr.name),
            attribute=attr.name,
        )
        if attr.kind == NUMERIC:
            scale = noise_scale("ir-dp", delta=attr.sensitivity, budget=budget, k=k)
            draws = laplace_from_uniform(rng.random(plan.n_clusters), scale)
            values = np.asarray(plan.centroids)[plan.assignments] + draws[plan.assignments]
            released.append(_clamp(values, attr.lower, attr.upper, clamp))
        else:
            taxonomy = data.schema.taxonomy_for(attr.name)
            starts = np.concatenate(([0], np.cumsum(plan.sizes)))
            labels = []
            for cid in range(plan.n_clusters):
                members = [column[i] for i in plan.sorted_indices[starts[cid]:starts[cid + 1]]]
                labels.append(
                    exponential_mechanism_centroid(
                        taxonomy, members, budget.epsilon_per_attribute, 1.0, rng
                    )
                )
            released.append(tuple(labels[cid] for cid in plan.assignments))
    return data.with_columns(released)


def plain_laplace_release(
    data: Dataset,
    budget: PrivacyBudget,
    seed: int,
    clamp: bool = True,
) -> Dataset:
    """Record-level baseline without microaggregation.

    Numeric attributes receive an independent Laplace draw per record at
    scale m * delta / epsilon_total. Categorical attributes pass each
    record's label through the exponential mechanism over the full
    taxonomy with the same per-attribute budget.
    """
    released: list[np.ndarray | tuple] = []
    for index, attr in enumerate(data.schema):
        rng = attribute_substream(seed, index)
        column = data.column(attr.name)
        if attr.kind == NUMERIC:
            scale = noise_scale("plain-laplace", delta=attr.sensitivity, budget=budget)
            draws = laplace_from_uniform(rng.random(data.n), scale)
            released.append(_clamp(np.asarray(column) + draws, attr.lower, attr.upper, clamp))
        else:
            taxonomy = data.schema.taxonomy_for(attr.name)
            all_nodes = sorted(taxonomy.nodes)
            released.append(tuple(
                exponential_mechanism_centroid(
                    taxonomy, [label], budget.epsilon_per_attribute, 1.0, rng,
                    candidates=all_nodes,
                )
                for label in column
            ))
    return data.with_columns(released)


def mv_dp_release(
    data: Dataset,
    k: int,
    budget: PrivacyBudget,
    seed: int,
    clamp: bool = True,
) -> Dataset:
    """Multivariate baseline: one record partition, noisier centroids.

    All attributes share the record-level clusters, so the whole released
    table moves when one record changes and each attribute pays scale
    (n/k) * delta / (k * epsilon_total). Numeric data only.
    """
    from .microagg import multivariate_baseline

    plan = multivariate_baseline(data, k)
    released = []
    for index, attr in enumerate(data.schema):
        rng = attribute_substream(seed, index)
        scale = noise_scale("mv-dp", delta=attr.sensitivity, budget=budget, k=k, n=data.n)
        draws = laplace_from_uniform(rng.random(plan.n_clusters), scale)
        values = plan.centroids[:, index][plan.assignments] + draws[plan.assignments]
        released.append(_clamp(values, attr.lower, attr.upper, clamp))
    return data.with_columns(released)


def ir_only_release(data: Dataset, k: int) -> Dataset:
    """Noise-free individual ranking; utility floor for the main method."""
    from .microagg import individual_ranking

    released: list[np.ndarray | tuple] = []
    for attr in data.schema:
        column = data.column(attr.name)
        plan = individual_ranking(
            column, k,
            taxonomy=None if attr.kind == NUMERIC else data.schema.taxonomy_for(attr.name),
            attribute=attr.name,
        )
        if attr.kind == NUMERIC:
            released.append(np.asarray(plan.centroids)[plan.assignments])
        else:
            released.append(tuple(plan.centroids[cid] for cid in plan.assignments))
    return data.with_columns(released)


def mv_only_release(data: Dataset, k: int) -> Dataset:
    """Noise-free multivariate microaggregation; numeric data only."""
    from .microagg import multivariate_baseline

    plan = multivariate_baseline(data, k)
    released = [
        plan.centroids[:, index][plan.assignments]
        for index in range(data.m)
    ]
    return data.with_columns(released)


@dataclass(frozen=True)
class BucketStat:
    """Empirical counts of one outcome bucket on both neighbor sides."""

    outcome: Hashable
    count_base: int
    count_modified: int
    log_ratio: float
    slack: float
    flagged: bool


@dataclass(frozen=True)
class DpCheckReport:
    epsilon: float
    trials: int
    max_log_ratio: float
    ok: bool
    buckets: tuple[BucketStat, ...]


def dp_property_check(
    mechanism: Callable[[Dataset, np.random.Generator], Hashable],
    neighbor: NeighborPair,
    epsilon: float,
    trials: int,
    seed: int = 0,
) -> DpCheckReport:
    """Frequency-based check of the epsilon-DP inequality.

    Runs `mechanism` `trials` times on both neighbor datasets, estimates
    the probability of every outcome bucket and compares the absolute
    log-ratios against epsilon plus a three-sigma sampling slack. Buckets
    observed on only one side are flagged when the missing side would
    have been expected at least 10 times under the epsilon bound. Only
    sound for mechanisms with a modest discrete outcome space; bucket
    continuous outputs coarsely before counting.
    """
    if trials < 1000:
        raise ValueError(f"at least 1000 trials are needed for a meaningful check, got {trials}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    counts_base: dict[Hashable, int] = {}
    counts_mod: dict[Hashable, int] = {}
    rng_base = np.random.default_rng([int(seed), 0])
    rng_mod = np.random.default_rng([int(seed), 1])
    for _ in range(trials):
        out = mechanism(neighbor.base, rng_base)
        counts_base[out] = counts_base.get(out, 0) + 1
    for _ in range(trials):
        out = mechanism(neighbor.modified, rng_mod)
        counts_mod[out] = counts_mod.get(out, 0) + 1
    buckets = []
    for outcome in sorted(set(counts_base) | set(counts_mod), key=repr):
        c1 = counts_base.get(outcome, 0)
        c2 = counts_mod.get(outcome, 0)
        if c1 > 0 and c2 > 0:
            ratio = abs(math.log(c1 / c2))
            slack = 3.0 * math.sqrt(1.0 / c1 + 1.0 / c2)
            flagged = ratio > epsilon + slack
        else:
            ratio = math.inf
            slack = 0.0
            flagged = max(c1, c2) * math.exp(-epsilon) >= 10.0
        buckets.append(BucketStat(outcome, c1, c2, ratio, slack, flagged))
    finite = [b.log_ratio for b in buckets if b.log_ratio != math.inf]
    flagged_any = any(b.flagged for b in buckets)
    if any(b.flagged and b.log_ratio == math.inf for b in buckets):
        max_log_ratio = math.inf
    else:
        max_log_ratio = max(finite) if finite else 0.0
    return DpCheckReport(
        epsilon=epsilon,
        trials=trials,
        max_log_ratio=max_log_ratio,
        ok=not flagged_any,
        buckets=tuple(buckets),
    )
