"""Rooted-tree domains for categorical attributes.

A taxonomy provides the semantic machinery behind categorical releases:
ancestor sets, a bounded semantic distance between labels, marginality
scores of candidate representatives against a value multiset, and the
least-marginal node (the centroid) of a sample.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping


class TaxonomyError(ValueError):
    """Structurally invalid taxonomy, or a label that is not a node."""


class Taxonomy:
    """Immutable rooted tree over string labels.

    Every node except the root has exactly one parent. Queries are pure;
    the internal pairwise-distance memo only caches deterministic values,
    so concurrent readers always observe identical results.
    """

    __slots__ = ("root", "_parent", "_ancestors", "_depth", "_dist_cache")

    def __init__(self, root: str, parent: Mapping[str, str]) -> None:
        if root in parent:
            raise TaxonomyError(f"root {root!r} must not have a parent")
        self.root = root
        self._parent = dict(parent)
        known = set(self._parent) | {root}
        for child, par in self._parent.items():
            if par not in known:
                raise TaxonomyError(f"parent {par!r} of {child!r} is not a node")
        self._ancestors: dict[str, frozenset[str]] = {root: frozenset({root})}
        self._depth: dict[str, int] = {root: 0}
        for node in self._parent:
            self._resolve(node)
        self._dist_cache: dict[tuple[str, str], float] = {}

    def _resolve(self, node: str) -> None:
        chain: list[str] = []
        on_path: set[str] = set()
        cur = node
        while cur not in self._ancestors:
            if cur in on_path:
                raise TaxonomyError(f"cycle through {cur!r}")
            on_path.add(cur)
            chain.append(cur)
            cur = self._parent[cur]
        anc = self._ancestors[cur]
        depth = self._depth[cur]
        for label in reversed(chain):
            depth += 1
            anc = anc | {label}
            self._ancestors[label] = anc
            self._depth[label] = depth

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(self._ancestors)

    def __contains__(self, label: str) -> bool:
        return label in self._ancestors

    def __len__(self) -> int:
        return len(self._ancestors)

    def ancestors(self, label: str) -> frozenset[str]:
        """Generalization path of `label` up to the root, inclusive of both."""
        try:
            return self._ancestors[label]
        except KeyError:
            raise TaxonomyError(f"label {label!r} is not in the taxonomy") from None

    def depth(self, label: str) -> int:
        self.ancestors(label)
        return self._depth[label]

    def semantic_distance(self, a: str, b: str) -> float:
        """Distance between two labels in [0, 1).

        Defined as log2(1 + d/t) where d counts ancestors of exactly one
        label and t counts ancestors of either. Zero iff the labels are
        equal; symmetric; satisfies the triangle inequality.
        """
        if a == b:
            self.ancestors(a)
            return 0.0
        key = (a, b) if a < b else (b, a)
        hit = self._dist_cache.get(key)
        if hit is not None:
            return hit
        pa = self.ancestors(a)
        pb = self.ancestors(b)
        total = len(pa | pb)
        shared = len(pa & pb)
        value = math.log2(1.0 + (total - shared) / total)
        self._dist_cache[key] = value
        return value


def spanned_subtree(taxonomy: Taxonomy, labels: Iterable[str]) -> frozenset[str]:
    """Nodes of the minimal subtree containing `labels` and their ancestors."""
    distinct = set(labels)
    if not distinct:
        raise TaxonomyError("empty label set")
    out: frozenset[str] = frozenset()
    for label in distinct:
        out |= taxonomy.ancestors(label)
    return out


def marginality(taxonomy: Taxonomy, value_set: Iterable[str], candidate: str) -> float:
    """Sum of semantic distances from `candidate` to each value occurrence.

    Multiset semantics: repeated values contribute once per occurrence.
    Occurrences equal to the candidate contribute zero distance.
    """
    counts = Counter(value_set)
    if not counts:
        raise TaxonomyError("empty value set")
    taxonomy.ancestors(candidate)
    total = 0.0
    for label in sorted(counts):
        total += counts[label] * taxonomy.semantic_distance(candidate, label)
    return total


@dataclass(frozen=True)
class MarginalityTable:
    """Marginality of every distinct value of a multiset, for reuse."""

    value_set: tuple[str, ...]
    scores: Mapping[str, float]


def marginality_table(taxonomy: Taxonomy, value_set: Iterable[str]) -> MarginalityTable:
    values = tuple(value_set)
    if not values:
        raise TaxonomyError("empty value set")
    scores = {label: marginality(taxonomy, values, label) for label in sorted(set(values))}
    return MarginalityTable(values, scores)


def marginality_centroid(taxonomy: Taxonomy, sample: Iterable[str]) -> str:
    """Least marginal node of the subtree spanned by `sample`.

    Ties are broken toward the lexicographically smallest label so the
    result is independent of sample order.
    """
    values = list(sample)
    if not values:
        raise TaxonomyError("empty sample")
    best_label = ""
    best_score = math.inf
    for cand in sorted(spanned_subtree(taxonomy, values)):
        score = marginality(taxonomy, values, cand)
        if score < best_score:
            best_score = score
            best_label = cand
    return best_label


def load_taxonomy(source: str | Path | IO[str]) -> Taxonomy:
    """Parse a taxonomy from an edge list.

    The first non-blank line names the root; every following line holds
    one `parent<TAB>child` edge. The file must describe a single tree.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise TaxonomyError("empty taxonomy file")
    root = lines[0]
    if "\t" in root:
        raise TaxonomyError("first line must name the root, not an edge")
    parent: dict[str, str] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise TaxonomyError(f"line {lineno}: expected 'parent<TAB>child', got {line!r}")
        par, child = parts
        if child == root or child in parent:
            raise TaxonomyError(f"line {lineno}: {child!r} already has a parent")
        parent[child] = par
    return Taxonomy(root, parent)
