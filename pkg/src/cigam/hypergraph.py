"""Hypergraph data model, ingestion, and preprocessing filters.

Nodes are dense integer indices 0..n-1; original labels are kept on the
side so downstream reports can use them.  All operations are pure: they
return new Hypergraph values and never mutate their input.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class HypergraphError(ValueError):
    pass


class ParseError(HypergraphError):
    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class Hypergraph:
    """Immutable hypergraph on nodes 0..n-1 with set-semantics edges.

    Invariants: every edge tuple is strictly increasing, all indices are
    < n, there is at least one edge, and every order k satisfies
    2 <= k <= n.
    """

    n: int
    edges: frozenset
    labels: tuple = None

    def __post_init__(self):
        if self.n < 2:
            raise HypergraphError(f"need at least 2 nodes, got n={self.n}")
        if not self.edges:
            raise HypergraphError("empty edge set")
        if self.labels is not None and len(self.labels) != self.n:
            raise HypergraphError("label map size does not match n")
        for e in self.edges:
            if len(e) < 2:
                raise HypergraphError(f"edge {e} has order < 2")
            if any(e[i] >= e[i + 1] for i in range(len(e) - 1)):
                raise HypergraphError(f"edge {e} is not strictly increasing")
            if e[0] < 0 or e[-1] >= self.n:
                raise HypergraphError(f"edge {e} has node index outside [0, {self.n})")

    @classmethod
    def from_edges(cls, edges: Iterable[Sequence[int]], n: int = None,
                   labels: Sequence[str] = None) -> "Hypergraph":
        """Build from raw integer edges, sorting within each edge."""
        canon = frozenset(tuple(sorted(set(e))) for e in edges)
        canon = frozenset(e for e in canon if len(e) >= 2)
        if not canon:
            raise HypergraphError("empty edge set")
        if n is None:
            n = 1 + max(e[-1] for e in canon)
        return cls(n=n, edges=canon,
                   labels=tuple(labels) if labels is not None else None)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def k_min(self) -> int:
        return min(len(e) for e in self.edges)

    @cached_property
    def k_max(self) -> int:
        return max(len(e) for e in self.edges)

    @cached_property
    def sorted_edges(self) -> tuple:
        """Edges in a deterministic order: by size, then lexicographic."""
        return tuple(sorted(self.edges, key=lambda e: (len(e), e)))

    @cached_property
    def edges_by_order(self) -> dict:
        """Dense arrays per order k: shape (m_k, k), rows sorted."""
        groups = {}
        for e in self.sorted_edges:
            groups.setdefault(len(e), []).append(e)
        return {k: np.asarray(rows, dtype=np.int64) for k, rows in groups.items()}

    def label_of(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def all_labels(self) -> tuple:
        return self.labels if self.labels is not None else tuple(str(i) for i in range(self.n))


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-node feature matrix aligned with a Hypergraph's node indexing."""

    values: np.ndarray
    mode: str = "raw"  # raw | log1p-minmax | zscore
    columns: tuple = None

    def __post_init__(self):
        x = np.asarray(self.values, dtype=float)
        if x.ndim != 2:
            raise HypergraphError("feature matrix must be 2-D")
        if not np.all(np.isfinite(x)):
            raise HypergraphError("feature matrix contains non-finite entries")
        object.__setattr__(self, "values", x)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# ingestion


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8"), True
    return source, False


def _relabel(raw_edges):
    """Map string labels to dense indices in order of first appearance."""
    index = {}
    edges = []
    for e in raw_edges:
        idx = []
        for lab in e:
            if lab not in index:
                index[lab] = len(index)
            idx.append(index[lab])
        edges.append(tuple(sorted(idx)))
    labels = tuple(sorted(index, key=index.get))
    return edges, labels


def _canonical_edge(tokens, line_no, strict):
    uniq = sorted(set(tokens))
    if strict and len(uniq) != len(tokens):
        raise ParseError(f"repeated node within hyperedge {tokens}", line_no)
    return tuple(uniq)


def load_edge_list(source, strict: bool = False) -> Hypergraph:
    """Read one whitespace-separated hyperedge per line; '#' lines ignored.

    Repeated nodes inside an edge are collapsed unless strict=True, in
    which case they are an error.  Singleton edges are dropped; duplicate
    edges are kept once.
    """
    fh, owned = _open_text(source)
    raw = []
    try:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            raw.append(_canonical_edge(tokens, line_no, strict))
    finally:
        if owned:
            fh.close()
    raw = [e for e in raw if len(e) >= 2]
    if not raw:
        raise ParseError("no hyperedges of order >= 2 found")
    edges, labels = _relabel(raw)
    return Hypergraph.from_edges(edges, n=len(labels), labels=labels)


def load_simplicial(nverts_source, simplices_source, strict: bool = False) -> Hypergraph:
    """Read the parallel nverts/simplices format (orders + flattened nodes)."""
    fh_n, owned_n = _open_text(nverts_source)
    fh_s, owned_s = _open_text(simplices_source)
    try:
        sizes = []
        for line_no, line in enumerate(fh_n, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                sizes.append(int(s))
            except ValueError:
                raise ParseError(f"bad hyperedge size {s!r}", line_no) from None
        flat = [line.strip() for line in fh_s if line.strip()]
    finally:
        if owned_n:
            fh_n.close()
        if owned_s:
            fh_s.close()
    if sum(sizes) != len(flat):
        raise ParseError(
            f"size mismatch: nverts sums to {sum(sizes)} but {len(flat)} node entries given")
    raw, at = [], 0
    for pos, k in enumerate(sizes, start=1):
        if k < 1:
            raise ParseError(f"hyperedge {pos} has nonpositive size {k}", pos)
        raw.append(_canonical_edge(flat[at:at + k], pos, strict))
        at += k
    raw = [e for e in raw if len(e) >= 2]
    if not raw:
        raise ParseError("no hyperedges of order >= 2 found")
    edges, labels = _relabel(raw)
    return Hypergraph.from_edges(edges, n=len(labels), labels=labels)


def load_hyperedges(source, format: str = "edge-list", strict: bool = False) -> Hypergraph:
    """Dispatch loader.

    format="edge-list": `source` is a path or text stream.
    format="simplicial-triple": `source` is a base path <name> (reads
    <name>-nverts.txt and <name>-simplices.txt) or a (nverts, simplices)
    pair of paths/streams.
    """
    if format == "edge-list":
        return load_edge_list(source, strict=strict)
    if format == "simplicial-triple":
        if isinstance(source, (tuple, list)) and len(source) == 2:
            return load_simplicial(source[0], source[1], strict=strict)
        base = str(source)
        return load_simplicial(base + "-nverts.txt", base + "-simplices.txt", strict=strict)
    raise ValueError(f"unknown format {format!r}")


def dump_edge_list(H: Hypergraph, sink) -> None:
    """Write the edge list with original labels, one edge per line."""
    fh, owned = (open(sink, "w", encoding="utf-8"), True) if isinstance(sink, (str, Path)) \
        else (sink, False)
    try:
        for e in H.sorted_edges:
            fh.write(" ".join(H.label_of(i) for i in e) + "\n")
    finally:
        if owned:
            fh.close()


# ---------------------------------------------------------------------------
# basic statistics and filters


def degree_vector(H: Hypergraph) -> np.ndarray:
    """deg(v) = number of hyperedges containing v."""
    deg = np.zeros(H.n, dtype=np.int64)
    for arr in H.edges_by_order.values():
        np.add.at(deg, arr.ravel(), 1)
    return deg


def _induced(H: Hypergraph, keep: np.ndarray) -> Hypergraph:
    """Sub-hypergraph on `keep` (boolean mask); edges with any dropped node vanish."""
    old_ids = np.flatnonzero(keep)
    remap = -np.ones(H.n, dtype=np.int64)
    remap[old_ids] = np.arange(len(old_ids))
    edges = []
    for e in H.edges:
        if all(keep[v] for v in e):
            edges.append(tuple(int(remap[v]) for v in e))
    if not edges:
        raise HypergraphError("filter produced an empty hypergraph")
    labels = tuple(H.label_of(int(v)) for v in old_ids)
    return Hypergraph.from_edges(edges, n=len(old_ids), labels=labels)


def connected_components(H: Hypergraph) -> list:
    """Node sets of the components of the node-edge incidence structure."""
    parent = list(range(H.n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in H.edges:
        r = find(e[0])
        for v in e[1:]:
            rv = find(v)
            if rv != r:
                parent[rv] = r
    groups = {}
    for v in range(H.n):
        groups.setdefault(find(v), []).append(v)
    return list(groups.values())


def largest_connected_component(H: Hypergraph) -> Hypergraph:
    """Induce on the largest component; ties broken by smallest minimum label."""
    comps = connected_components(H)
    best_size = max(len(c) for c in comps)
    tied = [c for c in comps if len(c) == best_size]
    best = min(tied, key=lambda c: min(H.label_of(v) for v in c))
    keep = np.zeros(H.n, dtype=bool)
    keep[best] = True
    return _induced(H, keep)


def degree_threshold_filter(H: Hypergraph, delta: int = 4) -> Hypergraph:
    """Single-pass removal of nodes with degree < delta.

    Edges touching a removed node are dropped entirely.  Raises if the
    result is empty.
    """
    if delta < 1:
        raise ValueError("delta must be >= 1")
    keep = degree_vector(H) >= delta
    if keep.all():
        return H
    return _induced(H, keep)


def k_core_filter(H: Hypergraph, delta: int = 2) -> Hypergraph:
    """Peel nodes with degree < delta (dropping their edges) to a fixed point."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    cur = H
    while True:
        keep = degree_vector(cur) >= delta
        if keep.all():
            return cur
        cur = _induced(cur, keep)


def project_to_graph(H: Hypergraph) -> Hypergraph:
    """Replace each hyperedge by its clique of 2-subsets."""
    pairs = set()
    for e in H.edges:
        pairs.update(combinations(e, 2))
    return Hypergraph(n=H.n, edges=frozenset(pairs), labels=H.labels)


# ---------------------------------------------------------------------------
# features


def normalize_features(X, mode: str, columns=None) -> FeatureMatrix:
    """Normalize a raw feature matrix.

    mode="exogenous": log(1+x) then per-column min-max into [0, 1]
    (requires nonnegative inputs; constant columns map to 0).
    mode="endogenous": per-column Z-score, std treated as 1 when constant.
    """
    x = np.asarray(X, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if not np.all(np.isfinite(x)):
        raise HypergraphError("non-finite feature values")
    if mode == "exogenous":
        if np.any(x < 0):
            raise HypergraphError("exogenous normalization requires nonnegative values")
        y = np.log1p(x)
        lo, hi = y.min(axis=0), y.max(axis=0)
        span = hi - lo
        span[span == 0] = 1.0
        out = (y - lo) / span
        return FeatureMatrix(out, mode="log1p-minmax", columns=columns)
    if mode == "endogenous":
        mu = x.mean(axis=0)
        sd = x.std(axis=0)
        sd[sd == 0] = 1.0
        return FeatureMatrix((x - mu) / sd, mode="zscore", columns=columns)
    raise ValueError(f"unknown normalization mode {mode!r}")


def load_features(source, H: Hypergraph) -> FeatureMatrix:
    """Read `node,<f1>,...,<fd>` CSV aligned to H; missing graph nodes error."""
    fh, owned = _open_text(source)
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "node":
            raise ParseError("feature CSV must start with a 'node' header column")
        cols = tuple(c.strip() for c in header[1:])
        rows = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(cols) + 1:
                raise ParseError(f"expected {len(cols) + 1} fields, got {len(row)}", line_no)
            try:
                rows[row[0].strip()] = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise ParseError(str(exc), line_no) from None
    finally:
        if owned:
            fh.close()
    values = np.empty((H.n, len(cols)), dtype=float)
    missing = []
    for i in range(H.n):
        lab = H.label_of(i)
        if lab not in rows:
            missing.append(lab)
            continue
        values[i] = rows[lab]
    if missing:
        raise HypergraphError(f"feature file is missing nodes: {missing[:10]}")
    return FeatureMatrix(values, mode="raw", columns=cols)
