"""Sufficient statistics for the core-periphery hypergraph model.

Given a strictly ordered rank vector, each hyperedge is classified by
(order k, sorted position i of its top-rank node, layer l of its
bottom-rank node).  Present-edge counts and complement block capacities
are computed exactly; capacities use arbitrary-precision integers because
C(n, k-1) overflows 64-bit at realistic scales and the telescoped
difference would cancel catastrophically in floating point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .hypergraph import Hypergraph


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class RankVector:
    """Per-node prestige values in [0, 1] plus their strict ordering.

    Ties are broken by ascending node index, so `order` is always a
    well-defined permutation: order[j] = node at sorted position j,
    pos[v] = sorted position of node v.
    """

    r: np.ndarray
    order: np.ndarray
    pos: np.ndarray

    @classmethod
    def from_values(cls, values) -> "RankVector":
        r = np.asarray(values, dtype=float)
        if r.ndim != 1:
            raise PartitionError("rank vector must be 1-D")
        if not np.all(np.isfinite(r)) or r.min() < 0.0 or r.max() > 1.0:
            raise PartitionError("ranks must be finite values in [0, 1]")
        n = len(r)
        order = np.lexsort((np.arange(n), -r))
        pos = np.empty(n, dtype=np.int64)
        pos[order] = np.arange(n)
        return cls(r=r, order=order, pos=pos)

    @property
    def n(self) -> int:
        return len(self.r)

    @cached_property
    def sorted_values(self) -> np.ndarray:
        return self.r[self.order]


@dataclass(frozen=True)
class LayerConfig:
    """Rank-interval breakpoints H_1 <= ... <= H_L with H_L = 1."""

    H: tuple

    def __post_init__(self):
        H = tuple(float(h) for h in self.H)
        if len(H) < 1:
            raise PartitionError("need at least one layer")
        if H[0] <= 0.0:
            raise PartitionError("H_1 must be positive")
        if any(H[i] > H[i + 1] for i in range(len(H) - 1)):
            raise PartitionError("breakpoints must be nondecreasing")
        if H[-1] != 1.0:
            raise PartitionError("last breakpoint must equal 1")
        object.__setattr__(self, "H", H)

    @property
    def L(self) -> int:
        return len(self.H)

    @classmethod
    def single(cls) -> "LayerConfig":
        return cls((1.0,))


class BinomialTable:
    """Exact C(j, c) for 0 <= j <= n_max, 0 <= c <= c_max, via Pascal columns."""

    def __init__(self, n_max: int, c_max: int):
        self.n_max = n_max
        self.c_max = c_max
        cols = [[1] * (n_max + 1)]  # C(j, 0) = 1
        for c in range(1, c_max + 1):
            prev = cols[c - 1]
            col = [0] * (n_max + 1)
            for j in range(1, n_max + 1):
                col[j] = col[j - 1] + prev[j - 1]  # C(j,c) = C(j-1,c) + C(j-1,c-1)
            cols.append(col)
        self._cols = cols

    def comb(self, j: int, c: int) -> int:
        if c < 0 or j < 0 or j < c:
            return 0
        return self._cols[c][j]


@dataclass(frozen=True)
class LayerAssignment:
    """Layer per sorted position, plus the contiguous span of each layer.

    layers[j] is the 0-based layer of the node at sorted position j and is
    nondecreasing in j.  start[l]..end[l] is the (inclusive) span of layer
    l in sorted positions; start > end marks an empty layer.
    """

    rv: RankVector
    cfg: LayerConfig
    layers: np.ndarray
    start: np.ndarray
    end: np.ndarray

    def j_min(self, i: int, l: int) -> int:
        return max(int(self.start[l]), i + 1)

    def j_max(self, i: int, l: int) -> int:
        return int(self.end[l])


def assign_layers(rv: RankVector, cfg: LayerConfig) -> LayerAssignment:
    """Node at sorted position j gets the smallest l with 1 - r_(j) <= H_l."""
    H = np.asarray(cfg.H)
    v = 1.0 - rv.sorted_values  # nondecreasing
    layers = np.searchsorted(H, v, side="left").astype(np.int64)
    L = cfg.L
    start = np.full(L, rv.n, dtype=np.int64)
    end = np.full(L, -1, dtype=np.int64)
    for l in range(L):
        lo = np.searchsorted(layers, l, side="left")
        hi = np.searchsorted(layers, l, side="right")
        if hi > lo:
            start[l], end[l] = lo, hi - 1
    return LayerAssignment(rv=rv, cfg=cfg, layers=layers, start=start, end=end)


def count_positive(H: Hypergraph, rv: RankVector, la: LayerAssignment):
    """Classify each edge by (k, top position, bottom layer).

    Returns (S, counts_by_k): S is the (n, L) sum over k of the counts,
    counts_by_k maps k to its own (n, L) matrix.
    """
    if rv.n != H.n:
        raise PartitionError(f"rank vector has {rv.n} entries for a graph on {H.n} nodes")
    n, L = H.n, la.cfg.L
    S = np.zeros((n, L), dtype=np.int64)
    counts_by_k = {}
    for k, arr in H.edges_by_order.items():
        p = rv.pos[arr]
        i = p.min(axis=1)          # dominant node = smallest sorted position
        j = p.max(axis=1)          # bottom node = largest sorted position
        l = la.layers[j]
        ck = np.zeros((n, L), dtype=np.int64)
        np.add.at(ck, (i, l), 1)
        counts_by_k[k] = ck
        S += ck
    return S, counts_by_k


def block_capacity(i: int, l: int, k: int, la: LayerAssignment,
                   binom: BinomialTable) -> int:
    """Number of order-k edges with top position i and bottom in layer l.

    Telescopes sum_{j in N(i,l)} C(j-i-1, k-2) into a difference of two
    C(., k-1) terms; exact integer arithmetic throughout.
    """
    jmin, jmax = la.j_min(i, l), la.j_max(i, l)
    if jmin > jmax:
        return 0
    return binom.comb(jmax - i, k - 1) - binom.comb(jmin - i - 1, k - 1)


def count_complement(counts_by_k: dict, la: LayerAssignment, binom: BinomialTable,
                     k_range) -> list:
    """S-bar(i, l) = sum_k [capacity(k,i,l) - count(k,i,l)], exact integers.

    Raises if any count exceeds its block capacity, which signals a
    rank/graph mismatch or a violated tie rule.
    """
    n, L = la.rv.n, la.cfg.L
    sbar = [[0] * L for _ in range(n)]
    for k in k_range:
        ck = counts_by_k.get(k)
        for i in range(n):
            for l in range(L):
                cap = block_capacity(i, l, k, la, binom)
                cnt = int(ck[i, l]) if ck is not None else 0
                if cnt > cap:
                    raise PartitionError(
                        f"count {cnt} exceeds capacity {cap} at (k={k}, i={i}, l={l})")
                sbar[i][l] += cap - cnt
    return sbar


@dataclass(frozen=True)
class PartitionStats:
    """All statistics the likelihood needs, in O(nL) numeric form.

    S and Sbar are kept both exactly (integers) and as float64 for the
    vectorized likelihood path; the float copies are the only place the
    big integers are narrowed.
    """

    graph_n: int
    m: int
    k_min: int
    k_max: int
    rv: RankVector
    cfg: LayerConfig
    assignment: LayerAssignment
    S: np.ndarray
    Sbar: list
    S_f: np.ndarray
    Sbar_f: np.ndarray
    counts_by_k: dict
    binom: BinomialTable

    @classmethod
    def build(cls, H: Hypergraph, rv: RankVector, cfg: LayerConfig) -> "PartitionStats":
        la = assign_layers(rv, cfg)
        S, counts_by_k = count_positive(H, rv, la)
        binom = BinomialTable(H.n, H.k_max - 1)
        k_range = range(H.k_min, H.k_max + 1)
        sbar = count_complement(counts_by_k, la, binom, k_range)
        sbar_f = np.array([[float(v) for v in row] for row in sbar], dtype=float)
        return cls(graph_n=H.n, m=H.m, k_min=H.k_min, k_max=H.k_max,
                   rv=rv, cfg=cfg, assignment=la, S=S, Sbar=sbar,
                   S_f=S.astype(float), Sbar_f=sbar_f,
                   counts_by_k=counts_by_k, binom=binom)

    @property
    def n(self) -> int:
        return self.graph_n

    @property
    def L(self) -> int:
        return self.cfg.L

    def capacity(self, i: int, l: int, k: int) -> int:
        return block_capacity(i, l, k, self.assignment, self.binom)

    def to_debug_dict(self) -> dict:
        """JSON-safe dump (big integers as decimal strings) for oracle diffs."""
        return {
            "n": self.n,
            "m": self.m,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "order": self.rv.order.tolist(),
            "layers": self.assignment.layers.tolist(),
            "S": self.S.tolist(),
            "Sbar": [[str(v) for v in row] for row in self.Sbar],
        }

    def dump_debug(self, sink) -> None:
        payload = json.dumps(self.to_debug_dict(), indent=2)
        if hasattr(sink, "write"):
            sink.write(payload)
        else:
            with open(sink, "w", encoding="utf-8") as fh:
                fh.write(payload)
