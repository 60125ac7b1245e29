"""Independent brute-force oracles used to freeze expected values.

Everything here deliberately avoids the library's partition/likelihood
code paths: probabilities are evaluated edge by edge over explicit
enumerations, and combinatorial counts use math.comb directly.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from cigam.hypergraph import Hypergraph
from cigam.model import ModelParams
from cigam.partition import RankVector


def edge_layer_bf(e, r, H):
    """Smallest 1-based l with 1 - min rank <= H_l, returned 0-based."""
    v = 1.0 - min(r[u] for u in e)
    for l, h in enumerate(H):
        if v <= h:
            return l
    raise AssertionError("H_L = 1 makes this unreachable")


def edge_prob_bf(e, r, lam, c, H):
    hi = max(r[u] for u in e)
    return c[edge_layer_bf(e, r, H)] ** (-2.0 + hi)


def brute_force_ll(graph: Hypergraph, ranks, lam, c, H, gamma=1e-10):
    """Sum over all candidate edges of the Bernoulli log-terms plus the
    rank log-density; the absent-edge term uses the same smoothing gamma
    as the production path."""
    r = np.asarray(ranks, dtype=float)
    n = graph.n
    total = float(-lam * r.sum() + n * math.log(lam)
                  - n * math.log(1.0 - math.exp(-lam)))
    for k in range(graph.k_min, graph.k_max + 1):
        for cand in combinations(range(n), k):
            f = edge_prob_bf(cand, r, lam, c, H)
            if cand in graph.edges:
                total += math.log(f)
            else:
                total += math.log(1.0 - f + gamma)
    return total


def classify_edges_bf(graph: Hypergraph, rv: RankVector, H):
    """Brute-force (k, i, l) classification tensor as a dict."""
    counts = {}
    for e in graph.edges:
        p = [rv.pos[u] for u in e]
        i, j = min(p), max(p)
        l = edge_layer_bf(e, rv.r, H)
        # layer of the *bottom node*, equal to layer from min rank value
        counts[(len(e), i, l)] = counts.get((len(e), i, l), 0) + 1
    return counts


def capacity_direct_sum(i, l, k, layers):
    """sum over j in N(i, l) of C(j - i - 1, k - 2), straight off the set."""
    n = len(layers)
    return sum(math.comb(j - i - 1, k - 2)
               for j in range(i + 1, n) if layers[j] == l)


def random_hypergraph(gen, n, k_range, p=0.35):
    """Bernoulli(p) edges over all candidate orders; retried until nonempty."""
    while True:
        edges = []
        for k in k_range:
            for cand in combinations(range(n), k):
                if gen.random() < p:
                    edges.append(cand)
        if edges:
            return Hypergraph.from_edges(edges, n=n)


def random_params(gen, L, cfg):
    lam = float(gen.uniform(0.5, 3.0))
    c0 = np.sort(gen.uniform(0.2, 2.5, size=L))
    while np.any(np.diff(c0) < 1e-3):
        c0 = np.sort(gen.uniform(0.2, 2.5, size=L))
    return ModelParams(lam=lam, c=1.0 + c0, cfg=cfg)


def finite_difference(f, x0, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x0 = np.asarray(x0, dtype=float)
    g = np.zeros_like(x0)
    for i in range(len(x0)):
        step = h * max(1.0, abs(x0[i]))
        xp, xm = x0.copy(), x0.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (f(xp) - f(xm)) / (2.0 * step)
    return g
