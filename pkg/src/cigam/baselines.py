"""Comparison models: logistic core-periphery scores with a negative-
sampling likelihood estimator, and permutation-based scoring (Holder-mean
models on hypergraphs and 2-uniform graphs)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from .hypergraph import Hypergraph
from .rng import as_generator
from .sampler import negative_order_counts, sample_negative_edges

PROB_CLAMP = 1e-12


class BaselineError(ValueError):
    pass


# ---------------------------------------------------------------------------
# logistic core-periphery model


@dataclass(frozen=True)
class CoreScores:
    """Per-node core scores z; core = {i : z_i >= 0}."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise BaselineError("core scores must be finite")
        object.__setattr__(self, "z", z)

    @property
    def core(self) -> np.ndarray:
        return np.flatnonzero(self.z >= 0.0)

    @property
    def periphery(self) -> np.ndarray:
        return np.flatnonzero(self.z < 0.0)


@dataclass(frozen=True)
class ScoreMap:
    """Two-stage affine map with rectifier: z_i = W2 relu(W1 x_i + b1) + b2."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float

    @classmethod
    def init(cls, d: int, gen) -> "ScoreMap":
        return cls(W1=0.1 * gen.standard_normal((d, d)), b1=np.zeros(d),
                   W2=0.1 * gen.standard_normal(d), b2=0.0)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return np.maximum(X @ self.W1 + self.b1, 0.0) @ self.W2 + self.b2


def _sigmoid(s):
    return 1.0 / (1.0 + np.exp(-np.asarray(s, dtype=float)))


def _log_sigmoid(s):
    # log sigma(s), floored at log(PROB_CLAMP)
    return np.maximum(-np.logaddexp(0.0, -np.asarray(s, dtype=float)),
                      math.log(PROB_CLAMP))


def _log_one_minus_sigmoid(s):
    return np.maximum(-np.logaddexp(0.0, np.asarray(s, dtype=float)),
                      math.log(PROB_CLAMP))


def logistic_cp_prob(e, scores: CoreScores) -> float:
    """rho(e) = sigmoid(sum of scores), clamped away from {0, 1}."""
    s = float(np.sum(scores.z[list(e)]))
    return float(np.clip(_sigmoid(s), PROB_CLAMP, 1.0 - PROB_CLAMP))


def _edge_score_sums(H: Hypergraph, z: np.ndarray) -> np.ndarray:
    sums = []
    for arr in H.edges_by_order.values():
        sums.append(z[arr].sum(axis=1))
    return np.concatenate(sums) if sums else np.empty(0)


def logistic_cp_ll_estimate(H: Hypergraph, scores: CoreScores, batch) -> dict:
    """Unbiased LL estimate from a without-replacement negative batch.

    ll_hat = sum_E log rho(e) + (mbar/|B|) sum_B log(1 - rho(eb)).
    Also reports the variance bound over the batch terms and its small-rho
    simplification (1-alpha)/alpha * mbar.
    """
    if not batch and sum(negative_order_counts(H).values()) > 0:
        raise BaselineError("empty negative batch")
    z = scores.z
    pos = float(_log_sigmoid(_edge_score_sums(H, z)).sum())
    neg_sums = np.asarray([z[list(e)].sum() for e in batch], dtype=float)
    mbar = sum(negative_order_counts(H).values())
    b = len(batch)
    neg_logs = _log_one_minus_sigmoid(neg_sums)
    estimate = pos + (mbar / b) * float(neg_logs.sum())
    var_bound = (mbar - b) / b * float(np.sum(neg_logs ** 2))
    alpha = b / mbar
    return {
        "estimate": estimate,
        "positive_term": pos,
        "mbar": mbar,
        "batch_size": b,
        "variance_bound_batch": var_bound,
        "variance_bound_small_rho": (1.0 - alpha) / alpha * mbar,
    }


def negative_ll_variance_bound(neg_probs, mbar: int, batch_size: int) -> float:
    """((mbar - b)/b) * sum over the given non-edges of log^2(1 - rho)."""
    lp = np.log1p(-np.clip(np.asarray(neg_probs, dtype=float),
                           PROB_CLAMP, 1.0 - PROB_CLAMP))
    return (mbar - batch_size) / batch_size * float(np.sum(lp ** 2))


def exact_logistic_cp_ll(H: Hypergraph, scores: CoreScores, all_non_edges) -> float:
    """Full-enumeration LL; only for instances small enough to enumerate."""
    z = scores.z
    pos = float(_log_sigmoid(_edge_score_sums(H, z)).sum())
    if not all_non_edges:
        return pos
    neg_sums = np.array([z[list(e)].sum() for e in all_non_edges])
    return pos + float(_log_one_minus_sigmoid(neg_sums).sum())


@dataclass(frozen=True)
class LogisticCpOptions:
    step: float = 1e-6
    epochs: int = 10
    seed: int = 0
    batch_frac: float = 0.2
    l2: float = 0.0              # alpha_theta of the Gaussian prior on z
    full_batch: bool = False     # enumerate all non-edges; tiny n only
    max_halvings: int = 50


@dataclass
class LogisticCpFit:
    scores: CoreScores
    score_map: ScoreMap = None
    ll_trace: list = field(default_factory=list)
    aborted: bool = False


def enumerate_non_edges(H: Hypergraph) -> list:
    from itertools import combinations
    out = []
    for k in range(H.k_min, H.k_max + 1):
        for cand in combinations(range(H.n), k):
            if cand not in H.edges:
                out.append(cand)
    return out


def _cp_gradient(H, z, batch, weight):
    """d/dz of the batch estimator (positive part exact)."""
    g = np.zeros_like(z)
    for arr in H.edges_by_order.values():
        coef = 1.0 - _sigmoid(z[arr].sum(axis=1))
        np.add.at(g, arr.ravel(), np.repeat(coef, arr.shape[1]))
    for e in batch:
        idx = list(e)
        g[idx] -= weight * _sigmoid(z[idx].sum())
    return g


def logistic_cp_fit(H: Hypergraph, features=None,
                    opt: LogisticCpOptions = LogisticCpOptions()) -> LogisticCpFit:
    """Stochastic gradient ascent on the negative-sampling LL estimator.

    Fits z directly, or the two-stage feature map when features are given.
    A fresh negative batch is drawn each step; in full-batch mode the
    non-edges are enumerated once and ascent is monotone via backtracking.
    """
    gen = as_generator(opt.seed)
    mbar = sum(negative_order_counts(H).values())
    use_map = features is not None
    if use_map:
        X = features.values
        if X.shape[0] != H.n:
            raise BaselineError("feature rows do not match node count")
        smap = ScoreMap.init(X.shape[1], gen)
        z = smap.scores(X)
    else:
        smap = None
        z = np.zeros(H.n)

    if opt.full_batch:
        batch = enumerate_non_edges(H)
        weight = 1.0
    else:
        bsize = max(1, min(mbar, int(round(opt.batch_frac * mbar))))
        weight = mbar / bsize

    def estimate(zv, bt):
        pos = float(_log_sigmoid(_edge_score_sums(H, zv)).sum())
        neg = float(_log_one_minus_sigmoid(
            np.array([zv[list(e)].sum() for e in bt])).sum()) if bt else 0.0
        return pos + weight * neg - 0.5 * opt.l2 * float(zv @ zv)

    trace = []
    for _ in range(opt.epochs):
        if not opt.full_batch:
            batch = sample_negative_edges(H, bsize, gen)
        g = _cp_gradient(H, z, batch, weight) - opt.l2 * z
        if use_map:
            # backprop through W2 relu(W1 x + b1) + b2
            hpre = X @ smap.W1 + smap.b1
            hact = np.maximum(hpre, 0.0)
            dW2 = hact.T @ g
            db2 = float(g.sum())
            dh = np.outer(g, smap.W2) * (hpre > 0.0)
            dW1 = X.T @ dh
            db1 = dh.sum(axis=0)
            cur = estimate(z, batch)
            t = opt.step
            for _h in range(opt.max_halvings + 1):
                cand = ScoreMap(W1=smap.W1 + t * dW1, b1=smap.b1 + t * db1,
                                W2=smap.W2 + t * dW2, b2=smap.b2 + t * db2)
                zc = cand.scores(X)
                val = estimate(zc, batch)
                if np.isfinite(val) and (not opt.full_batch or val >= cur):
                    smap, z = cand, zc
                    break
                t *= 0.5
            trace.append(estimate(z, batch))
        else:
            cur = estimate(z, batch)
            t = opt.step
            for _h in range(opt.max_halvings + 1):
                zc = z + t * g
                val = estimate(zc, batch)
                if np.isfinite(val) and (not opt.full_batch or val >= cur):
                    z = zc
                    break
                t *= 0.5
            trace.append(estimate(z, batch))
        if not np.isfinite(trace[-1]):
            return LogisticCpFit(scores=CoreScores(np.nan_to_num(z)), score_map=smap,
                                 ll_trace=trace, aborted=True)
    return LogisticCpFit(scores=CoreScores(z), score_map=smap, ll_trace=trace)


# ---------------------------------------------------------------------------
# permutation models (Holder-mean based)


def holder_mean(values, a: float) -> float:
    """Generalized a-mean with explicit limit branches for a -> 0, +-inf."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise BaselineError("empty input to the Holder mean")
    if np.any(v < 0) or np.any(v > 1):
        raise BaselineError("Holder mean inputs must lie in [0, 1]")
    if a > 700.0:
        return float(v.max())
    if a < -700.0:
        return float(v.min())
    if abs(a) < 1e-9:
        if np.any(v == 0.0):
            return 0.0
        return float(np.exp(np.mean(np.log(v))))
    if a < 0 and np.any(v == 0.0):
        return 0.0
    return float(np.mean(v ** a) ** (1.0 / a))


@dataclass(frozen=True)
class PermutationModel:
    """Node permutation with Holder exponent; a_u = 1 - pi_u / n.

    pi maps node -> 1-based position.  mode "hypernsm" weighs the mean by
    1/|e|; mode "logistic-th" uses weight 1 and requires a 2-uniform graph.
    p is carried through to output metadata only.
    """

    pi: np.ndarray
    a: float = 10.0
    mode: str = "hypernsm"
    p: float = 20.0

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.int64)
        if sorted(pi.tolist()) != list(range(1, len(pi) + 1)):
            raise BaselineError("pi must be a permutation of 1..n")
        if self.mode not in ("hypernsm", "logistic-th"):
            raise BaselineError(f"unknown permutation model mode {self.mode!r}")
        if self.a == 0.0 or not np.isfinite(self.a):
            raise BaselineError("Holder exponent must be finite and nonzero")
        object.__setattr__(self, "pi", pi)

    @property
    def node_values(self) -> np.ndarray:
        return 1.0 - self.pi / len(self.pi)

    def edge_probability(self, e) -> float:
        vals = self.node_values[list(e)]
        xi = 1.0 / len(e) if self.mode == "hypernsm" else 1.0
        return float(np.clip(_sigmoid(xi * holder_mean(vals, self.a)),
                             PROB_CLAMP, 1.0 - PROB_CLAMP))


def permutation_model_from_order(order, n: int, a: float = 10.0,
                                 mode: str = "hypernsm", p: float = 20.0) -> PermutationModel:
    """Build a PermutationModel from a node ordering (best node first)."""
    pi = np.empty(n, dtype=np.int64)
    pi[np.asarray(order, dtype=np.int64)] = np.arange(1, n + 1)
    return PermutationModel(pi=pi, a=a, mode=mode, p=p)


def permutation_ll_estimate(H: Hypergraph, model: PermutationModel, batch) -> dict:
    """Negative-sampling LL estimate for a supplied permutation model."""
    if model.mode == "logistic-th" and not (H.k_min == H.k_max == 2):
        raise BaselineError("logistic-th scoring requires a 2-uniform graph")
    if len(model.pi) != H.n:
        raise BaselineError("permutation size does not match node count")
    pos = sum(math.log(model.edge_probability(e)) for e in H.sorted_edges)
    mbar = sum(negative_order_counts(H).values())
    b = len(batch)
    if b == 0 and mbar > 0:
        raise BaselineError("empty negative batch")
    neg_logs = np.array([math.log1p(-model.edge_probability(e)) for e in batch])
    estimate = pos + (mbar / b) * float(neg_logs.sum())
    return {
        "estimate": estimate,
        "positive_term": pos,
        "mbar": mbar,
        "batch_size": b,
        "variance_bound_batch": (mbar - b) / b * float(np.sum(neg_logs ** 2)),
    }


def exact_permutation_ll(H: Hypergraph, model: PermutationModel, all_non_edges) -> float:
    pos = sum(math.log(model.edge_probability(e)) for e in H.sorted_edges)
    neg = sum(math.log1p(-model.edge_probability(e)) for e in all_non_edges)
    return pos + neg


# ---------------------------------------------------------------------------
# rank comparison


def rank_correlation(ordering_a, ordering_b) -> float:
    """Spearman correlation of two node orderings (best node first)."""
    a = list(ordering_a)
    b = list(ordering_b)
    if len(a) != len(b):
        raise BaselineError("orderings have different lengths")
    if set(a) != set(b):
        raise BaselineError("orderings cover different node sets")
    pos_a = {v: i for i, v in enumerate(a)}
    pos_b = {v: i for i, v in enumerate(b)}
    nodes = sorted(pos_a)
    xs = [pos_a[v] for v in nodes]
    ys = [pos_b[v] for v in nodes]
    rho = sstats.spearmanr(xs, ys).statistic
    return float(rho)


def position_pairs(ordering_a, ordering_b) -> list:
    """(node, position in a, position in b) rows for scatter output."""
    pos_a = {v: i for i, v in enumerate(ordering_a)}
    pos_b = {v: i for i, v in enumerate(ordering_b)}
    return [(v, pos_a[v], pos_b[v]) for v in sorted(pos_a)]
