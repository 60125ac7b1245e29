"""Core-size threshold machinery: the function Phi, its root, and
empirical domination thresholds on concrete hypergraphs.

Phi(t) = 2 log n / c_L^(-2+t) - C(n, k-1) + C(n F(t) + sqrt(n log n / 2), k-1)

with F the truncated-exponential CDF and C(., .) the generalized binomial
coefficient.  Phi has a unique root on [0, t'] when the parameter guards
hold; the root's rank threshold defines a high-rank core that dominates
the graph with high probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hypergraph import Hypergraph, degree_vector
from .partition import RankVector

_SMALL_LAMBDA = 1e-8


class CoreSizeError(ValueError):
    pass


class DominationError(CoreSizeError):
    """Raised when no core can dominate (isolated nodes present)."""

    def __init__(self, isolated):
        super().__init__(f"graph has {len(isolated)} isolated nodes; "
                         f"no core can dominate (first few: {isolated[:10]})")
        self.isolated = list(isolated)


def trunc_exp_cdf(t, lam: float):
    """F(t) = (1 - e^(-lam t)) / (1 - e^(-lam)) on [0, 1]; F -> t as lam -> 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > 1):
        raise CoreSizeError("t must lie in [0, 1]")
    if lam <= 0:
        raise CoreSizeError("lambda must be positive")
    if lam < _SMALL_LAMBDA:
        out = t
    else:
        out = np.expm1(-lam * t) / np.expm1(-lam)
    return float(out) if out.ndim == 0 else out


def trunc_exp_quantile(q, lam: float):
    """Exact inverse of trunc_exp_cdf."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0) or np.any(q > 1):
        raise CoreSizeError("q must lie in [0, 1]")
    if lam <= 0:
        raise CoreSizeError("lambda must be positive")
    if lam < _SMALL_LAMBDA:
        out = q
    else:
        out = -np.log1p(q * np.expm1(-lam)) / lam
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def generalized_binomial_diff(n: float, x: float, y: float) -> float:
    """C(n, y) - C(x, y) for real x <= n, factored as exp/expm1 of
    log-gamma terms so the difference stays well conditioned when the two
    coefficients are huge and nearly equal."""
    def logc(a):
        return math.lgamma(a + 1.0) - math.lgamma(y + 1.0) - math.lgamma(a - y + 1.0)

    if x < y:  # C(x, y) vanishes for x below y
        return math.exp(logc(n))
    l_n, l_x = logc(n), logc(x)
    return math.exp(l_x) * math.expm1(l_n - l_x)


@dataclass(frozen=True)
class CoreThresholdProblem:
    """(n, k, lambda, c_L) instance for the threshold function."""

    n: int
    k: int
    lam: float
    c_L: float

    def __post_init__(self):
        if self.n < 2:
            raise CoreSizeError("need n >= 2")
        if not (2 <= self.k < self.n):
            raise CoreSizeError("need a uniform order 2 <= k < n")
        if self.lam <= 0:
            raise CoreSizeError("lambda must be positive")
        if self.c_L <= 1:
            raise CoreSizeError("c_L must exceed 1")

    @property
    def t_prime(self) -> float:
        return trunc_exp_quantile(1.0 - math.sqrt(math.log(self.n) / (2.0 * self.n)),
                                  self.lam)

    def guarantee(self) -> tuple:
        """(ok, warnings): the theorem's parameter guards."""
        warnings = []
        if not (self.c_L < math.exp(self.lam)):
            warnings.append(f"c_L={self.c_L} is not below e^lambda={math.exp(self.lam):.6g}")
        lam_bound = math.log(self.n / 72.0) / 4.0 if self.n > 72 else -math.inf
        if not self.lam < lam_bound:
            warnings.append(f"lambda={self.lam} is not below ln(n/72)/4={lam_bound:.6g}")
        return (not warnings), warnings


def phi(t: float, problem: CoreThresholdProblem) -> float:
    """The threshold function; defined on [0, t']."""
    tp = problem.t_prime
    if t < 0 or t > tp + 1e-12:
        raise CoreSizeError(f"t={t} outside [0, t'={tp}]")
    n, k, lam, cL = problem.n, problem.k, problem.lam, problem.c_L
    F = trunc_exp_cdf(min(t, 1.0), lam)
    x = n * F + math.sqrt(n * math.log(n) / 2.0)
    growth = 2.0 * math.log(n) / cL ** (-2.0 + t)
    return growth - generalized_binomial_diff(float(n), min(x, float(n)), float(k - 1))


def capacity_gap(t: float, problem: CoreThresholdProblem) -> float:
    """C(n, k-1) - C(nF(t) + sqrt(n log n / 2), k-1), the coverage deficit."""
    n, k, lam = problem.n, problem.k, problem.lam
    F = trunc_exp_cdf(min(t, 1.0), lam)
    x = n * F + math.sqrt(n * math.log(n) / 2.0)
    return generalized_binomial_diff(float(n), min(x, float(n)), float(k - 1))


@dataclass(frozen=True)
class CoreThresholdResult:
    success: bool
    t_star: float
    t_prime: float
    phi_at_root: float
    expected_core: float          # n (1 - F(t*))
    upper_bound: float            # sqrt(n log n / 2) + 2 log n / c_L^(-2+t*)
    guarantee: bool
    warnings: tuple
    phi_at_zero: float
    phi_at_t_prime: float


def solve_core_threshold(problem: CoreThresholdProblem,
                         tol: float = 1e-10) -> CoreThresholdResult:
    """Bisection root of Phi on [0, t']; structured no-root result when the
    boundary signs do not bracket."""
    tp = problem.t_prime
    ok, warnings = problem.guarantee()
    f_lo, f_hi = phi(0.0, problem), phi(tp, problem)
    if not (f_lo < 0.0 < f_hi):
        return CoreThresholdResult(
            success=False, t_star=math.nan, t_prime=tp, phi_at_root=math.nan,
            expected_core=math.nan, upper_bound=math.nan, guarantee=ok,
            warnings=tuple(warnings), phi_at_zero=f_lo, phi_at_t_prime=f_hi)
    lo, hi = 0.0, tp
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi(mid, problem) < 0.0:
            lo = mid
        else:
            hi = mid
    t_star = 0.5 * (lo + hi)
    n, lam, cL = problem.n, problem.lam, problem.c_L
    expected_core = n * (1.0 - trunc_exp_cdf(t_star, lam))
    bound = math.sqrt(n * math.log(n) / 2.0) + 2.0 * math.log(n) / cL ** (-2.0 + t_star)
    return CoreThresholdResult(
        success=True, t_star=t_star, t_prime=tp, phi_at_root=phi(t_star, problem),
        expected_core=expected_core, upper_bound=bound, guarantee=ok,
        warnings=tuple(warnings), phi_at_zero=f_lo, phi_at_t_prime=f_hi)


def threshold_curve(problem: CoreThresholdProblem, points: int = 200):
    """Grid of (t, Phi, F, capacity gap) rows over [0, t'] for plotting."""
    ts = np.linspace(0.0, problem.t_prime, points)
    rows = []
    for t in ts:
        rows.append((float(t), phi(float(t), problem),
                     trunc_exp_cdf(float(t), problem.lam),
                     capacity_gap(float(t), problem)))
    return rows


# ---------------------------------------------------------------------------
# empirical domination


def is_dominating(H: Hypergraph, core_nodes) -> tuple:
    """True iff every node outside the core shares an edge with a core node.

    Returns (flag, undominated node list); isolated non-core nodes are
    always undominated.
    """
    core = np.zeros(H.n, dtype=bool)
    idx = np.asarray(sorted(set(int(v) for v in core_nodes)), dtype=np.int64)
    if len(idx) and (idx[0] < 0 or idx[-1] >= H.n):
        raise CoreSizeError("core node index out of range")
    core[idx] = True
    covered = core.copy()
    for arr in H.edges_by_order.values():
        hit = core[arr].any(axis=1)
        if hit.any():
            covered[np.unique(arr[hit])] = True
    undominated = np.flatnonzero(~covered)
    return len(undominated) == 0, undominated.tolist()


@dataclass(frozen=True)
class EmpiricalCoreResult:
    threshold: float
    core_size: int


def empirical_core_threshold(H: Hypergraph, rv: RankVector) -> EmpiricalCoreResult:
    """Smallest rank t such that {v : r_v >= t} dominates H.

    Nodes are added in decreasing rank order with incremental domination
    bookkeeping; each added node marks every neighbor (via shared edges)
    as dominated.
    """
    if rv.n != H.n:
        raise CoreSizeError("rank vector does not match the graph")
    deg = degree_vector(H)
    isolated = np.flatnonzero(deg == 0)
    if len(isolated):
        raise DominationError(isolated.tolist())
    incidence = [[] for _ in range(H.n)]
    edge_list = H.sorted_edges
    for ei, e in enumerate(edge_list):
        for v in e:
            incidence[v].append(ei)
    settled = np.zeros(H.n, dtype=bool)   # in core or dominated
    edge_done = np.zeros(len(edge_list), dtype=bool)
    remaining = H.n
    for count, v in enumerate(rv.order, start=1):
        v = int(v)
        if not settled[v]:
            settled[v] = True
            remaining -= 1
        for ei in incidence[v]:
            if edge_done[ei]:
                continue
            edge_done[ei] = True
            for u in edge_list[ei]:
                if not settled[u]:
                    settled[u] = True
                    remaining -= 1
        if remaining == 0:
            return EmpiricalCoreResult(threshold=float(rv.r[v]), core_size=count)
    raise AssertionError("unreachable: full node set always dominates")
