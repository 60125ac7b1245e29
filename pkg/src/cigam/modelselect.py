"""Layer-count and breakpoint selection.

The layer count comes from an elbow rule on optimal piecewise-linear fits
of the log-log degree profile; breakpoints are then chosen by exhaustive
grid search ranked by information criteria.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .hypergraph import FeatureMatrix, Hypergraph, degree_vector
from .model import FitOptions, FitResult, NO_PRIORS, PriorConfig, fit
from .partition import LayerConfig, RankVector

PWERR_FLOOR = 1e-12


class SelectionError(ValueError):
    pass


def degree_loglog_points(H: Hypergraph):
    """(log rank-position, log degree) pairs, degrees sorted decreasing.

    Zero-degree nodes are dropped; returns (x, y, dropped_count).
    """
    deg = np.sort(degree_vector(H))[::-1]
    deg = deg[deg > 0]
    dropped = H.n - len(deg)
    if len(deg) == 0:
        raise SelectionError("all degrees are zero")
    j = np.arange(1, len(deg) + 1, dtype=float)
    return np.log(j), np.log(deg.astype(float)), dropped


@dataclass(frozen=True)
class PiecewiseFit:
    segments: int
    breakpoints: tuple     # start index of each segment in point space
    slopes: tuple
    intercepts: tuple
    sse: float


class _SegmentCosts:
    """O(1) OLS squared error of any contiguous point range via prefix sums."""

    def __init__(self, x, y):
        self.x, self.y = x, y
        z = np.zeros(1)
        self.sx = np.concatenate([z, np.cumsum(x)])
        self.sy = np.concatenate([z, np.cumsum(y)])
        self.sxx = np.concatenate([z, np.cumsum(x * x)])
        self.sxy = np.concatenate([z, np.cumsum(x * y)])
        self.syy = np.concatenate([z, np.cumsum(y * y)])

    def line(self, a, b):
        """(slope, intercept, sse) of the OLS line on points a..b inclusive."""
        m = b - a + 1
        sx = self.sx[b + 1] - self.sx[a]
        sy = self.sy[b + 1] - self.sy[a]
        sxx = self.sxx[b + 1] - self.sxx[a]
        sxy = self.sxy[b + 1] - self.sxy[a]
        syy = self.syy[b + 1] - self.syy[a]
        cxx = sxx - sx * sx / m
        cxy = sxy - sx * sy / m
        cyy = syy - sy * sy / m
        if m == 1 or cxx <= 0.0:
            return 0.0, sy / m, max(cyy, 0.0)
        slope = cxy / cxx
        return slope, (sy - slope * sx) / m, max(cyy - slope * cxy, 0.0)

    def sse(self, a, b):
        return self.line(a, b)[2]

    def sse_suffix(self, b):
        """SSE of points a..b for every start a = 0..b, vectorized."""
        a = np.arange(b + 1)
        m = (b + 1 - a).astype(float)
        sx = self.sx[b + 1] - self.sx[a]
        sy = self.sy[b + 1] - self.sy[a]
        sxx = self.sxx[b + 1] - self.sxx[a]
        sxy = self.sxy[b + 1] - self.sxy[a]
        syy = self.syy[b + 1] - self.syy[a]
        cxx = sxx - sx * sx / m
        cxy = sxy - sx * sy / m
        cyy = syy - sy * sy / m
        with np.errstate(divide="ignore", invalid="ignore"):
            fit_drop = np.where(cxx > 0.0, cxy * cxy / np.where(cxx > 0.0, cxx, 1.0), 0.0)
        return np.maximum(cyy - fit_drop, 0.0)


def _run_dp(costs: _SegmentCosts, n: int, segments: int):
    """dp[s][e] = best error covering points 0..e-1 with s segments."""
    inf = math.inf
    dp = np.full((segments + 1, n + 1), inf)
    arg = np.full((segments + 1, n + 1), -1, dtype=np.int64)
    dp[0, 0] = 0.0
    suffix = [costs.sse_suffix(e - 1) for e in range(1, n + 1)]
    for s in range(1, segments + 1):
        for e in range(s, n + 1):
            vals = dp[s - 1, s - 1:e] + suffix[e - 1][s - 1:e]
            mid = int(np.argmin(vals))
            dp[s, e] = vals[mid]
            arg[s, e] = mid + s - 1
    return dp, arg


def piecewise_fit(x, y, segments: int) -> PiecewiseFit:
    """Optimal discontinuous piecewise-OLS fit with `segments` lines.

    Exact dynamic program over breakpoint positions; requires at least
    2 * segments points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if segments < 1:
        raise SelectionError("need at least one segment")
    if n < 2 * segments:
        raise SelectionError(f"need at least {2 * segments} points for {segments} segments")
    costs = _SegmentCosts(x, y)
    dp, arg = _run_dp(costs, n, segments)
    bounds = []
    e = n
    for s in range(segments, 0, -1):
        mid = int(arg[s, e])
        bounds.append((mid, e - 1))
        e = mid
    bounds.reverse()
    slopes, intercepts = [], []
    for a, b in bounds:
        slope, intercept, _ = costs.line(a, b)
        slopes.append(slope)
        intercepts.append(intercept)
    return PiecewiseFit(segments=segments,
                        breakpoints=tuple(a for a, _ in bounds),
                        slopes=tuple(slopes), intercepts=tuple(intercepts),
                        sse=float(dp[segments, n]))


def piecewise_error_profile(x, y, l_max: int) -> list:
    """pwerr*(l) for l = 1..l_max (capped by the 2l-point requirement),
    from a single dynamic-programming pass."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    top = min(l_max, n // 2)
    if top < 1:
        raise SelectionError("need at least two points")
    dp, _ = _run_dp(_SegmentCosts(x, y), n, top)
    return [float(dp[s, n]) for s in range(1, top + 1)]


def elbow_select(pwerr) -> int:
    """argmax over l in [2, L_max - 1] of the ratio of successive log-error
    drops; ties go to the smallest l."""
    e = np.maximum(np.asarray(pwerr, dtype=float), PWERR_FLOOR)
    lmax = len(e)
    if lmax < 3:
        raise SelectionError("need fit errors for at least three layer counts")
    loge = np.log(e)
    best_l, best_ratio = None, -math.inf
    for l in range(2, lmax):          # 1-based l in [2, lmax-1]
        num = loge[l - 1] - loge[l - 2]
        den = loge[l] - loge[l - 1]
        if den == 0.0:
            ratio = math.inf if num != 0.0 else -math.inf
        else:
            ratio = num / den
        if ratio > best_ratio:
            best_ratio, best_l = ratio, l
    return best_l


@dataclass(frozen=True)
class GridCandidate:
    H: tuple
    ll: float
    aic: float
    bic: float
    lr_vs_best: float
    params: dict


@dataclass(frozen=True)
class GridSearchResult:
    best: GridCandidate
    table: tuple
    criterion: str


def _grid_values(step: float):
    cells = round(1.0 / step)
    if abs(cells * step - 1.0) > 1e-9:
        raise SelectionError(f"step {step} does not divide [0, 1] evenly")
    return [step * i for i in range(1, cells + 1)], cells


def enumerate_breakpoints(L: int, step: float) -> list:
    """All strictly increasing H vectors on the step grid with H_L = 1."""
    values, cells = _grid_values(step)
    if cells < L:
        raise SelectionError(f"grid of {cells} cells cannot host {L} layers")
    inner = values[:-1]
    return [tuple(list(combo) + [1.0]) for combo in combinations(inner, L - 1)]


def breakpoint_grid_search(H: Hypergraph, L: int, step: float, *,
                           ranks: RankVector = None,
                           features: FeatureMatrix = None,
                           priors: PriorConfig = NO_PRIORS,
                           opt: FitOptions = FitOptions(),
                           criterion: str = "aic") -> GridSearchResult:
    """Fit every feasible breakpoint vector; rank by AIC (default).

    The BIC sample size is the number of candidate hyperedges
    sum_k C(n, k), the Bernoulli trial count behind the likelihood.
    """
    if criterion not in ("aic", "bic", "ll"):
        raise SelectionError(f"unknown criterion {criterion!r}")
    cands = enumerate_breakpoints(L, step)
    d = features.d if features is not None else 0
    n_params = (L + 1) if ranks is not None else (L + d + 2)
    log_trials = math.log(sum(math.comb(H.n, k) for k in range(H.k_min, H.k_max + 1)))
    rows = []
    for hvec in cands:
        res = fit(H, LayerConfig(hvec), ranks=ranks, features=features,
                  priors=priors, opt=opt)
        ll = res.final_ll
        rows.append((hvec, ll, 2.0 * n_params - 2.0 * ll,
                     n_params * log_trials - 2.0 * ll, res.params.to_dict()))
    best_ll = max(r[1] for r in rows)
    key = {"aic": (lambda r: r[2]), "bic": (lambda r: r[3]), "ll": (lambda r: -r[1])}[criterion]
    table = tuple(GridCandidate(H=r[0], ll=r[1], aic=r[2], bic=r[3],
                                lr_vs_best=2.0 * (best_ll - r[1]), params=r[4])
                  for r in sorted(rows, key=key))
    return GridSearchResult(best=table[0], table=table, criterion=criterion)
