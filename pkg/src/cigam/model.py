"""Edge probabilities, exact log-likelihood, and constrained MLE/MAP.

The likelihood is evaluated in O(nL) from PartitionStats.  The density
parameters live in the open domain K = {lambda > 0, 1 < c_1 < ... < c_L},
enforced through a log-barrier; optimization is plain gradient ascent
with backtracking so runs are reproducible from (seed, step, epochs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .hypergraph import FeatureMatrix, Hypergraph
from .partition import LayerConfig, PartitionStats, RankVector

ZETA = 2.0
DEFAULT_GAMMA = 1e-10  # underflow smoothing inside log(1 - c^(-2+r) + gamma)
RANK_CLAMP = 1e-7      # sigmoid outputs kept in [RANK_CLAMP, 1 - RANK_CLAMP]
LAMBDA_FLOOR = 1e-6


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Rank-decay rate lambda and density parameters c_1..c_L (with H)."""

    lam: float
    c: np.ndarray
    cfg: LayerConfig

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or len(c) != self.cfg.L:
            raise ModelError(f"need {self.cfg.L} density parameters, got {c.shape}")
        object.__setattr__(self, "c", c)

    @property
    def zeta(self) -> float:
        return ZETA

    @property
    def b(self) -> float:
        return math.exp(self.lam)

    @property
    def L(self) -> int:
        return self.cfg.L

    def in_domain(self) -> bool:
        if not np.isfinite(self.lam) or self.lam <= 0.0:
            return False
        c = self.c
        if not np.all(np.isfinite(c)) or c[0] <= 1.0:
            return False
        return bool(np.all(np.diff(c) > 0.0))

    def require_domain(self):
        if not self.in_domain():
            raise ModelError(
                f"parameters outside domain K: lambda={self.lam}, c={self.c.tolist()}")

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "c": self.c.tolist(),
                "H": list(self.cfg.H), "zeta": ZETA}


@dataclass(frozen=True)
class RankMapParams:
    """Logistic rank map r_i = sigmoid(w . x_i + b)."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if not (np.all(np.isfinite(w)) and np.isfinite(self.b)):
            raise ModelError("rank map parameters must be finite")
        object.__setattr__(self, "w", w)

    def ranks(self, X: np.ndarray) -> np.ndarray:
        z = X @ self.w + self.b
        r = 1.0 / (1.0 + np.exp(-z))
        return np.clip(r, RANK_CLAMP, 1.0 - RANK_CLAMP)


@dataclass(frozen=True)
class PriorConfig:
    """MAP priors: exponential/Pareto on c (via alpha_c), Gamma on lambda."""

    c_mode: str = "none"          # none | exponential | pareto
    alpha_c: float = 0.0
    lam_alpha: float = None       # Gamma shape; None disables
    lam_beta: float = None        # Gamma rate

    def __post_init__(self):
        if self.c_mode not in ("none", "exponential", "pareto"):
            raise ModelError(f"unknown c prior {self.c_mode!r}")
        if self.c_mode != "none" and self.alpha_c <= 0:
            raise ModelError("alpha_c must be positive when a c prior is set")
        if (self.lam_alpha is None) != (self.lam_beta is None):
            raise ModelError("Gamma prior needs both shape and rate")
        if self.lam_alpha is not None and (self.lam_alpha <= 0 or self.lam_beta <= 0):
            raise ModelError("Gamma prior parameters must be positive")


NO_PRIORS = PriorConfig()


# ---------------------------------------------------------------------------
# probabilities and likelihood


def edge_layer(e, r: np.ndarray, cfg: LayerConfig) -> int:
    """0-based layer of an edge: smallest l with 1 - min_rank <= H_l."""
    lo = min(float(r[v]) for v in e)
    H = cfg.H
    v = 1.0 - lo
    for l, h in enumerate(H):
        if v <= h:
            return l
    raise ModelError(f"rank {lo} outside [0, 1]")  # unreachable when H_L = 1


def edge_probability(e, r, params: ModelParams) -> float:
    """f(e) = c_layer^(-2 + max rank); always in (0, 1) on the domain K."""
    params.require_domain()
    rr = np.asarray(r, dtype=float)
    if rr.min() < 0.0 or rr.max() > 1.0:
        raise ModelError("ranks must lie in [0, 1]")
    hi = max(float(rr[v]) for v in e)
    l = edge_layer(e, rr, params.cfg)
    return float(params.c[l] ** (-ZETA + hi))


def rank_log_density(ranks: np.ndarray, lam: float) -> float:
    """Log density of i.i.d. truncated-exponential ranks on [0, 1]."""
    n = len(ranks)
    return float(-lam * ranks.sum() + n * math.log(lam) - n * math.log(-math.expm1(-lam)))


def _power_table(ranks_sorted: np.ndarray, c: np.ndarray) -> np.ndarray:
    # P[i, l] = c_l^(-2 + r_(i)), computed in log space for large c
    logc = np.log(c)
    return np.exp(np.outer(-ZETA + ranks_sorted, logc))


def log_likelihood(stats: PartitionStats, params: ModelParams, *,
                   ranks_sorted: np.ndarray = None,
                   gamma: float = DEFAULT_GAMMA) -> float:
    """Exact joint log-likelihood of (graph, ranks) given (lambda, c).

    `ranks_sorted` overrides the rank values at the stats' sorted
    positions (used when differentiating the rank map with counts held
    fixed); by default the stats' own ranks are used.
    """
    params.require_domain()
    rs = stats.rv.sorted_values if ranks_sorted is None else np.asarray(ranks_sorted, float)
    P = _power_table(rs, params.c)
    logc = np.log(params.c)
    pos_term = stats.S_f * ((-ZETA + rs)[:, None] * logc[None, :])
    neg_term = stats.Sbar_f * np.log1p(gamma - P)
    total = pos_term.sum() + neg_term.sum() + rank_log_density(rs, params.lam)
    if not np.isfinite(total):
        bad = np.argwhere(~np.isfinite(pos_term + neg_term))
        where = tuple(bad[0]) if len(bad) else ("rank-prior",)
        raise ModelError(f"non-finite log-likelihood at (i, l) = {where}")
    return float(total)


def log_barrier(params: ModelParams) -> float:
    """log(c_1 - 1) + sum log(c_{l+1} - c_l); -inf outside the domain K."""
    c = params.c
    if params.lam <= 0 or c[0] <= 1.0 or np.any(np.diff(c) <= 0.0):
        return -math.inf
    return float(math.log(c[0] - 1.0) + np.sum(np.log(np.diff(c))))


def log_prior(params: ModelParams, priors: PriorConfig = NO_PRIORS) -> float:
    """Additive log-prior terms with constants dropped."""
    total = 0.0
    if priors.c_mode == "exponential":
        total -= priors.alpha_c * float(np.sum(params.c - 1.0))
    elif priors.c_mode == "pareto":
        total -= priors.alpha_c * float(np.sum(np.log(params.c)))
    if priors.lam_alpha is not None:
        total += (priors.lam_alpha - 1.0) * math.log(params.lam) - priors.lam_beta * params.lam
    return total


def objective(stats: PartitionStats, params: ModelParams,
              priors: PriorConfig = NO_PRIORS, *,
              ranks_sorted: np.ndarray = None,
              gamma: float = DEFAULT_GAMMA) -> float:
    """Barrier-augmented MAP objective that `fit` ascends."""
    bar = log_barrier(params)
    if bar == -math.inf:
        return -math.inf
    return log_likelihood(stats, params, ranks_sorted=ranks_sorted, gamma=gamma) \
        + bar + log_prior(params, priors)


# ---------------------------------------------------------------------------
# gradients


def _barrier_gradient(c: np.ndarray) -> np.ndarray:
    L = len(c)
    g = np.zeros(L)
    gaps = np.concatenate(([c[0] - 1.0], np.diff(c)))
    if np.any(gaps <= 0.0):
        raise ModelError("parameters on the domain boundary; barrier gradient undefined")
    g += 1.0 / gaps                      # d/dc_l log(c_l - c_{l-1})
    g[:-1] -= 1.0 / gaps[1:]             # d/dc_l log(c_{l+1} - c_l)
    return g


def _prior_gradient(params: ModelParams, priors: PriorConfig):
    dlam = 0.0
    dc = np.zeros(params.L)
    if priors.c_mode == "exponential":
        dc -= priors.alpha_c
    elif priors.c_mode == "pareto":
        dc -= priors.alpha_c / params.c
    if priors.lam_alpha is not None:
        dlam += (priors.lam_alpha - 1.0) / params.lam - priors.lam_beta
    return dlam, dc


def gradient(stats: PartitionStats, params: ModelParams,
             priors: PriorConfig = NO_PRIORS, *,
             ranks_sorted: np.ndarray = None,
             gamma: float = DEFAULT_GAMMA):
    """Analytic gradient of the barrier-augmented objective over (lambda, c).

    Returns (dlam, dc).  Counts are treated as constants (they are
    piecewise constant in the ranks), matching the objective used by fit.
    """
    params.require_domain()
    rs = stats.rv.sorted_values if ranks_sorted is None else np.asarray(ranks_sorted, float)
    lam, c = params.lam, params.c
    n = stats.n
    P = _power_table(rs, c)
    denom = 1.0 - P + gamma
    expo = (-ZETA + rs)[:, None]
    # d/dc_l: sum_i (-2+r_i) [S/c_l - Sbar * c^(-3+r)/denom]
    dc = np.sum(expo * (stats.S_f / c[None, :] - stats.Sbar_f * (P / c[None, :]) / denom),
                axis=0)
    dlam = -float(rs.sum()) + n / lam - n * math.exp(-lam) / (-math.expm1(-lam))
    dc += _barrier_gradient(c)
    plam, pc = _prior_gradient(params, priors)
    return dlam + plam, dc + pc


def rank_gradient(stats: PartitionStats, params: ModelParams, *,
                  ranks_sorted: np.ndarray = None,
                  gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """d objective / d r_(i) at each sorted position, counts held fixed."""
    params.require_domain()
    rs = stats.rv.sorted_values if ranks_sorted is None else np.asarray(ranks_sorted, float)
    P = _power_table(rs, params.c)
    denom = 1.0 - P + gamma
    logc = np.log(params.c)
    per_layer = logc[None, :] * (stats.S_f - stats.Sbar_f * P / denom)
    return per_layer.sum(axis=1) - params.lam


def theta_gradient(stats: PartitionStats, params: ModelParams, theta: RankMapParams,
                   X: np.ndarray, *, gamma: float = DEFAULT_GAMMA):
    """Chain the rank gradient through the logistic map; returns (dw, db)."""
    r = theta.ranks(X)
    rs = r[stats.rv.order]
    dr_sorted = rank_gradient(stats, params, ranks_sorted=rs, gamma=gamma)
    dr = np.empty_like(dr_sorted)
    dr[stats.rv.order] = dr_sorted          # back to node order
    sig = dr * r * (1.0 - r)
    return X.T @ sig, float(sig.sum())


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitOptions:
    step: float = 1e-3
    epochs: int = 10
    seed: int = 0
    gamma: float = DEFAULT_GAMMA
    max_halvings: int = 50
    ascent_tol: float = 1e-9
    init_lam: float = 1.0
    init_c: tuple = None       # defaults to 1 + 0.5 * (1..L)
    init_scale: float = 0.01   # endogenous theta init magnitude


@dataclass
class FitResult:
    params: ModelParams
    ranks: RankVector
    mode: str
    ll_trace: list
    objective_trace: list
    theta: RankMapParams = None
    aborted: bool = False

    @property
    def final_ll(self) -> float:
        return self.ll_trace[-1]

    def to_dict(self, label_map_ref: str = None) -> dict:
        out = self.params.to_dict()
        out.update({
            "c0": (self.params.c - 1.0).tolist(),
            "rank_source": self.mode,
            "ll_trace": self.ll_trace,
            "label_map_ref": label_map_ref,
        })
        if self.theta is not None:
            out["theta"] = {"w": self.theta.w.tolist(), "b": self.theta.b}
        return out


def _default_init(cfg: LayerConfig, opt: FitOptions) -> ModelParams:
    if opt.init_c is not None:
        c = np.asarray(opt.init_c, dtype=float)
    else:
        c = 1.0 + 0.5 * np.arange(1, cfg.L + 1)
    return ModelParams(lam=opt.init_lam, c=c, cfg=cfg)


def _feasible(lam: float, c: np.ndarray) -> bool:
    return (np.isfinite(lam) and lam >= LAMBDA_FLOOR and np.all(np.isfinite(c))
            and c[0] > 1.0 and bool(np.all(np.diff(c) > 0.0)))


def _backtrack(params, dlam, dc, value_fn, cur_value, opt):
    """Halve the step until the candidate is feasible and non-decreasing.

    Returns (params, value, moved).  A step that cannot improve after
    max_halvings leaves the iterate unchanged.
    """
    t = opt.step
    for _ in range(opt.max_halvings + 1):
        lam = params.lam + t * dlam
        c = params.c + t * dc
        if _feasible(lam, c):
            cand = replace(params, lam=lam, c=c)
            val = value_fn(cand)
            if np.isfinite(val) and val >= cur_value - opt.ascent_tol:
                return cand, val, True
        t *= 0.5
    return params, cur_value, False


def fit(H: Hypergraph, cfg: LayerConfig, *,
        ranks: RankVector = None,
        features: FeatureMatrix = None,
        priors: PriorConfig = NO_PRIORS,
        opt: FitOptions = FitOptions()) -> FitResult:
    """Constrained MLE/MAP by gradient ascent with backtracking.

    Exogenous mode (ranks given): counts are built once and (lambda, c)
    ascend the barrier-augmented objective; the trace is monotone up to
    the line-search tolerance.

    Endogenous mode (features given): ranks come from a logistic map on
    the features; they are re-sorted and the counts rebuilt after every
    step, with counts treated as constants inside each step.
    """
    if (ranks is None) == (features is None):
        raise ModelError("provide exactly one of ranks= or features=")
    params = _default_init(cfg, opt)
    if not params.in_domain():
        raise ModelError("infeasible initial parameters")

    if ranks is not None:
        stats = PartitionStats.build(H, ranks, cfg)

        def value_fn(p):
            return objective(stats, p, priors, gamma=opt.gamma)

        cur = value_fn(params)
        obj_trace = [cur]
        ll_trace = [log_likelihood(stats, params, gamma=opt.gamma)]
        for _ in range(opt.epochs):
            dlam, dc = gradient(stats, params, priors, gamma=opt.gamma)
            params, cur, _moved = _backtrack(params, dlam, dc, value_fn, cur, opt)
            obj_trace.append(cur)
            ll_trace.append(log_likelihood(stats, params, gamma=opt.gamma))
        return FitResult(params=params, ranks=ranks, mode="exogenous",
                         ll_trace=ll_trace, objective_trace=obj_trace)

    X = features.values
    if X.shape[0] != H.n:
        raise ModelError(f"feature matrix has {X.shape[0]} rows for a graph on {H.n} nodes")
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(opt.seed)))
    theta = RankMapParams(w=opt.init_scale * gen.standard_normal(X.shape[1]), b=0.0)

    rv = RankVector.from_values(theta.ranks(X))
    stats = PartitionStats.build(H, rv, cfg)
    ll_trace = [log_likelihood(stats, params, gamma=opt.gamma)]
    obj_trace = [objective(stats, params, priors, gamma=opt.gamma)]
    aborted = False
    for _ in range(opt.epochs):
        dlam, dc = gradient(stats, params, priors, gamma=opt.gamma)
        dw, db = theta_gradient(stats, params, theta, X, gamma=opt.gamma)

        def value_fn(p, th):
            rs = th.ranks(X)[stats.rv.order]
            return objective(stats, p, priors, ranks_sorted=rs, gamma=opt.gamma)

        cur = value_fn(params, theta)
        if not np.isfinite(cur):
            aborted = True
            break
        t = opt.step
        moved = False
        for _h in range(opt.max_halvings + 1):
            lam = params.lam + t * dlam
            c = params.c + t * dc
            cand_theta = RankMapParams(w=theta.w + t * dw, b=theta.b + t * db)
            if _feasible(lam, c):
                cand = replace(params, lam=lam, c=c)
                val = value_fn(cand, cand_theta)
                if np.isfinite(val) and val >= cur - opt.ascent_tol:
                    params, theta, moved = cand, cand_theta, True
                    break
            t *= 0.5
        # re-sort ranks and rebuild counts for the next step
        rv = RankVector.from_values(theta.ranks(X))
        stats = PartitionStats.build(H, rv, cfg)
        ll_trace.append(log_likelihood(stats, params, gamma=opt.gamma))
        obj_trace.append(objective(stats, params, priors, gamma=opt.gamma))
        if not moved and not np.isfinite(obj_trace[-1]):
            aborted = True
            break
    return FitResult(params=params, ranks=rv, mode="endogenous",
                     ll_trace=ll_trace, objective_trace=obj_trace,
                     theta=theta, aborted=aborted)
