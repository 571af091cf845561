"""Counting: exact brute-force oracles and sampling-based estimators.

The estimators reduce counting to sampling through links: at each level a
down-up chain on the current pinned slice estimates the marginal of a heavy
vertex, the vertex is pinned (passing to its link), and the telescoping
product of inverse marginals gives the count.  The heavy vertex is the argmax
of pilot-estimated marginals; an averaging argument guarantees the true max
marginal is at least (level size)/(side size), so the pilot only needs
constant-factor accuracy.

Exact oracles are kept deliberately independent of the estimators: the
partition function uses exact rational branch-and-bound, slice counts use
binomial convolution over one side, so estimator bugs cannot cancel.

All estimates are carried in log space; sums of positive terms use stable
log-sum-exp, and a positive linear combination of (1 +- eps)-accurate terms is
itself (1 +- eps)-accurate, so band terms are estimated at the full epsilon
with the confidence budget split across terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .graphs import BipartiteRegularGraph, RegularGraph, X
from .rng import UniformBuffer, rng_stream
from .slices import (OneSidedSlice, RegularSlice, Slice, SliceError, TwoSidedSlice,
                     link, one_sided_log_weight)
from .walks import InitialStateError, _step, greedy_initial_state

LOG_ZERO = float("-inf")


class DegenerateBandError(ValueError):
    """beta <= alpha after clamping: the one-sided bands vanish."""


class InsufficientSamplesError(RuntimeError):
    """A level marginal came out nonpositive; increase the budget."""


@dataclass(frozen=True)
class ThresholdParams:
    """Occupancy thresholds separating the two-sided and one-sided regimes."""

    alpha: float
    beta: float
    gamma: float
    ell: float
    fugacity: float
    degree: int

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta <= 1.0):
            raise ValueError("thresholds must lie in (0, 1]")
        if self.beta <= self.alpha:
            raise DegenerateBandError(
                "beta <= alpha: fugacity too small for a nonempty one-sided band")


def thresholds(degree: int, fugacity: float, gamma: float = 0.1,
               ell: float = 2.0) -> ThresholdParams:
    """alpha = log(degree)/((2+gamma) degree), beta = 4*fugacity, clamped to (0, 1]."""
    if degree < 3:
        raise ValueError("degree must be at least 3")
    if fugacity <= 0:
        raise ValueError("fugacity must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    alpha = min(math.log(degree) / ((2.0 + gamma) * degree), 1.0 - 1e-12)
    beta = min(4.0 * fugacity, 1.0)
    return ThresholdParams(alpha, beta, gamma, ell, fugacity, degree)


@dataclass(frozen=True)
class LevelTrace:
    pinned: tuple | int
    marginal: float
    samples: int


@dataclass(frozen=True)
class BandRecord:
    kind: str
    k_range: tuple[int, int]
    value_log: float
    samples: int


@dataclass(frozen=True)
class CountEstimate:
    """Point estimate in log space with its accuracy contract and audit trail."""

    log_value: float
    epsilon: float
    delta: float
    samples: int
    trace: tuple[LevelTrace, ...] = ()
    bands: tuple[BandRecord, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < 1.0 and 0.0 < self.delta < 1.0):
            raise ValueError("epsilon and delta must lie in (0, 1)")
        for t in self.trace:
            if not (0.0 < t.marginal <= 1.0):
                raise ValueError("traced marginals must lie in (0, 1]")

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


@dataclass(frozen=True)
class EstimatorConfig:
    """Budget knobs for the telescoping estimators.

    ``chain_scale`` multiplies the burn-in rule (free size) * (vertex count) *
    log(1/epsilon).  ``replicas`` independent chains are pooled per level so
    the pilot sees more than one greedy basin.  ``repetitions`` None selects a
    single z-budgeted pipeline down to delta = 1e-3 and a median of
    ceil(12 ln(1/delta)) constant-confidence pipelines below that.  Levels
    whose pinned slice enumerates within ``exact_marginal_cap`` facets use the
    exact conditional marginal instead of chain samples; this keeps tiny and
    possibly disconnected late links exact while leaving real state spaces to
    the sampler.
    """

    chain_scale: float = 20.0
    replicas: int = 4
    pilot_floor: int = 200
    safety: float = 3.0
    thin_scale: int = 2
    repetitions: int | None = None
    greedy_restarts: int = 256
    exact_marginal_cap: int = 32


def _z_quantile(delta: float) -> float:
    """Two-sided normal quantile via the rational approximation of Acklam."""
    p = 1.0 - delta / 2.0
    # Acklam's inverse normal CDF approximation, |relative error| < 1.2e-9
    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
    plow, phigh = 0.02425, 1 - 0.02425
    if p < plow:
        q = math.sqrt(-2 * math.log(p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)
    if p <= phigh:
        q = p - 0.5
        r = q * q
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1)
    q = math.sqrt(-2 * math.log(1 - p))
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)


# -- exact oracles -----------------------------------------------------------------


def _global_adjacency(g) -> list[list[int]]:
    if isinstance(g, RegularGraph):
        return [list(row) for row in g.adj]
    n = g.n_side
    out = [[n + j for j in row] for row in g.adj_x]
    out.extend([list(row) for row in g.adj_y])
    return out


def exact_partition(g, fugacity: float, size_cap: int = 40) -> float:
    """Exact hardcore partition function by rational branch-and-bound.

    Recursion on a highest-degree vertex v: Z(G) = Z(G - v) + fugacity *
    Z(G - N[v]), with connected components multiplied and memoized on the
    surviving vertex bitmask.  Arithmetic is exact over the rationals (any
    float fugacity is dyadic), converted to float only at the end.
    """
    adj = _global_adjacency(g)
    n = len(adj)
    if n > size_cap:
        raise ValueError(f"{n} vertices exceed the exact-partition cap {size_cap}")
    lam = Fraction(fugacity)
    masks = [0] * n
    for v, row in enumerate(adj):
        for u in row:
            masks[v] |= 1 << u
    memo: dict[int, Fraction] = {}

    def component_of(mask: int) -> int:
        start = (mask & -mask).bit_length() - 1
        comp = 1 << start
        frontier = [start]
        while frontier:
            v = frontier.pop()
            new = masks[v] & mask & ~comp
            while new:
                bit = new & -new
                comp |= bit
                frontier.append(bit.bit_length() - 1)
                new ^= bit
        return comp

    def z(mask: int) -> Fraction:
        if mask == 0:
            return Fraction(1)
        cached = memo.get(mask)
        if cached is not None:
            return cached
        comp = component_of(mask)
        if comp != mask:
            result = z(comp) * z(mask & ~comp)
        else:
            best, best_deg = -1, -1
            m = mask
            while m:
                bit = m & -m
                v = bit.bit_length() - 1
                deg = (masks[v] & mask).bit_count()
                if deg > best_deg:
                    best, best_deg = v, deg
                m ^= bit
            if best_deg == 0:
                result = (1 + lam) ** mask.bit_count()
            else:
                without = mask & ~(1 << best)
                result = z(without) + lam * z(without & ~masks[best])
        memo[mask] = result
        return result

    return float(z((1 << n) - 1))


def exact_slice_count(g: BipartiteRegularGraph, k_x: int, k_y: int,
                      cap: int = 10 ** 6) -> int:
    """|{independent I : |I ∩ X| = k_x, |I ∩ Y| = k_y}| by one-side enumeration.

    X carries no internal edges, so every k_x-subset S of X is independent and
    contributes binom(|Y \\ N[S]|, k_y) completions.
    """
    n = g.n_side
    if k_x > n or k_y > n:
        return 0
    if math.comb(n, k_x) > cap:
        raise ValueError("enumeration cap exceeded")
    total = 0
    for s in combinations(range(n), k_x):
        uncovered = n - len(g.neighbor_set(X, s))
        total += math.comb(uncovered, k_y)
    return total


def exact_one_sided_partition(g: BipartiteRegularGraph, k: int, fugacity: float,
                              cap: int = 10 ** 6) -> float:
    """Brute-force sum of fugacity^k (1+fugacity)^{|Y \\ N[S]|} over k-subsets."""
    n = g.n_side
    if math.comb(n, k) > cap:
        raise ValueError("enumeration cap exceeded")
    terms = []
    for s in combinations(range(n), k):
        uncovered = n - len(g.neighbor_set(X, s))
        terms.append(fugacity ** k * (1.0 + fugacity) ** uncovered)
    return math.fsum(terms)


def occupancy_profile(g: BipartiteRegularGraph, fugacity: float) -> np.ndarray:
    """Matrix W with W[a, b] = sum of fugacity^{a+b} over independent I with
    |I ∩ X| = a, |I ∩ Y| = b.  Row sums over b reproduce the one-sided Z_k."""
    n = g.n_side
    if n > 22:
        raise ValueError("profile enumeration limited to n_side <= 22")
    counts = np.zeros((n + 1, n + 1), dtype=float)
    for size in range(n + 1):
        for s in combinations(range(n), size):
            uncovered = n - len(g.neighbor_set(X, s))
            for b in range(uncovered + 1):
                counts[size, b] += math.comb(uncovered, b)
    powers = fugacity ** np.arange(n + 1, dtype=float)
    return counts * np.outer(powers, powers)


# -- chain-based marginal estimation --------------------------------------------------


def _burn_in(slc: Slice, epsilon: float, config: EstimatorConfig) -> int:
    if isinstance(slc, RegularSlice):
        verts = slc.graph.n
    else:
        verts = 2 * slc.graph.n_side
    return int(config.chain_scale * max(1, slc.free_size) * verts
               * max(1.0, math.log(1.0 / epsilon)))


def _membership_counts(slc: Slice, n_samples: int, epsilon: float, seed: int,
                       path: tuple[int, ...], config: EstimatorConfig):
    """Pool thinned membership indicators from ``replicas`` independent chains.

    Returns (counts_x, counts_y, n_collected); counts index free vertices by
    side.  The replica split is the documented (seed, replica) stream split.
    """
    n = slc.graph.n if isinstance(slc, RegularSlice) else slc.graph.n_side
    counts_x = np.zeros(n, dtype=np.int64)
    counts_y = np.zeros(n, dtype=np.int64)
    replicas = max(1, config.replicas)
    per = (n_samples + replicas - 1) // replicas
    burn = _burn_in(slc, epsilon, config)
    thin = max(1, config.thin_scale * slc.free_size)
    collected = 0
    for rep in range(replicas):
        init_rng = rng_stream(seed, *path, rep, 0)
        state = greedy_initial_state(slc, init_rng, restarts=config.greedy_restarts)
        rand = UniformBuffer(rng_stream(seed, *path, rep, 1)).next
        for _ in range(burn):
            _step(slc, state, rand)
        for _ in range(per):
            for _ in range(thin):
                _step(slc, state, rand)
            for v in state.free_x:
                counts_x[v] += 1
            for v in state.free_y:
                counts_y[v] += 1
            collected += 1
    return counts_x, counts_y, collected


def _pick_heavy(counts_x, counts_y, n_collected, slc: Slice):
    """Argmax pilot rule; ties break lexicographically for determinism."""
    best = None
    best_count = -1
    if isinstance(slc, TwoSidedSlice):
        candidates = [((0, v), counts_x[v]) for v in range(len(counts_x))]
        candidates += [((1, v), counts_y[v]) for v in range(len(counts_y))]
    else:
        candidates = [((0, v), counts_x[v]) for v in range(len(counts_x))]
    for label, c in candidates:
        if c > best_count:
            best, best_count = label, int(c)
    if best_count <= 0:
        raise InsufficientSamplesError("pilot saw no facet members")
    return best, best_count


def _pin(slc: Slice, label) -> Slice:
    side, v = label
    if isinstance(slc, TwoSidedSlice):
        face = ((v,), ()) if side == 0 else ((), (v,))
        return link(slc, face, check_nonempty=False)
    return link(slc, (v,), check_nonempty=False)


def _exact_marginal(slc: Slice, cap: int):
    """(argmax label, exact marginal) from the enumerated conditional, or None."""
    from .slices import EnumerationCapError, exact_distribution

    try:
        facets, probs = exact_distribution(slc, cap)
    except EnumerationCapError:
        return None
    n = slc.graph.n if isinstance(slc, RegularSlice) else slc.graph.n_side
    marg_x = np.zeros(n)
    marg_y = np.zeros(n)
    if isinstance(slc, TwoSidedSlice):
        for f, p in zip(facets, probs):
            for v in f[0]:
                if v not in slc.pinned_x:
                    marg_x[v] += p
            for v in f[1]:
                if v not in slc.pinned_y:
                    marg_y[v] += p
    else:
        pinned = slc.pinned
        for f, p in zip(facets, probs):
            for v in f:
                if v not in pinned:
                    marg_x[v] += p
    label, _ = _pick_heavy((marg_x * 2 ** 40).astype(np.int64),
                           (marg_y * 2 ** 40).astype(np.int64), 1, slc)
    side, v = label
    return label, float(marg_x[v] if side == 0 else marg_y[v])


def _telescope_log(slc: Slice, epsilon: float, per_level_z2: float, seed: int,
                   rep: int, config: EstimatorConfig):
    """One telescoping pipeline: returns (log of prod 1/p_hat, trace, samples, final slice)."""
    levels = slc.free_size
    log_value = 0.0
    trace: list[LevelTrace] = []
    total = 0
    n = slc.graph.n if isinstance(slc, RegularSlice) else slc.graph.n_side
    for level in range(levels):
        exact = _exact_marginal(slc, config.exact_marginal_cap) \
            if config.exact_marginal_cap > 0 else None
        if exact is not None:
            label, p_hat = exact
            got = 0
        else:
            pilot_n = max(config.pilot_floor, math.ceil(10 * n * math.log(max(2, n))))
            cx, cy, got = _membership_counts(slc, pilot_n, epsilon, seed,
                                             (rep, level, 0), config)
            label, count = _pick_heavy(cx, cy, got, slc)
            p_pilot = min(1.0 - 1e-12, max(count / got, 1.0 / (4.0 * n)))
            need = math.ceil(config.safety * per_level_z2 * levels
                             * (1.0 / p_pilot - 1.0) / (epsilon * epsilon))
            need = max(need, 64)
            cx, cy, got = _membership_counts(slc, need, epsilon, seed,
                                             (rep, level, 1), config)
            side, v = label
            hits = int(cx[v]) if side == 0 else int(cy[v])
            if hits <= 0:
                raise InsufficientSamplesError(
                    f"marginal estimate for vertex {label} came out zero")
            p_hat = hits / got
            total += got + pilot_n
            # second-order bias correction for E[1/p_hat] = (1/p)(1 + (1-p)/(pN))
            log_value -= math.log1p((1.0 - p_hat) / hits)
        log_value -= math.log(p_hat)
        trace.append(LevelTrace(label if isinstance(slc, TwoSidedSlice) else label[1],
                                p_hat, got))
        slc = _pin(slc, label)
    return log_value, trace, total, slc


def _repetitions(delta: float, config: EstimatorConfig) -> int:
    # z-budgeted single pipelines already scale like log(1/delta) through
    # z(delta)^2; the median-of-means fallback is for extreme confidence only
    if config.repetitions is not None:
        return max(1, config.repetitions)
    if delta >= 1e-3:
        return 1
    return math.ceil(12.0 * math.log(1.0 / delta))


def _run_estimator(slc: Slice, epsilon: float, delta: float, seed: int,
                   config: EstimatorConfig, base_log):
    reps = _repetitions(delta, config)
    z2 = _z_quantile(delta) ** 2 if reps == 1 else _z_quantile(0.25) ** 2
    runs = []
    for rep in range(reps):
        log_v, trace, total, final = _telescope_log(slc, epsilon, z2, seed, rep, config)
        runs.append((log_v + base_log(final), trace, total))
    runs.sort(key=lambda r: r[0])
    mid = runs[len(runs) // 2]
    samples = sum(r[2] for r in runs)
    return mid[0], tuple(mid[1]), samples


def estimate_two_sided_count(g: BipartiteRegularGraph, k_x: int, k_y: int,
                             epsilon: float, delta: float, seed: int,
                             config: EstimatorConfig | None = None) -> CountEstimate:
    """Estimate the number of independent sets with the given side sizes.

    Telescopes over links: pin the pilot-argmax vertex, estimate its marginal
    by pooled down-up chains, multiply the inverse marginals; the empty base
    face contributes one.  Meets the (epsilon, delta) contract via z-budgeted
    per-level sampling (median over repetitions when delta < 0.05).
    """
    config = config or EstimatorConfig()
    slc = TwoSidedSlice(g, k_x, k_y)
    if k_x == 0 and k_y == 0:
        return CountEstimate(0.0, epsilon, delta, 0, seed=seed)
    log_v, trace, samples = _run_estimator(slc, epsilon, delta, seed, config,
                                           base_log=lambda s: 0.0)
    return CountEstimate(log_v, epsilon, delta, samples, trace, seed=seed)


def estimate_one_sided_partition(g: BipartiteRegularGraph, k: int, fugacity: float,
                                 epsilon: float, delta: float, seed: int,
                                 config: EstimatorConfig | None = None) -> CountEstimate:
    """Estimate Z_k = sum over k-subsets S of X of fugacity^k (1+fugacity)^{|Y\\N[S]|}.

    Same telescoping as the two-sided count; the fully pinned base case is
    evaluated exactly by the closed-form weight.
    """
    config = config or EstimatorConfig()
    slc = OneSidedSlice(g, k, fugacity)

    def base_log(final: Slice) -> float:
        return one_sided_log_weight(final, sorted(final.pinned))

    if k == 0:
        return CountEstimate(g.n_side * math.log1p(fugacity), epsilon, delta, 0, seed=seed)
    if k == g.n_side:
        return CountEstimate(one_sided_log_weight(slc, range(g.n_side)),
                             epsilon, delta, 0, seed=seed)
    log_v, trace, samples = _run_estimator(slc, epsilon, delta, seed, config, base_log)
    return CountEstimate(log_v, epsilon, delta, samples, trace, seed=seed)


def _mirror(g: BipartiteRegularGraph) -> BipartiteRegularGraph:
    return BipartiteRegularGraph(g.n_side, g.degree, g.adj_y, g.adj_x)


def _logsumexp(values) -> float:
    finite = [v for v in values if v != LOG_ZERO]
    if not finite:
        return LOG_ZERO
    m = max(finite)
    return m + math.log(math.fsum(math.exp(v - m) for v in finite))


def estimate_partition_hat(g: BipartiteRegularGraph, fugacity: float,
                           epsilon: float, delta: float, seed: int,
                           thr: ThresholdParams | None = None,
                           config: EstimatorConfig | None = None) -> CountEstimate:
    """Banded approximation to the partition function, estimated band by band.

    Three terms: the two-sided grid k_x, k_y <= floor(alpha n); the X-side
    one-sided band floor(alpha n) < k <= floor(beta n); the mirrored Y-side
    band.  Sets heavy on both sides in the band are double counted by
    construction; that discrepancy is part of the approximation, not corrected
    here, and is reported by the exact oracle ``double_count_band``.

    Each inner estimate runs at the full epsilon (positive sums preserve
    relative error) with the confidence budget split evenly across terms.
    An infeasible inner slice contributes zero.
    """
    config = config or EstimatorConfig()
    thr = thr or thresholds(g.degree, fugacity)
    n = g.n_side
    a_cap = min(math.floor(thr.alpha * n), n)
    b_cap = min(math.floor(thr.beta * n), n)
    log_lam = math.log(fugacity)
    grid = [(kx, ky) for kx in range(a_cap + 1) for ky in range(a_cap + 1)]
    band = list(range(a_cap + 1, b_cap + 1))
    n_terms = max(1, len(grid) + 2 * len(band))
    delta_inner = delta / n_terms
    bands: list[BandRecord] = []
    total_samples = 0

    two_logs = []
    for t, (kx, ky) in enumerate(grid):
        try:
            est = estimate_two_sided_count(g, kx, ky, epsilon, delta_inner,
                                           seed=seed + 1000003 * (t + 1), config=config)
            two_logs.append(est.log_value + (kx + ky) * log_lam)
            total_samples += est.samples
        except (InitialStateError, SliceError):
            two_logs.append(LOG_ZERO)
    two_log = _logsumexp(two_logs)
    bands.append(BandRecord("two-sided", (0, a_cap), two_log, total_samples))

    for kind, graph in (("one-sided-x", g), ("one-sided-y", _mirror(g))):
        logs = []
        used = 0
        for t, k in enumerate(band):
            est = estimate_one_sided_partition(graph, k, fugacity, epsilon, delta_inner,
                                               seed=seed + 2000003 * (t + 1)
                                               + (0 if kind.endswith("x") else 1),
                                               config=config)
            logs.append(est.log_value)
            used += est.samples
        value = _logsumexp(logs) if logs else LOG_ZERO
        bands.append(BandRecord(kind, (a_cap + 1, b_cap), value, used))
        total_samples += used

    log_total = _logsumexp([b.value_log for b in bands])
    return CountEstimate(log_total, epsilon, delta, total_samples,
                         bands=tuple(bands), seed=seed)


def exact_partition_hat(g: BipartiteRegularGraph, fugacity: float,
                        thr: ThresholdParams) -> tuple[float, float]:
    """(exact banded approximation, exact double-counted band weight).

    The first value is what the banded estimator targets; the second is the
    weight of sets with both side occupancies inside (alpha, beta], which the
    construction counts twice.
    """
    w = occupancy_profile(g, fugacity)
    n = g.n_side
    a_cap = min(math.floor(thr.alpha * n), n)
    b_cap = min(math.floor(thr.beta * n), n)
    t1 = float(w[: a_cap + 1, : a_cap + 1].sum())
    t2 = float(w[a_cap + 1: b_cap + 1, :].sum())
    t3 = float(w[:, a_cap + 1: b_cap + 1].sum())
    double = float(w[a_cap + 1: b_cap + 1, a_cap + 1: b_cap + 1].sum())
    return t1 + t2 + t3, double
