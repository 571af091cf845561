"""Down-up walk engines and mixing diagnostics.

One step of the down-up walk removes a uniformly random free element of the
current facet and resamples its replacement from the conditional distribution
of the slice given the remainder; the removed element always remains a
candidate, so a step may be a self-loop.  States carry incremental coverage
counters so a step costs O(side * degree) at worst, and chains are a pure
function of (slice, config seed).

Exact transition matrices are assembled from the facet enumeration alone
(grouping facets by shared codimension-1 faces), deliberately not reusing the
stepping code, so the two implementations check each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .rng import UniformBuffer, rng_stream
from .slices import (ENUMERATION_CAP, EnumerationCapError, OneSidedSlice, RegularSlice,
                     Slice, SliceError, TwoSidedSlice, exact_distribution,
                     facet_log_weight, greedy_facet)

Rand = Callable[[], float]


class InitialStateError(RuntimeError):
    """Greedy restarts exhausted; parameters are near the feasibility frontier."""


@dataclass(eq=False)
class ChainState:
    """Current facet plus the incremental bookkeeping the steppers need.

    ``free_x``/``free_y`` hold the non-pinned facet members (only ``free_x``
    for the single-set families).  ``cover_x[i]`` counts facet members
    adjacent to x_i (for the two-sided family these count opposite-side
    members; for the others, members of the single set).  ``in_x``/``in_y``
    are membership flags including pinned vertices.
    """

    slc: Slice
    free_x: list[int]
    free_y: list[int]
    in_x: list[bool]
    in_y: list[bool]
    cover_x: list[int]
    cover_y: list[int]
    steps: int = 0

    def facet(self):
        if isinstance(self.slc, TwoSidedSlice):
            xs = tuple(sorted(set(self.free_x) | self.slc.pinned_x))
            ys = tuple(sorted(set(self.free_y) | self.slc.pinned_y))
            return (xs, ys)
        pinned = self.slc.pinned
        return tuple(sorted(set(self.free_x) | pinned))

    def recount_ok(self) -> bool:
        """Recompute every counter from scratch and compare with the running ones."""
        fresh = _make_state(self.slc, self.facet())
        return (fresh.cover_x == self.cover_x and fresh.cover_y == self.cover_y
                and fresh.in_x == self.in_x and fresh.in_y == self.in_y
                and sorted(fresh.free_x) == sorted(self.free_x)
                and sorted(fresh.free_y) == sorted(self.free_y))


def _make_state(slc: Slice, facet) -> ChainState:
    if isinstance(slc, TwoSidedSlice):
        xs, ys = facet
        g = slc.graph
        n = g.n_side
        in_x = [False] * n
        in_y = [False] * n
        for i in xs:
            in_x[i] = True
        for j in ys:
            in_y[j] = True
        cover_x = [0] * n
        cover_y = [0] * n
        for j in ys:
            for i in g.adj_y[j]:
                cover_x[i] += 1
        for i in xs:
            for j in g.adj_x[i]:
                cover_y[j] += 1
        if any(cover_x[i] for i in xs) or any(cover_y[j] for j in ys):
            raise SliceError("facet is not an independent set")
        return ChainState(slc, [i for i in xs if i not in slc.pinned_x],
                          [j for j in ys if j not in slc.pinned_y],
                          in_x, in_y, cover_x, cover_y)
    if isinstance(slc, OneSidedSlice):
        g = slc.graph
        n = g.n_side
        in_x = [False] * n
        for i in facet:
            in_x[i] = True
        cover_y = [0] * n
        for i in facet:
            for j in g.adj_x[i]:
                cover_y[j] += 1
        return ChainState(slc, [i for i in facet if i not in slc.pinned], [],
                          in_x, [], [], cover_y)
    g = slc.graph
    in_v = [False] * g.n
    cover = [0] * g.n
    for v in facet:
        in_v[v] = True
        for u in g.adj[v]:
            cover[u] += 1
    if any(cover[v] for v in facet):
        raise SliceError("facet is not an independent set")
    return ChainState(slc, [v for v in facet if v not in slc.pinned], [],
                      in_v, [], cover, [])


def greedy_initial_state(slc: Slice, rng: np.random.Generator,
                         restarts: int = 256) -> ChainState:
    """Randomized greedy facet construction with restarts.

    One-sided slices always succeed in one draw; for the constrained families
    an exhausted budget signals parameters near or beyond the feasibility
    frontier (the slice may have no facets at all).
    """
    facet = greedy_facet(slc, rng, restarts=restarts)
    if facet is None:
        raise InitialStateError(
            f"no facet found in {restarts} greedy restarts; "
            "slice parameters may be infeasible")
    return _make_state(slc, facet)


# -- single steps ---------------------------------------------------------------


def down_up_step(slc: Slice, state: ChainState, rng: np.random.Generator) -> ChainState:
    """One exact down-up transition, mutating and returning ``state``."""
    _step(slc, state, rng.random)
    return state


def _step(slc: Slice, state: ChainState, rand: Rand) -> None:
    if isinstance(slc, OneSidedSlice):
        _step_one_sided(slc, state, rand)
    elif isinstance(slc, TwoSidedSlice):
        _step_two_sided(slc, state, rand)
    else:
        _step_regular(slc, state, rand)
    state.steps += 1


def _step_one_sided(slc: OneSidedSlice, state: ChainState, rand: Rand) -> None:
    g = slc.graph
    adj = g.adj_x
    free = state.free_x
    in_x = state.in_x
    cover = state.cover_y
    pos = int(rand() * len(free))
    x_out = free[pos]
    in_x[x_out] = False
    for j in adj[x_out]:
        cover[j] -= 1
    # Replacement weight of x' is (1+fugacity)^(-#uncovered neighbors of x').
    table = _weight_table(slc)
    cands: list[int] = []
    weights: list[float] = []
    total = 0.0
    for x in range(g.n_side):
        if in_x[x]:
            continue
        e = 0
        for j in adj[x]:
            if cover[j] == 0:
                e += 1
        w = table[e]
        cands.append(x)
        weights.append(w)
        total += w
    if total <= 0.0:  # all weights underflowed; redo with the exponent shift
        exps = []
        for x in cands:
            e = 0
            for j in adj[x]:
                if cover[j] == 0:
                    e += 1
            exps.append(e)
        emin = min(exps)
        base = 1.0 + slc.fugacity
        weights = [base ** (emin - e) for e in exps]
        total = sum(weights)
    r = rand() * total
    acc = 0.0
    x_new = cands[-1]
    for x, w in zip(cands, weights):
        acc += w
        if r < acc:
            x_new = x
            break
    in_x[x_new] = True
    for j in adj[x_new]:
        cover[j] += 1
    free[pos] = x_new


_WEIGHT_TABLES: dict[tuple[int, float], tuple[float, ...]] = {}


def _weight_table(slc: OneSidedSlice) -> tuple[float, ...]:
    key = (slc.graph.degree, slc.fugacity)
    table = _WEIGHT_TABLES.get(key)
    if table is None:
        base = 1.0 + slc.fugacity
        table = tuple(base ** (-e) for e in range(slc.graph.degree + 1))
        _WEIGHT_TABLES[key] = table
    return table


def _step_two_sided(slc: TwoSidedSlice, state: ChainState, rand: Rand) -> None:
    g = slc.graph
    nx = len(state.free_x)
    t = int(rand() * (nx + len(state.free_y)))
    if t < nx:
        free, in_side, cover_same, cover_opp, adj = (
            state.free_x, state.in_x, state.cover_x, state.cover_y, g.adj_x)
    else:
        t -= nx
        free, in_side, cover_same, cover_opp, adj = (
            state.free_y, state.in_y, state.cover_y, state.cover_x, g.adj_y)
    v_out = free[t]
    in_side[v_out] = False
    # Removing v does not change cover_same (it counts opposite-side members).
    cands = [v for v in range(g.n_side) if not in_side[v] and cover_same[v] == 0]
    v_new = cands[int(rand() * len(cands))]
    in_side[v_new] = True
    free[t] = v_new
    if v_new != v_out:
        for u in adj[v_out]:
            cover_opp[u] -= 1
        for u in adj[v_new]:
            cover_opp[u] += 1


def _step_regular(slc: RegularSlice, state: ChainState, rand: Rand) -> None:
    g = slc.graph
    free = state.free_x
    in_v = state.in_x
    cover = state.cover_x
    pos = int(rand() * len(free))
    v_out = free[pos]
    in_v[v_out] = False
    for u in g.adj[v_out]:
        cover[u] -= 1
    cands = [v for v in range(g.n) if not in_v[v] and cover[v] == 0]
    v_new = cands[int(rand() * len(cands))]
    in_v[v_new] = True
    for u in g.adj[v_new]:
        cover[u] += 1
    free[pos] = v_new


# -- chains -----------------------------------------------------------------------


@dataclass(frozen=True)
class ChainConfig:
    """Run parameters; burn-in defaults to half the steps, thinning to the
    number of free facet elements."""

    steps: int
    seed: int
    lazy: bool = True
    burn_in: int | None = None
    thinning: int | None = None
    oracle_cap: int = 20_000  # enumerate the exact law for TV when below this
    gap_cap: int = 512        # build the exact chain matrix when below this

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.thinning is not None and self.thinning < 1:
            raise ValueError("thinning must be at least 1")


@dataclass(frozen=True)
class MixingReport:
    empirical_tv: float | None
    exact_gap: float | None
    autocorr_lag1: float | None
    samples: int
    steps: int


def run_chain(slc: Slice, config: ChainConfig, initial: ChainState | None = None):
    """Run a (lazy) down-up chain; returns (samples, MixingReport).

    Samples are facets collected every ``thinning`` steps after burn-in.  The
    report includes empirical total variation against the enumerated law and
    the exact chain's spectral gap whenever those oracles fit their caps.
    Deterministic given (slice, config, initial).
    """
    init_rng = rng_stream(config.seed, 0)
    state = initial if initial is not None else greedy_initial_state(slc, init_rng)
    burn_in = config.steps // 2 if config.burn_in is None else config.burn_in
    thinning = config.thinning if config.thinning is not None else max(1, slc.free_size)
    buf = UniformBuffer(rng_stream(config.seed, 1))
    rand = buf.next
    lazy = config.lazy
    samples = []
    ref = _member_set(state)
    series: list[int] = []
    for t in range(1, config.steps + 1):
        if not lazy or rand() >= 0.5:
            _step(slc, state, rand)
        else:
            state.steps += 1
        if t > burn_in and (t - burn_in) % thinning == 0:
            f = state.facet()
            samples.append(f)
            series.append(len(ref & _facet_set(slc, f)))
    if not samples:
        samples = [state.facet()]
    tv = _oracle_tv(slc, samples, config.oracle_cap)
    gap = _oracle_gap(slc, config)
    auto = _lag1_autocorr(series)
    return samples, MixingReport(tv, gap, auto, len(samples), config.steps)


def _member_set(state: ChainState) -> frozenset:
    return _facet_set(state.slc, state.facet())


def _facet_set(slc: Slice, facet) -> frozenset:
    if isinstance(slc, TwoSidedSlice):
        return frozenset((0, i) for i in facet[0]) | frozenset((1, j) for j in facet[1])
    return frozenset(facet)


def _oracle_tv(slc: Slice, samples: Sequence, cap: int) -> float | None:
    try:
        facets, probs = exact_distribution(slc, cap)
    except EnumerationCapError:
        return None
    counts: dict = {}
    for f in samples:
        counts[f] = counts.get(f, 0) + 1
    hist = np.array([counts.get(f, 0) for f in facets], dtype=float)
    if hist.sum() != len(samples):
        raise SliceError("chain visited a facet outside the enumerated slice")
    return tv_distance(hist, probs)


def _oracle_gap(slc: Slice, config: ChainConfig) -> float | None:
    try:
        facets, p, probs = exact_transition_matrix(slc, cap=config.gap_cap)
    except EnumerationCapError:
        return None
    if config.lazy:
        p = 0.5 * (np.eye(len(facets)) + p)
    _, _, gap = spectral_gap(p, probs)
    return gap


def _lag1_autocorr(series: Sequence[int]) -> float | None:
    if len(series) < 3:
        return None
    s = np.asarray(series, dtype=float)
    s = s - s.mean()
    denom = float(s @ s)
    if denom == 0.0:
        return 0.0
    return float(s[1:] @ s[:-1]) / denom


# -- exact oracles ------------------------------------------------------------------


def exact_transition_matrix(slc: Slice, cap: int = ENUMERATION_CAP):
    """(facets, P, stationary) for the exact non-lazy down-up chain.

    Built purely from the facet enumeration: facets are grouped by each
    codimension-1 face obtained by deleting a free element, and within a group
    the replacement law is the conditional of the slice weights.
    """
    facets, probs = exact_distribution(slc, cap)
    k_free = slc.free_size
    if k_free == 0:
        return facets, np.ones((1, 1)), probs
    if isinstance(slc, OneSidedSlice):
        logw = np.array([facet_log_weight(slc, f) for f in facets])
        weights = np.exp(logw - logw.max())
    else:
        weights = np.ones(len(facets))
    groups: dict = {}
    for i, f in enumerate(facets):
        for sub in _codim1_faces(slc, f):
            groups.setdefault(sub, []).append(i)
    p = np.zeros((len(facets), len(facets)))
    for members in groups.values():
        w = weights[members]
        cond = w / w.sum()
        for i in members:
            p[i, members] += cond / k_free
    return facets, p, probs


def _codim1_faces(slc: Slice, facet):
    if isinstance(slc, TwoSidedSlice):
        xs, ys = facet
        for i in xs:
            if i not in slc.pinned_x:
                yield (tuple(v for v in xs if v != i), ys, 0)
        for j in ys:
            if j not in slc.pinned_y:
                yield (xs, tuple(v for v in ys if v != j), 1)
    else:
        pinned = slc.pinned
        for v in facet:
            if v not in pinned:
                yield tuple(u for u in facet if u != v)


def spectral_gap(p: np.ndarray, pi: np.ndarray, reversibility_tol: float = 1e-10):
    """(lambda2, lambda_star, gap) of a reversible row-stochastic matrix.

    The matrix is symmetrized by conjugating with diag(pi)^(1/2); a detailed
    balance violation beyond ``reversibility_tol`` raises.  ``gap`` is
    1 - lambda2, the quantity that controls the lazy chain's mixing.
    """
    flow = pi[:, None] * p
    if np.max(np.abs(flow - flow.T)) > reversibility_tol:
        raise ValueError("matrix is not reversible with respect to pi")
    root = np.sqrt(pi)
    sym = flow / np.outer(root, root)
    vals = np.linalg.eigvalsh(sym)
    lam2 = float(vals[-2]) if len(vals) > 1 else float(vals[-1])
    lam_star = max(lam2, abs(float(vals[0])))
    return lam2, lam_star, 1.0 - lam2


def tv_distance(histogram: np.ndarray, exact: np.ndarray) -> float:
    """Half the L1 distance; the histogram is normalized if it holds counts."""
    h = np.asarray(histogram, dtype=float)
    total = h.sum()
    if total <= 0:
        raise ValueError("empty histogram")
    h = h / total
    e = np.asarray(exact, dtype=float)
    if h.shape != e.shape:
        raise ValueError("support indexing mismatch")
    return float(0.5 * np.abs(h - e).sum())


def format_facet(slc: Slice, facet) -> str:
    """Sample stream line: sorted side-tagged indices, e.g. ``x3 x7 | y1 y4``."""
    if isinstance(slc, TwoSidedSlice):
        xs = " ".join(f"x{i}" for i in facet[0])
        ys = " ".join(f"y{j}" for j in facet[1])
        return f"{xs} | {ys}".strip()
    if isinstance(slc, OneSidedSlice):
        return (" ".join(f"x{i}" for i in facet) + " |").strip()
    return " ".join(f"v{i}" for i in facet)
