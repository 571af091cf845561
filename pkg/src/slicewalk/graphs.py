"""Graph substrate: pairing-model generators, neighborhoods, complements.

Vertices are referenced as (side, index) with sides ``"x"`` and ``"y"`` for
bipartite graphs, 0-based on each side; plain 0-based integers for ordinary
regular graphs.  Graphs are immutable after construction and safe to share
across threads; generators are pure functions of (parameters, seed).

Random regular (bipartite) graphs come from the pairing model: a uniform
perfect matching on degree-many half-edge copies of every vertex, with
whole-sample rejection of any outcome containing a loop or multiedge, which
preserves exact uniformity over simple graphs.  Rejection is hopeless for
large degree (the acceptance rate decays like exp(-(d-1)^2/2)), so the raw
multigraph rows are exposed separately for experiments that are insensitive
to multiedges.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .rng import rng_stream

X = "x"
Y = "y"


class RejectionBudgetError(RuntimeError):
    """Pairing-model rejection failed to produce a simple graph in budget."""


class HalfEdge(NamedTuple):
    """Copy ``copy`` of vertex ``vertex`` in the pairing model."""

    vertex: int
    copy: int

    def encode(self, degree: int) -> int:
        return self.vertex * degree + self.copy

    @staticmethod
    def decode(code: int, degree: int) -> "HalfEdge":
        return HalfEdge(code // degree, code % degree)


def _as_sorted_tuples(adj: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(sorted(row)) for row in adj)


@dataclass(eq=False)
class BipartiteRegularGraph:
    """Simple degree-regular bipartite graph on sides X and Y of equal size."""

    n_side: int
    degree: int
    adj_x: tuple[tuple[int, ...], ...]  # y-neighbors of each x, sorted
    adj_y: tuple[tuple[int, ...], ...]  # x-neighbors of each y, sorted

    def validate(self) -> None:
        if self.n_side < 1:
            raise ValueError("n_side must be positive")
        if not 0 <= self.degree <= self.n_side:
            raise ValueError("degree must lie in [0, n_side]")
        if len(self.adj_x) != self.n_side or len(self.adj_y) != self.n_side:
            raise ValueError("adjacency length mismatch")
        for adj in (self.adj_x, self.adj_y):
            for row in adj:
                if len(row) != self.degree:
                    raise ValueError("vertex degree differs from the declared degree")
                if len(set(row)) != len(row):
                    raise ValueError("repeated edge")
                if row and (row[0] < 0 or row[-1] >= self.n_side):
                    raise ValueError("neighbor index out of range")
        for i, row in enumerate(self.adj_x):
            for j in row:
                if i not in self.adj_y[j]:
                    raise ValueError("adjacency lists are not mutually consistent")

    # -- neighborhoods -------------------------------------------------------

    def neighbors(self, side: str, i: int) -> tuple[int, ...]:
        adj = self.adj_x if side == X else self.adj_y
        if not 0 <= i < self.n_side:
            raise IndexError(f"vertex {side}{i} out of range")
        return adj[i]

    def neighbor_set(self, side: str, vertices: Iterable[int]) -> frozenset[int]:
        """Open neighborhood on the opposite side of a same-side vertex set."""
        adj = self.adj_x if side == X else self.adj_y
        out: set[int] = set()
        for i in vertices:
            if not 0 <= i < self.n_side:
                raise IndexError(f"vertex {side}{i} out of range")
            out.update(adj[i])
        return frozenset(out)

    def biadjacency(self) -> np.ndarray:
        """0/1 matrix B with B[i, j] = 1 iff x_i ~ y_j."""
        b = np.zeros((self.n_side, self.n_side), dtype=np.float64)
        for i, row in enumerate(self.adj_x):
            b[i, list(row)] = 1.0
        return b

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, row in enumerate(self.adj_x) for j in row]


@dataclass(eq=False)
class RegularGraph:
    """Simple degree-regular graph."""

    n: int
    degree: int
    adj: tuple[tuple[int, ...], ...]

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 <= self.degree < self.n:
            raise ValueError("degree must lie in [0, n)")
        if (self.n * self.degree) % 2 != 0:
            raise ValueError("n * degree must be even")
        if len(self.adj) != self.n:
            raise ValueError("adjacency length mismatch")
        for v, row in enumerate(self.adj):
            if len(row) != self.degree:
                raise ValueError("vertex degree differs from the declared degree")
            if len(set(row)) != len(row):
                raise ValueError("repeated edge")
            if v in row:
                raise ValueError("self-loop")
            for u in row:
                if not 0 <= u < self.n:
                    raise ValueError("neighbor index out of range")
                if v not in self.adj[u]:
                    raise ValueError("adjacency lists are not mutually consistent")

    def neighbors(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.n:
            raise IndexError(f"vertex {v} out of range")
        return self.adj[v]

    def neighbor_set(self, vertices: Iterable[int], *, closed: bool = False) -> frozenset[int]:
        verts = list(vertices)
        out: set[int] = set()
        for v in verts:
            if not 0 <= v < self.n:
                raise IndexError(f"vertex {v} out of range")
            out.update(self.adj[v])
        if closed:
            out.update(verts)
        else:
            out.difference_update(verts)
        return frozenset(out)

    @cached_property
    def masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << u for u in row) for row in self.adj)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for v, row in enumerate(self.adj):
            a[v, list(row)] = 1.0
        return a

    def edges(self) -> list[tuple[int, int]]:
        return [(v, u) for v, row in enumerate(self.adj) for u in row if v < u]


@dataclass(eq=False)
class BipartiteSubgraph:
    """Induced or pruned bipartite graph with its reindexing maps.

    ``x_vertices[i]`` / ``y_vertices[j]`` are the original indices of local
    vertex i / j; adjacency is in local indices and need not be regular.
    """

    x_vertices: tuple[int, ...]
    y_vertices: tuple[int, ...]
    adj_x: tuple[tuple[int, ...], ...]
    adj_y: tuple[tuple[int, ...], ...]

    @property
    def n_x(self) -> int:
        return len(self.x_vertices)

    @property
    def n_y(self) -> int:
        return len(self.y_vertices)

    def biadjacency(self) -> np.ndarray:
        b = np.zeros((self.n_x, self.n_y), dtype=np.float64)
        for i, row in enumerate(self.adj_x):
            b[i, list(row)] = 1.0
        return b

    def edge_count(self) -> int:
        return sum(len(row) for row in self.adj_x)


@dataclass(eq=False)
class InducedGraph:
    """Induced subgraph of a RegularGraph with its reindexing map."""

    vertices: tuple[int, ...]
    adj: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.vertices)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for v, row in enumerate(self.adj):
            a[v, list(row)] = 1.0
        return a


# -- pairing-model generators --------------------------------------------------


def pairing_bipartite_rows(n_side: int, degree: int, rng: np.random.Generator) -> np.ndarray:
    """One draw of the bipartite pairing model as an (n_side, degree) array.

    Row i holds the y-endpoints matched to the half-edge cloud of x_i; repeated
    entries within a row are multiedges.  Every multigraph neighborhood
    statistic can be read off these rows directly.
    """
    stubs = np.repeat(np.arange(n_side, dtype=np.int64), degree)
    rows = rng.permutation(stubs).reshape(n_side, degree)
    rows.sort(axis=1)
    return rows


def rows_are_simple(rows: np.ndarray) -> bool:
    """True iff no row of a sorted pairing-row array repeats an endpoint."""
    if rows.shape[1] <= 1:
        return True
    return bool(np.all(rows[:, 1:] != rows[:, :-1]))


def gen_bipartite_regular(n_side: int, degree: int, seed: int,
                          *, max_retries: int = 10_000) -> BipartiteRegularGraph:
    """Uniform simple degree-regular bipartite graph via pairing + rejection.

    Raises RejectionBudgetError when no simple outcome appears within
    ``max_retries`` attempts, which signals pathological parameters (degree
    close to n_side, or degree large enough that exp(-(d-1)^2/2) is
    negligible).
    """
    if n_side < 1:
        raise ValueError("n_side must be positive")
    if not 1 <= degree <= n_side:
        raise ValueError("degree must lie in [1, n_side]")
    rng = rng_stream(seed)
    for _ in range(max_retries):
        rows = pairing_bipartite_rows(n_side, degree, rng)
        if not rows_are_simple(rows):
            continue
        adj_x = tuple(tuple(int(j) for j in row) for row in rows)
        adj_y_sets: list[list[int]] = [[] for _ in range(n_side)]
        for i, row in enumerate(adj_x):
            for j in row:
                adj_y_sets[j].append(i)
        return BipartiteRegularGraph(n_side, degree, adj_x, _as_sorted_tuples(adj_y_sets))
    raise RejectionBudgetError(
        f"no simple bipartite graph in {max_retries} pairing attempts "
        f"(n_side={n_side}, degree={degree})")


def gen_regular(n: int, degree: int, seed: int,
                *, max_retries: int = 10_000) -> RegularGraph:
    """Uniform simple degree-regular graph via pairing + whole-sample rejection."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 1 <= degree < n:
        raise ValueError("degree must lie in [1, n)")
    if (n * degree) % 2 != 0:
        raise ValueError("n * degree must be even")
    rng = rng_stream(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), degree)
    for _ in range(max_retries):
        perm = rng.permutation(stubs)
        a, b = perm[0::2], perm[1::2]
        if np.any(a == b):
            continue  # self-loop
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue  # multiedge
        adj_sets: list[list[int]] = [[] for _ in range(n)]
        for u, v in zip(lo.tolist(), hi.tolist()):
            adj_sets[u].append(v)
            adj_sets[v].append(u)
        return RegularGraph(n, degree, _as_sorted_tuples(adj_sets))
    raise RejectionBudgetError(
        f"no simple regular graph in {max_retries} pairing attempts (n={n}, degree={degree})")


# -- set operations ------------------------------------------------------------


def closed_neighborhood(g, vertices: Iterable[int], side: str = X) -> frozenset:
    """N[S] = S together with every neighbor of S.

    For bipartite graphs the result is a frozenset of (side, index) labels,
    since S and its neighbors live on opposite sides; for regular graphs it is
    a frozenset of vertex indices.  Use ``neighbor_set`` for the open variant.
    """
    if isinstance(g, RegularGraph):
        return g.neighbor_set(vertices, closed=True)
    verts = list(vertices)
    opposite = Y if side == X else X
    return frozenset({(side, v) for v in verts}
                     | {(opposite, u) for u in g.neighbor_set(side, verts)})


def common_neighbors(g, side_or_u, u, v=None) -> frozenset[int]:
    """N(u) ∩ N(v) for two distinct same-side vertices.

    Call as ``common_neighbors(g, side, u, v)`` for bipartite graphs or
    ``common_neighbors(g, u, v)`` for regular graphs.
    """
    if isinstance(g, RegularGraph):
        u, v = side_or_u, u
        if u == v:
            raise ValueError("vertices must be distinct")
        return frozenset(g.neighbors(u)) & frozenset(g.neighbors(v))
    side = side_or_u
    if u == v:
        raise ValueError("vertices must be distinct")
    return frozenset(g.neighbors(side, u)) & frozenset(g.neighbors(side, v))


def bipartite_complement(g: BipartiteRegularGraph) -> BipartiteRegularGraph:
    """Flip exactly the crossing pairs; the result is (n_side - degree)-regular."""
    n = g.n_side
    full = frozenset(range(n))
    adj_x = tuple(tuple(sorted(full - set(row))) for row in g.adj_x)
    adj_y = tuple(tuple(sorted(full - set(row))) for row in g.adj_y)
    return BipartiteRegularGraph(n, n - g.degree, adj_x, adj_y)


def complement_regular(g: RegularGraph) -> RegularGraph:
    """Ordinary graph complement (no loops); (n - 1 - degree)-regular."""
    n = g.n
    full = set(range(n))
    adj = tuple(tuple(sorted(full - set(row) - {v})) for v, row in enumerate(g.adj))
    return RegularGraph(n, n - 1 - g.degree, adj)


def induced_subgraph(g, keep, keep_y=None):
    """Subgraph induced on a vertex subset, with the reindexing map attached.

    Bipartite graphs take ``keep`` (X indices) and ``keep_y``; regular graphs
    take a single vertex set.
    """
    if isinstance(g, RegularGraph):
        verts = tuple(sorted(set(keep)))
        pos = {v: i for i, v in enumerate(verts)}
        adj = tuple(tuple(pos[u] for u in g.adj[v] if u in pos) for v in verts)
        return InducedGraph(verts, adj)
    xs = tuple(sorted(set(keep)))
    ys = tuple(sorted(set(keep_y if keep_y is not None else ())))
    xpos = {v: i for i, v in enumerate(xs)}
    ypos = {v: i for i, v in enumerate(ys)}
    adj_x = tuple(tuple(ypos[j] for j in g.adj_x[i] if j in ypos) for i in xs)
    adj_y = tuple(tuple(xpos[i] for i in g.adj_y[j] if i in xpos) for j in ys)
    return BipartiteSubgraph(xs, ys, adj_x, adj_y)


def pruned_graph(g: BipartiteRegularGraph, tau_x: Iterable[int]) -> BipartiteSubgraph:
    """Same vertex set with every edge incident to tau or N[tau] deleted."""
    tau = set(tau_x)
    blocked_y = g.neighbor_set(X, tau)
    adj_x = tuple(
        tuple(j for j in row if j not in blocked_y) if i not in tau else ()
        for i, row in enumerate(g.adj_x))
    adj_y = tuple(
        tuple(i for i in row if i not in tau) if j not in blocked_y else ()
        for j, row in enumerate(g.adj_y))
    return BipartiteSubgraph(tuple(range(g.n_side)), tuple(range(g.n_side)), adj_x, adj_y)


# -- text format ----------------------------------------------------------------


def save_graph(g, path: str | Path) -> None:
    """Write the one-edge-per-line text format with a typed header."""
    lines = []
    if isinstance(g, BipartiteRegularGraph):
        lines.append(f"bipartite {g.n_side} {g.degree}")
        lines.extend(f"{u} {v}" for u, v in g.edges())
    elif isinstance(g, RegularGraph):
        lines.append(f"regular {g.n} {g.degree}")
        lines.extend(f"{u} {v}" for u, v in g.edges())
    else:
        raise TypeError(f"unsupported graph type {type(g).__name__}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path: str | Path):
    """Load and validate a graph written by :func:`save_graph`."""
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty graph file")
    header = text[0].split()
    if len(header) != 3 or header[0] not in ("bipartite", "regular"):
        raise ValueError(f"{path}: bad header {text[0]!r}")
    kind, n, degree = header[0], int(header[1]), int(header[2])
    edges = []
    for lineno, line in enumerate(text[1:], start=2):
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v'")
        edges.append((int(parts[0]), int(parts[1])))
    if kind == "bipartite":
        adj_x: list[list[int]] = [[] for _ in range(n)]
        adj_y: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"{path}: edge ({u}, {v}) out of range")
            adj_x[u].append(v)
            adj_y[v].append(u)
        g = BipartiteRegularGraph(n, degree, _as_sorted_tuples(adj_x),
                                  _as_sorted_tuples(adj_y))
        g.validate()
        return g
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"{path}: edge ({u}, {v}) out of range")
        adj[u].append(v)
        adj[v].append(u)
    g = RegularGraph(n, degree, _as_sorted_tuples(adj))
    g.validate()
    return g
