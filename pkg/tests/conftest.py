from __future__ import annotations

import pytest

from slicewalk.graphs import BipartiteRegularGraph, RegularGraph


@pytest.fixture
def bipartite_c6() -> BipartiteRegularGraph:
    """Six-cycle laid out as a bipartite graph: x_i ~ y_i and y_{i+1 mod 3}."""
    adj_x = ((0, 1), (1, 2), (0, 2))
    adj_y = ((0, 2), (0, 1), (1, 2))
    g = BipartiteRegularGraph(3, 2, adj_x, adj_y)
    g.validate()
    return g


@pytest.fixture
def six_cycle() -> RegularGraph:
    adj = tuple(tuple(sorted(((v - 1) % 6, (v + 1) % 6))) for v in range(6))
    g = RegularGraph(6, 2, adj)
    g.validate()
    return g


@pytest.fixture
def complete_bipartite_33() -> BipartiteRegularGraph:
    row = (0, 1, 2)
    g = BipartiteRegularGraph(3, 3, (row,) * 3, (row,) * 3)
    g.validate()
    return g


@pytest.fixture
def edgeless_bipartite_5() -> BipartiteRegularGraph:
    g = BipartiteRegularGraph(5, 0, ((),) * 5, ((),) * 5)
    g.validate()
    return g
