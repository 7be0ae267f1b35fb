import numpy as np
import pytest

from diergm import (
    AB2Star,
    AttributeTable,
    DirectedGraph,
    Edges,
    GwDsp,
    GwEsp,
    GwInDegree,
    GwOutDegree,
    Inhomo2Star,
    Mutual,
    NodeMatch,
    NodeMix,
)


def random_graph(rng, n, density=0.3):
    g = DirectedGraph(n)
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < density:
                g.toggle_edge(i, j)
    return g


def random_attrs(rng, n, n_groups=None, max_groups=4):
    """Random contiguous group codes with every group inhabited."""
    if n_groups is None:
        n_groups = int(rng.integers(2, min(max_groups, n) + 1))
    codes = list(range(n_groups)) + list(rng.integers(0, n_groups, n - n_groups))
    codes = [int(c) for c in codes]
    rng.shuffle(codes)
    return AttributeTable(codes)


def term_zoo(decay=0.5):
    """One instance of every term kind (group-coded terms use groups 0 and 1)."""
    return [
        Edges(),
        Mutual(),
        NodeMatch(),
        NodeMix(0, 1),
        Inhomo2Star(),
        AB2Star(0, 1),
        GwEsp(decay),
        GwDsp(decay),
        GwInDegree(decay),
        GwOutDegree(decay),
    ]


@pytest.fixture
def fig1():
    """Three nodes, two in one group and one in the other, edges 0->1->2."""
    g = DirectedGraph(3)
    g.toggle_edge(0, 1)
    g.toggle_edge(1, 2)
    attrs = AttributeTable([0, 0, 1], ["pink", "blue"])
    return g, attrs


def batch_means_se(values, batches=20):
    """Standard error of the mean of an autocorrelated series via batch means."""
    values = np.asarray(values, dtype=float)
    b = max(2, min(batches, len(values)))
    usable = (len(values) // b) * b
    means = values[:usable].reshape(b, -1).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(b))
