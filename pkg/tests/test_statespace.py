from __future__ import annotations

import itertools

import numpy as np
import pytest

from rpzf.chain import build_bundle
from rpzf.errors import DomainError, SizeError
from rpzf.graph import family
from rpzf.statespace import (collapsed_bipartite, collapsed_complete, collapsed_for,
                             collapsed_star, enumerate_full)


def test_full_k3():
    ss = enumerate_full(family("complete", 3))
    assert ss.size == 8
    assert ss.blue_count.tolist() == [0, 1, 1, 1, 2, 2, 2, 3]
    assert list(ss.states) == [0, 1, 2, 4, 3, 5, 6, 7]


def test_full_p2():
    assert enumerate_full(family("path", 2)).size == 4


def test_full_cap():
    with pytest.raises(SizeError):
        enumerate_full(family("cycle", 20))
    assert enumerate_full(family("cycle", 15), cap=15).size == 1 << 15


def test_full_classify_is_identity():
    ss = enumerate_full(family("cycle", 4))
    for i, mask in enumerate(ss.states):
        assert ss.classify(mask) == i
    assert ss.classify({0, 2}) == ss.states.index(0b0101)


def test_collapsed_complete():
    ss = collapsed_complete(4)
    assert ss.size == 5
    assert ss.classify({0, 2}) == 2
    assert collapsed_complete(32).size == 33
    with pytest.raises(DomainError):
        collapsed_complete(1)


def test_collapsed_bipartite():
    ss = collapsed_bipartite(2, 2)
    assert ss.size == 9
    assert ss.states[ss.classify({0, 1})] == (2, 0)
    assert collapsed_bipartite(16, 16).size == 289
    with pytest.raises(DomainError):
        collapsed_bipartite(0, 2)


def test_collapsed_star():
    ss = collapsed_star(4)
    assert ss.size == 8
    assert ss.states[ss.classify({0})] == (1, 0)
    with pytest.raises(DomainError):
        collapsed_star(2)


def test_classify_rejects_foreign_vertices():
    with pytest.raises(DomainError):
        collapsed_complete(4).classify({7})


@pytest.mark.parametrize("ss", [
    enumerate_full(family("cycle", 5)), collapsed_complete(6), collapsed_bipartite(2, 3),
    collapsed_star(6),
])
def test_properly_ordered(ss):
    counts = ss.blue_count
    assert counts[0] == 0 and counts[-1] == ss.n
    assert np.all(np.diff(counts) >= 0)
    assert ss.classify(()) == 0
    assert ss.classify(range(ss.n)) == ss.s
    # every coloring lands on a state with its own blue count
    for r in range(ss.n + 1):
        for blue in itertools.combinations(range(ss.n), r):
            assert counts[ss.classify(blue)] == r


def test_representative_classifies_back():
    for ss in (collapsed_bipartite(3, 2), collapsed_star(5), collapsed_complete(4)):
        for i in range(ss.size):
            assert ss.classify(ss.representative(i)) == i


def test_collapsed_for():
    assert collapsed_for("cycle", (5,)) is None
    assert collapsed_for("star", (6,)).kind == "collapsed_star"
    assert collapsed_for("complete_bipartite", (2, 3)).size == 12


@pytest.mark.parametrize("kind, params", [
    ("complete", (5,)), ("complete_bipartite", (3, 3)), ("complete_bipartite", (2, 4)),
    ("star", (7,)),
])
@pytest.mark.parametrize("variant", ["sarpzf", "darpzf"])
def test_lumpability(kind, params, variant):
    """Colorings in one class have the same lumped transition law."""
    g = family(kind, *params)
    full, small = enumerate_full(g), collapsed_for(kind, params)
    M = build_bundle(g, full, 0.37, variant).M
    Mc = build_bundle(g, small, 0.37, variant).M
    cls = np.array([small.classify(m) for m in full.states])
    lumped = np.zeros((full.size, small.size))
    for j in range(small.size):
        lumped[:, j] = M[:, cls == j].sum(axis=1)
    np.testing.assert_allclose(lumped, Mc[cls], atol=1e-12)
