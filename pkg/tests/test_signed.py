import pytest

from isingshim.generators import make_fm_loop
from isingshim.model import IsingModel
from isingshim.signed import build_signed, signed_to_labeled_graph


def test_build_signed_counts_4loop():
    sm = build_signed(make_fm_loop(4, -1.0))
    assert sm.base.num_spins == 8
    assert len(sm.base.couplings) == 16


def test_build_signed_counts_64loop():
    sm = build_signed(make_fm_loop(64, -0.2))
    assert sm.base.num_spins == 128
    assert len(sm.base.couplings) == 256


def test_build_signed_single_spin_field():
    sm = build_signed(IsingModel(1, {0: 0.5}, {}))
    assert sm.base.num_spins == 2
    assert sm.base.fields == {0: 0.5, 1: -0.5}
    assert sm.base.couplings == {}


def test_signed_invariants():
    m = IsingModel(3, {0: 0.25}, {(0, 1): -1.0, (1, 2): 0.5})
    sm = build_signed(m)
    n = m.num_spins
    for i in range(n):
        assert sm.base.field_of(sm.bar_of[i]) == -sm.base.field_of(sm.plain_of[i])
    for (i, j), J in m.couplings.items():
        vi, vj = sm.plain_of[i], sm.plain_of[j]
        bi, bj = sm.bar_of[i], sm.bar_of[j]
        get = sm.base.coupling_of
        assert get(vi, vj) == J and get(bi, bj) == J
        assert get(bi, vj) == -J and get(vi, bj) == -J
    # restriction to plain spins reproduces the original exactly
    plain = {e: J for e, J in sm.base.couplings.items() if e[0] < n and e[1] < n}
    assert plain == m.couplings


def test_labeled_graph_counts_and_labels():
    sm = build_signed(make_fm_loop(4, -1.0))
    g = signed_to_labeled_graph(sm)
    assert g.num_vertices == 8 + 16
    assert len(g.edges) == 32
    # all-equal fields (0) and couplings {-1, +1}: 1 spin label + 2 coupler labels
    assert len(set(g.vertex_labels)) == 3
    spin_labels = set(g.vertex_labels[:8])
    sub_labels = set(g.vertex_labels[8:])
    assert spin_labels.isdisjoint(sub_labels)


def test_labeled_graph_two_labels_when_uniform():
    m = IsingModel(2, {}, {(0, 1): -1.0})
    # force all four signed couplers equal by... not possible with nonzero J;
    # instead check a uniform unsigned case directly:
    sm = build_signed(m)
    g = signed_to_labeled_graph(sm)
    # fields all zero -> one spin label; couplings {-1,+1} -> two more
    assert len(set(g.vertex_labels)) == 3
    # subdivision vertices have degree exactly 2
    adj = g.adjacency()
    for v in range(2 * m.num_spins, g.num_vertices):
        assert len(adj[v]) == 2


def test_quantization_merges_near_equal_values():
    m = IsingModel(2, {}, {(0, 1): -1.0})
    m2 = IsingModel(2, {}, {(0, 1): -1.0 + 1e-12})
    g1 = signed_to_labeled_graph(build_signed(m))
    g2 = signed_to_labeled_graph(build_signed(m2))
    assert g1.vertex_labels == g2.vertex_labels
