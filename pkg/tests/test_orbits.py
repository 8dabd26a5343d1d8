"""Orbit machinery tests, checked against brute-force enumeration oracles."""

import itertools

import numpy as np
import pytest

from isingshim.embedding import EmbeddingSet
from isingshim.generators import make_buckyball, make_fm_loop, make_frustrated_loop
from isingshim.model import IsingModel
from isingshim.orbits import (
    Orbits,
    Permutation,
    SearchBudgetExceeded,
    automorphism_generators,
    ising_orbits,
    merge_embedding_orbits,
    override_orbits,
    vertex_and_edge_orbits,
)
from isingshim.sampler import exact_stats
from isingshim.signed import LabeledGraph, build_signed, signed_to_labeled_graph


def brute_force_orbits(g: LabeledGraph):
    """Oracle: vertex/edge orbits from exhaustive enumeration of all
    label-preserving bijections."""
    n = g.num_vertices
    autos = []
    by_label = {}
    for v in range(n):
        by_label.setdefault(g.vertex_labels[v], []).append(v)
    groups = list(by_label.values())
    perms_per_group = [list(itertools.permutations(grp)) for grp in groups]
    for choice in itertools.product(*perms_per_group):
        image = [0] * n
        for grp, perm in zip(groups, choice):
            for src, dst in zip(grp, perm):
                image[src] = dst
        perm = Permutation(tuple(image))
        if perm.is_automorphism(g):
            autos.append(perm)
    vparent = list(range(n))

    def find(x):
        while vparent[x] != x:
            x = vparent[x]
        return x

    for perm in autos:
        for v in range(n):
            a, b = find(v), find(perm.image[v])
            if a != b:
                vparent[max(a, b)] = min(a, b)
    vertex_rep = {v: find(v) for v in range(n)}
    edges = sorted(g.edges)
    eidx = {e: k for k, e in enumerate(edges)}
    eparent = list(range(len(edges)))

    def efind(x):
        while eparent[x] != x:
            x = eparent[x]
        return x

    for perm in autos:
        for e in edges:
            a, b = efind(eidx[e]), efind(eidx[perm.apply_edge(e)])
            if a != b:
                eparent[max(a, b)] = min(a, b)
    edge_rep = {e: edges[efind(eidx[e])] for e in edges}
    # canonicalize reps to minimum member
    vgroups = {}
    for v, r in vertex_rep.items():
        vgroups.setdefault(r, []).append(v)
    vertex_rep = {v: min(vgroups[r]) for v, r in vertex_rep.items()}
    egroups = {}
    for e, r in edge_rep.items():
        egroups.setdefault(r, []).append(e)
    edge_rep = {e: min(egroups[r]) for e, r in edge_rep.items()}
    return vertex_rep, edge_rep


def partition_of(rep_map):
    groups = {}
    for item, rep in rep_map.items():
        groups.setdefault(rep, set()).add(item)
    return sorted(frozenset(s) for s in groups.values())


def test_unlabeled_4cycle_group_order_8():
    g = LabeledGraph([0, 0, 0, 0], {(0, 1), (1, 2), (2, 3), (0, 3)})
    gens = automorphism_generators(g)
    # closure of the generators has order 8 (dihedral group of the square)
    seen = {tuple(range(4))}
    frontier = [tuple(range(4))]
    images = [p.image for p in gens]
    while frontier:
        cur = frontier.pop()
        for img in images:
            nxt = tuple(img[c] for c in cur)
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    assert len(seen) == 8
    vrep, erep = vertex_and_edge_orbits(g, gens)
    assert partition_of(vrep) == [frozenset({0, 1, 2, 3})]


def test_path_with_distinct_end_labels_is_rigid():
    g = LabeledGraph([1, 0, 2], {(0, 1), (1, 2)})
    gens = automorphism_generators(g)
    assert gens == []


def test_signed_fm_4loop_spin_vertices_single_orbit():
    sm = build_signed(make_fm_loop(4, -1.0))
    g = signed_to_labeled_graph(sm)
    gens = automorphism_generators(g)
    vrep, _ = vertex_and_edge_orbits(g, gens)
    spin_orbits = {vrep[v] for v in range(8)}
    assert len(spin_orbits) == 1
    # oracle agreement on the full labeled graph
    bvrep, berep = brute_force_orbits(g) if g.num_vertices <= 12 else (None, None)


def test_non_automorphism_rejected():
    g = LabeledGraph([0, 0, 0], {(0, 1), (1, 2)})
    bad = Permutation((1, 0, 2))  # maps edge (1,2) to (0,2), not an edge
    with pytest.raises(ValueError):
        vertex_and_edge_orbits(g, [bad])


def test_identity_only_generators_give_singletons():
    g = LabeledGraph([0, 0, 0], {(0, 1), (1, 2)})
    vrep, erep = vertex_and_edge_orbits(g, [])
    assert partition_of(vrep) == [frozenset({0}), frozenset({1}), frozenset({2})]
    assert all(erep[e] == e for e in g.edges)


@pytest.mark.parametrize("seed", range(12))
def test_engine_matches_brute_force_on_random_labeled_graphs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    labels = rng.integers(0, int(rng.integers(1, 4)), size=n).tolist()
    edges = set()
    edge_labels = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.45:
                edges.add((i, j))
                if rng.random() < 0.5:
                    edge_labels[(i, j)] = int(rng.integers(0, 2))
    g = LabeledGraph(labels, edges, edge_labels)
    gens = automorphism_generators(g)
    vrep, erep = vertex_and_edge_orbits(g, gens)
    bvrep, berep = brute_force_orbits(g)
    assert partition_of(vrep) == partition_of(bvrep)
    assert partition_of(erep) == partition_of(berep)


def test_budget_exceeded_raises():
    sm = build_signed(make_fm_loop(16, -1.0))
    g = signed_to_labeled_graph(sm)
    with pytest.raises(SearchBudgetExceeded):
        automorphism_generators(g, node_budget=3)


def test_fm_loop_orbits():
    for L in (4, 8, 64):
        orb = ising_orbits(make_fm_loop(L, -0.2))
        assert orb.num_qubit_orbits() == 1
        assert orb.num_coupler_orbits() == 1
        o = orb.qubit_orbit[0]
        assert orb.opposite_qubit[o] == o  # its own opposite since h=0


def test_frustrated_loop_orbits_opposite_pair():
    orb = ising_orbits(make_frustrated_loop(16, -0.9))
    assert orb.num_qubit_orbits() == 1
    assert orb.num_coupler_orbits() == 2
    members = orb.coupler_orbit_members()
    sizes = sorted(len(v) for v in members.values())
    assert sizes == [1, 15]
    (small_id,) = [o for o, m in members.items() if len(m) == 1]
    (big_id,) = [o for o, m in members.items() if len(m) == 15]
    assert orb.opposite_coupler[small_id] == big_id
    assert orb.opposite_coupler[big_id] == small_id


def test_buckyball_orbits():
    orb = ising_orbits(make_buckyball())
    assert orb.num_qubit_orbits() == 1
    assert orb.num_coupler_orbits() == 2
    sizes = sorted(len(v) for v in orb.coupler_orbit_members().values())
    assert sizes == [30, 60]


def exact_orbit_soundness(model, orbits, betas=(0.5, 1.0, 2.0), tol=1e-10):
    """Exact Boltzmann statistics must be constant on orbits and antisymmetric
    across opposite orbits."""
    for beta in betas:
        m, f = exact_stats(model, beta)
        qmembers = orbits.qubit_orbit_members()
        for o, members in qmembers.items():
            vals = [m[q] for q in members]
            assert max(vals) - min(vals) <= tol
            opp = orbits.opposite_qubit.get(o)
            if opp == o:
                assert max(abs(v) for v in vals) <= tol
            elif opp is not None:
                ovals = [m[q] for q in qmembers[opp]]
                assert abs(vals[0] + ovals[0]) <= tol
        cmembers = orbits.coupler_orbit_members()
        for o, members in cmembers.items():
            vals = [f[e] for e in members]
            assert max(vals) - min(vals) <= tol
            opp = orbits.opposite_coupler.get(o)
            if opp is not None:
                ovals = [f[e] for e in cmembers[opp]]
                assert abs(vals[0] - ovals[0]) <= tol


@pytest.mark.parametrize("seed", range(8))
def test_orbit_soundness_random_models(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(3, 9))
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.5:
                couplings[(i, j)] = float(rng.choice([-1.0, -0.5, 0.5, 1.0]))
    if not couplings:
        couplings[(0, 1)] = 1.0
    fields = {i: float(rng.choice([0.0, -0.5, 0.5])) for i in range(n)}
    fields = {i: h for i, h in fields.items() if h != 0.0}
    model = IsingModel(n, fields, couplings)
    orbits = ising_orbits(model)
    exact_orbit_soundness(model, orbits)


def test_merge_embedding_orbits_three_copies():
    src = make_frustrated_loop(6, -1.0)
    orb = ising_orbits(src)
    maps = [list(range(k * 6, (k + 1) * 6)) for k in range(3)]
    es = EmbeddingSet(src, maps)
    merged = merge_embedding_orbits(orb, es)
    assert merged.num_qubit_orbits() == 1
    assert merged.num_coupler_orbits() == 2
    opp = merged.opposite_coupler
    ids = sorted(set(merged.coupler_orbit.values()))
    assert opp[ids[0]] == ids[1] and opp[ids[1]] == ids[0]
    assert len(merged.qubit_orbit) == 18


def test_merge_single_embedding_relabels_only():
    src = make_fm_loop(4, -1.0)
    orb = ising_orbits(src)
    es = EmbeddingSet(src, [[10, 11, 12, 13]])
    merged = merge_embedding_orbits(orb, es)
    assert set(merged.qubit_orbit) == {10, 11, 12, 13}
    assert merged.num_qubit_orbits() == 1


def test_override_orbits_tafm_classes():
    from isingshim.generators import make_square_cylinder

    m, chains = make_square_cylinder(6, 4, 0.9)
    afm = [e for e, J in m.couplings.items() if J > 0]
    fm = [e for e, J in m.couplings.items() if J < 0]
    orb = override_orbits(m, [afm, fm])
    assert orb.num_coupler_orbits() == 2
    assert orb.num_qubit_orbits() == 1
    o = orb.qubit_orbit[0]
    assert orb.opposite_qubit[o] == o  # h=0 everywhere


def test_override_orbits_singletons():
    m = make_frustrated_loop(4, -1.0)
    orb = override_orbits(m, [[e] for e in m.couplings])
    assert orb.num_coupler_orbits() == len(m.couplings)


def test_override_orbits_rejects_mixed_magnitudes():
    m = IsingModel(3, {}, {(0, 1): 0.9, (1, 2): -1.8})
    with pytest.raises(ValueError):
        override_orbits(m, [[(0, 1), (1, 2)]])


def test_generators_verify_on_labeled_graphs():
    sm = build_signed(make_frustrated_loop(8, -0.9))
    g = signed_to_labeled_graph(sm)
    for perm in automorphism_generators(g):
        assert perm.is_automorphism(g)
