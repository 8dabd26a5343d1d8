import itertools

import numpy as np
import pytest

from isingshim.generators import (
    boundary_afm_couplers,
    contract_chains,
    make_buckyball,
    make_fm_loop,
    make_frustrated_loop,
    make_square_cylinder,
)
from isingshim.model import IsingModel, energy


def test_fm_loop_values():
    m = make_fm_loop(64, -0.2)
    assert m.num_spins == 64
    assert len(m.couplings) == 64
    assert all(J == -0.2 for J in m.couplings.values())
    assert m.fields == {}


def test_fm_loop_too_short():
    with pytest.raises(ValueError):
        make_fm_loop(2, -1.0)


def test_frustrated_loop_values():
    m = make_frustrated_loop(16, -0.9)
    values = sorted(m.couplings.values())
    assert values == [-0.9] * 15 + [0.9]


def test_frustrated_loop_ground_state_count():
    # 2L ground states, counted by exhaustive enumeration
    L = 6
    m = make_frustrated_loop(L, -1.0)
    energies = {}
    for bits in itertools.product([-1, 1], repeat=L):
        energies[bits] = energy(m, np.array(bits))
    e0 = min(energies.values())
    assert sum(1 for e in energies.values() if e == pytest.approx(e0)) == 2 * L


def test_buckyball_structure():
    m = make_buckyball()
    assert m.num_spins == 60
    assert len(m.couplings) == 90
    assert all(J == 1.0 for J in m.couplings.values())
    deg = {}
    for i, j in m.couplings:
        deg[i] = deg.get(i, 0) + 1
        deg[j] = deg.get(j, 0) + 1
    assert all(d == 3 for d in deg.values())


def test_buckyball_pentagon_hexagon_split():
    # oracle: count edges lying on at least one 5-cycle via path enumeration
    m = make_buckyball()
    adj = m.adjacency()
    on_pentagon = set()
    for (a, b) in m.couplings:
        for x in adj[a]:
            if x in (a, b):
                continue
            for y in adj[x]:
                if y in (a, b, x):
                    continue
                for z in adj[y]:
                    if z in (a, b, x, y):
                        continue
                    if b in adj[z]:
                        on_pentagon.add((a, b))
    assert len(on_pentagon) == 60
    assert 90 - len(on_pentagon) == 30


def test_square_cylinder_values():
    m, chains = make_square_cylinder(12, 12, 0.9)
    assert m.num_spins == 144
    assert len(chains) == 72
    fm = [J for J in m.couplings.values() if J < 0]
    assert all(J == -1.8 for J in fm)
    assert len(fm) == 72
    afm = [J for J in m.couplings.values() if J > 0]
    assert all(J == 0.9 for J in afm)


def test_square_cylinder_periodic_rows():
    rows, cols = 6, 4
    m, _ = make_square_cylinder(rows, cols, 0.9)
    for c in range(cols):
        top = 0 * cols + c
        bottom = (rows - 1) * cols + c
        assert (min(top, bottom), max(top, bottom)) in m.couplings


def test_square_cylinder_bad_dims():
    with pytest.raises(ValueError):
        make_square_cylinder(5, 4, 0.9)
    with pytest.raises(ValueError):
        make_square_cylinder(6, 1, 0.9)


def test_contract_chains_to_triangular():
    rows, cols = 12, 12
    m, chains = make_square_cylinder(rows, cols, 0.9)
    logical, logical_of = contract_chains(m, chains)
    assert logical.num_spins == 72
    # all logical couplings equal the AFM value (enumerated check)
    assert all(J == pytest.approx(0.9) for J in logical.couplings.values())
    # interior logical spins have degree 6
    deg = {}
    for i, j in logical.couplings:
        deg[i] = deg.get(i, 0) + 1
        deg[j] = deg.get(j, 0) + 1
    counts = sorted(deg.values())
    interior = [d for d in counts if d == 6]
    boundary = [d for d in counts if d == 4]
    assert len(interior) == 72 - 12 and len(boundary) == 12


def test_contract_single_pair():
    m = IsingModel(2, {}, {(0, 1): -2.0})
    logical, logical_of = contract_chains(m, [(0, 1)])
    assert logical.num_spins == 1
    assert logical.couplings == {}
    assert logical_of == {0: 0, 1: 0}


def test_contract_rejects_overlap():
    m = IsingModel(3, {}, {(0, 1): -1.0, (1, 2): -1.0})
    with pytest.raises(ValueError):
        contract_chains(m, [(0, 1), (1, 2)])


def test_boundary_afm_couplers():
    rows, cols = 6, 4
    m, chains = make_square_cylinder(rows, cols, 0.9)
    edges = boundary_afm_couplers(rows, cols)
    assert len(edges) == rows  # rows/2 per boundary column, two columns
    chain_set = {tuple(sorted(p)) for p in chains}
    for e in edges:
        assert m.couplings[e] == 0.9
        assert e not in chain_set
        assert e[0] % cols == e[1] % cols  # intra-column
        assert e[0] % cols in (0, cols - 1)
