"""Generators for the models used by the worked examples.

Loops, the buckyball antiferromagnet, and the square-cylinder lattice whose
two-qubit ferromagnetic chains contract to a triangular antiferromagnet.
"""

from __future__ import annotations

from .model import IsingModel

__all__ = [
    "make_fm_loop",
    "make_frustrated_loop",
    "make_buckyball",
    "make_square_cylinder",
    "contract_chains",
    "boundary_afm_couplers",
    "BUCKYBALL_EDGES",
]

# Canonical truncated-icosahedron edge list (60 vertices, 90 edges, 3-regular).
# Vertex 5*i+r is the corner of the pentagon around icosahedron vertex i at
# cyclic rank r; fixed once so orbit ids are reproducible across runs.
BUCKYBALL_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (0, 4), (0, 22), (1, 2), (1, 12), (2, 3), (2, 7), (3, 4), (3, 17),
    (4, 32), (5, 6), (5, 9), (5, 37), (6, 7), (6, 18), (7, 8), (8, 9), (8, 11),
    (9, 27), (10, 11), (10, 14), (10, 28), (11, 12), (12, 13), (13, 14), (13, 21), (14, 42),
    (15, 16), (15, 19), (15, 47), (16, 17), (16, 33), (17, 18), (18, 19), (19, 36), (20, 21),
    (20, 24), (20, 43), (21, 22), (22, 23), (23, 24), (23, 31), (24, 52), (25, 26), (25, 29),
    (25, 57), (26, 27), (26, 38), (27, 28), (28, 29), (29, 41), (30, 31), (30, 34), (30, 53),
    (31, 32), (32, 33), (33, 34), (34, 46), (35, 36), (35, 39), (35, 48), (36, 37), (37, 38),
    (38, 39), (39, 56), (40, 41), (40, 44), (40, 58), (41, 42), (42, 43), (43, 44), (44, 51),
    (45, 46), (45, 49), (45, 54), (46, 47), (47, 48), (48, 49), (49, 55), (50, 51), (50, 54),
    (50, 59), (51, 52), (52, 53), (53, 54), (55, 56), (55, 59), (56, 57), (57, 58), (58, 59),
)


def make_fm_loop(length: int, J: float) -> IsingModel:
    """Periodic 1D chain with every coupling J and all fields zero."""
    if length < 3:
        raise ValueError("loop length must be at least 3")
    if J == 0.0:
        raise ValueError("coupling must be nonzero")
    couplings = {}
    for k in range(length):
        i, j = k, (k + 1) % length
        couplings[(min(i, j), max(i, j))] = J
    return IsingModel(length, {}, couplings)


def make_frustrated_loop(length: int, J: float) -> IsingModel:
    """FM loop with exactly one coupling flipped to -J (the bond (1,2))."""
    model = make_fm_loop(length, J)
    couplings = dict(model.couplings)
    couplings[(1, 2)] = -J
    return IsingModel(length, {}, couplings)


def make_buckyball() -> IsingModel:
    """Antiferromagnet (all J=+1, h=0) on the truncated icosahedron."""
    couplings = {e: 1.0 for e in BUCKYBALL_EDGES}
    return IsingModel(60, {}, couplings)


def _pair_base(row: int, col: int, rows: int) -> int:
    # Chains in column c start at row (c mod rows); returns the chain index a
    # such that row is in {c+2a, c+2a+1} (mod rows).
    return ((row - col) % rows) // 2


def make_square_cylinder(rows: int, cols: int, J_AFM: float) -> tuple[IsingModel, list[tuple[int, int]]]:
    """Square lattice, periodic along rows, open along columns, with FM chains.

    Within column c, rows (c+2a, c+2a+1) mod rows form a chain carrying
    J_FM = -2*J_AFM; every other bond carries J_AFM. The one-row stagger per
    column makes the contraction of the chains a uniform triangular
    antiferromagnet. Returns the model and the chain pair list (spin index
    pairs), ordered by (chain index, column).
    """
    if rows < 4 or rows % 2 != 0:
        raise ValueError("rows must be an even number >= 4 (chains pair rows)")
    if cols < 2:
        raise ValueError("cols must be >= 2")
    if J_AFM == 0.0:
        raise ValueError("J_AFM must be nonzero")
    J_FM = -2.0 * J_AFM

    def spin(r: int, c: int) -> int:
        return (r % rows) * cols + c

    couplings: dict[tuple[int, int], float] = {}

    def put(a: int, b: int, value: float):
        couplings[(min(a, b), max(a, b))] = value

    chain_pairs: list[tuple[int, int]] = []
    for a in range(rows // 2):
        for c in range(cols):
            p = spin(c + 2 * a, c)
            q = spin(c + 2 * a + 1, c)
            chain_pairs.append((min(p, q), max(p, q)))
            put(p, q, J_FM)
            put(q, spin(c + 2 * a + 2, c), J_AFM)  # inter-chain vertical bond
    for r in range(rows):
        for c in range(cols - 1):
            put(spin(r, c), spin(r, c + 1), J_AFM)
    return IsingModel(rows * cols, {}, couplings), chain_pairs


def contract_chains(model: IsingModel, chain_pairs) -> tuple[IsingModel, dict[int, int]]:
    """Contract each coupled pair to one logical spin; parallel couplings sum.

    Returns the logical model and the physical -> logical index map. Logical
    indices follow the order of chain_pairs.
    """
    logical_of: dict[int, int] = {}
    for k, (p, q) in enumerate(chain_pairs):
        if p in logical_of or q in logical_of:
            raise ValueError("chain pairs overlap")
        key = (min(p, q), max(p, q))
        if key not in model.couplings:
            raise ValueError(f"chain pair {key} is not coupled")
        logical_of[p] = k
        logical_of[q] = k
    for i in range(model.num_spins):
        if i not in logical_of:
            raise ValueError(f"spin {i} is not covered by any chain pair")

    fields: dict[int, float] = {}
    for i, h in model.fields.items():
        if h != 0.0:
            fields[logical_of[i]] = fields.get(logical_of[i], 0.0) + h
    couplings: dict[tuple[int, int], float] = {}
    for (i, j), J in model.couplings.items():
        a, b = logical_of[i], logical_of[j]
        if a == b:
            continue  # chain bond disappears
        key = (min(a, b), max(a, b))
        couplings[key] = couplings.get(key, 0.0) + J
    couplings = {k: v for k, v in couplings.items() if v != 0.0}
    return IsingModel(len(chain_pairs), fields, couplings), logical_of


def boundary_afm_couplers(rows: int, cols: int) -> list[tuple[int, int]]:
    """Intra-column AFM bonds of the two open-boundary columns (c=0, c=cols-1).

    These are the couplers halved by the better-initial-conditions option.
    """
    def spin(r: int, c: int) -> int:
        return (r % rows) * cols + c

    out = []
    for c in (0, cols - 1):
        for a in range(rows // 2):
            p = spin(c + 2 * a + 1, c)
            q = spin(c + 2 * a + 2, c)
            out.append((min(p, q), max(p, q)))
    return sorted(set(out))
