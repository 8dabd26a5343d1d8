"""Ising models, gauge transformations, and the text-file model format.

An Ising model is a set of dimensionless biases h_i and pairwise couplings
J_ij on a simple graph; the energy of a state s in {-1,+1}^N is
sum_i h_i s_i + sum_{i<j} J_ij s_i s_j.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IsingModel",
    "GaugeTransform",
    "energy",
    "apply_gauge",
    "frustration_indicators",
    "load_model",
    "loads_model",
    "dump_model",
    "ModelFormatError",
]


@dataclass(frozen=True)
class IsingModel:
    """Fields and couplings over spins 0..num_spins-1.

    Couplings are keyed by ordered pairs (i, j) with i < j and must be
    nonzero; absent fields are zero. Instances are treated as immutable
    value objects: the dicts must not be mutated after construction.
    """

    num_spins: int
    fields: dict[int, float] = field(default_factory=dict)
    couplings: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_spins < 0:
            raise ValueError("num_spins must be nonnegative")
        for i in self.fields:
            if not (0 <= i < self.num_spins):
                raise ValueError(f"field index {i} out of range")
        for (i, j), value in self.couplings.items():
            if not (0 <= i < j < self.num_spins):
                raise ValueError(f"bad coupling key ({i},{j}): need 0 <= i < j < num_spins")
            if value == 0.0:
                raise ValueError(f"coupling ({i},{j}) is zero; zero couplers must be absent")

    def field_of(self, i: int) -> float:
        return self.fields.get(i, 0.0)

    def coupling_of(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        return self.couplings[(i, j)]

    def edges(self) -> list[tuple[int, int]]:
        """Coupling keys in sorted order (the canonical coupler enumeration)."""
        return sorted(self.couplings)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {i: [] for i in range(self.num_spins)}
        for i, j in self.couplings:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def content_hash(self) -> str:
        """Stable hash of (N, h, J), used for sample provenance."""
        parts = [f"N={self.num_spins}"]
        for i in sorted(self.fields):
            if self.fields[i] != 0.0:
                parts.append(f"h[{i}]={self.fields[i]!r}")
        for (i, j) in sorted(self.couplings):
            parts.append(f"J[{i},{j}]={self.couplings[(i, j)]!r}")
        return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class GaugeTransform:
    """Spin reversal transformation: flip the sign of a subset of spins."""

    flip_set: frozenset[int]

    def __init__(self, flip_set):
        object.__setattr__(self, "flip_set", frozenset(flip_set))

    def sign(self, i: int) -> int:
        return -1 if i in self.flip_set else 1


def energy(model: IsingModel, state) -> float:
    """Classical Ising energy of a +-1 state vector."""
    s = np.asarray(state, dtype=float)
    if s.shape != (model.num_spins,):
        raise ValueError(f"state length {s.shape} does not match num_spins {model.num_spins}")
    total = sum(h * s[i] for i, h in model.fields.items())
    total += sum(J * s[i] * s[j] for (i, j), J in model.couplings.items())
    return float(total)


def apply_gauge(model: IsingModel, g: GaugeTransform) -> IsingModel:
    """Negate h_i for flipped spins and J_ij for couplers crossing the flip boundary."""
    for i in g.flip_set:
        if not (0 <= i < model.num_spins):
            raise ValueError(f"flip index {i} out of range")
    new_fields = {i: (-h if i in g.flip_set else h) for i, h in model.fields.items()}
    new_couplings = {}
    for (i, j), J in model.couplings.items():
        crossing = (i in g.flip_set) != (j in g.flip_set)
        new_couplings[(i, j)] = -J if crossing else J
    return IsingModel(model.num_spins, new_fields, new_couplings)


def frustration_indicators(model: IsingModel, state) -> dict[tuple[int, int], float]:
    """Per-coupler indicator (1 + sign(J_ij) s_i s_j) / 2 for one state."""
    s = np.asarray(state, dtype=float)
    if s.shape != (model.num_spins,):
        raise ValueError("state length mismatch")
    return {
        (i, j): (1.0 + np.sign(J) * s[i] * s[j]) / 2.0
        for (i, j), J in model.couplings.items()
    }


class ModelFormatError(ValueError):
    """Raised for malformed model text, with the offending line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def loads_model(text: str) -> IsingModel:
    """Parse the text model format.

    One assignment per line: ``i h`` sets field h_i, ``i j J`` sets coupling
    J_ij. ``#`` starts a comment. Duplicate assignments are an error.
    """
    fields: dict[int, float] = {}
    couplings: dict[tuple[int, int], float] = {}
    max_index = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) == 2:
            try:
                i = int(tokens[0])
                h = float(tokens[1])
            except ValueError:
                raise ModelFormatError(lineno, f"cannot parse field line {line!r}")
            if i < 0:
                raise ModelFormatError(lineno, "spin index must be nonnegative")
            if i in fields:
                raise ModelFormatError(lineno, f"duplicate field assignment for spin {i}")
            fields[i] = h
            max_index = max(max_index, i)
        elif len(tokens) == 3:
            try:
                i = int(tokens[0])
                j = int(tokens[1])
                J = float(tokens[2])
            except ValueError:
                raise ModelFormatError(lineno, f"cannot parse coupling line {line!r}")
            if i < 0 or j < 0:
                raise ModelFormatError(lineno, "spin indices must be nonnegative")
            if i == j:
                raise ModelFormatError(lineno, "self-coupling is not allowed")
            key = (min(i, j), max(i, j))
            if key in couplings:
                raise ModelFormatError(lineno, f"duplicate coupling assignment for {key}")
            if J == 0.0:
                raise ModelFormatError(lineno, "zero couplings are not allowed")
            couplings[key] = J
            max_index = max(max_index, j, i)
        else:
            raise ModelFormatError(lineno, f"expected 2 or 3 tokens, got {len(tokens)}")
    return IsingModel(max_index + 1, fields, couplings)


def load_model(path) -> IsingModel:
    with open(path, encoding="utf-8") as f:
        return loads_model(f.read())


def dump_model(model: IsingModel) -> str:
    lines = []
    for i in sorted(model.fields):
        if model.fields[i] != 0.0:
            lines.append(f"{i} {model.fields[i]!r}")
    for (i, j) in sorted(model.couplings):
        lines.append(f"{i} {j} {model.couplings[(i, j)]!r}")
    return "\n".join(lines) + "\n"
