"""Observables consumed by the shim loops.

Magnetizations, frustration probabilities, orbit-averaged targets, dispersion
time series, the complex sublattice order parameter, and the random-walk
exponent behind adaptive step sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import IsingModel
from .orbits import Orbits
from .sampler import SampleSet

__all__ = [
    "ObservableSeries",
    "SublatticeColoring",
    "magnetizations",
    "frustrations",
    "orbit_means",
    "dispersion",
    "three_coloring",
    "decode_chains",
    "order_parameter",
    "fit_walk_exponent",
]


def magnetizations(s: SampleSet) -> np.ndarray:
    """Per-spin sample mean, in [-1, 1]."""
    if s.reads == 0:
        raise ValueError("empty sample set")
    return s.states.mean(axis=0)


def frustrations(s: SampleSet, model: IsingModel) -> dict[tuple[int, int], float]:
    """Observed probability (1 + sign(J_ij) <s_i s_j>) / 2 per coupler."""
    states = s.states.astype(np.float64)
    out = {}
    for (i, j), J in sorted(model.couplings.items()):
        corr = float((states[:, i] * states[:, j]).mean())
        out[(i, j)] = (1.0 + np.sign(J) * corr) / 2.0
    return out


def orbit_means(m, f, orbits: Orbits) -> tuple[dict[int, float], dict[int, float]]:
    """Target statistics per orbit.

    A qubit orbit that is its own opposite targets 0. An opposite pair (O,-O)
    targets the antisymmetrized mean: sum over O minus sum over -O, divided by
    the total count, negated on the -O side. A coupler orbit targets the mean
    frustration over the union of the orbit and its opposite.

    m maps qubit -> magnetization (dict, or array indexed by qubit id);
    f maps coupler pair -> frustration.
    """
    m_of = m.get if isinstance(m, dict) else lambda q: float(m[q])
    qmembers = orbits.qubit_orbit_members()
    qubit_target: dict[int, float] = {}
    for o, members in qmembers.items():
        opp = orbits.opposite_qubit.get(o)
        if opp == o:
            qubit_target[o] = 0.0
        elif opp is not None:
            if opp in qubit_target:  # partner already computed the pair
                qubit_target[o] = -qubit_target[opp]
                continue
            other = qmembers[opp]
            total = sum(m_of(q) for q in members) - sum(m_of(q) for q in other)
            qubit_target[o] = total / (len(members) + len(other))
        else:
            qubit_target[o] = sum(m_of(q) for q in members) / len(members)

    cmembers = orbits.coupler_orbit_members()
    coupler_target: dict[int, float] = {}
    for o, members in cmembers.items():
        pool = list(members)
        opp = orbits.opposite_coupler.get(o)
        if opp is not None and opp != o:
            pool += cmembers[opp]
        coupler_target[o] = sum(f[e] for e in pool) / len(pool)
    return qubit_target, coupler_target


def _moving_mean(stack: np.ndarray, t: int, window: int) -> np.ndarray:
    lo = max(0, t - window + 1)
    return stack[lo:t + 1].mean(axis=0)


def dispersion(series: "ObservableSeries", window: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Per-iteration spread of moving-mean observables.

    sigma_m is the population std of moving-mean magnetizations across qubits.
    sigma_f is the population std of moving-mean frustrations across the
    couplers of each orbit, averaged over orbits. The window is trailing and
    clipped during warmup.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(series.m) == 0:
        return np.array([]), np.array([])
    if window > len(series.m):
        raise ValueError("window exceeds recorded history")
    mstack = np.stack(series.m)
    fstack = np.stack(series.f)
    iters = mstack.shape[0]
    orbit_ids = np.asarray(series.coupler_orbit_ids)
    orbit_masks = [orbit_ids == o for o in sorted(set(orbit_ids.tolist()))]
    sigma_m = np.zeros(iters)
    sigma_f = np.zeros(iters)
    for t in range(iters):
        mm = _moving_mean(mstack, t, window)
        sigma_m[t] = mm.std()
        if orbit_masks:
            fm = _moving_mean(fstack, t, window)
            sigma_f[t] = float(np.mean([fm[mask].std() for mask in orbit_masks]))
    return sigma_m, sigma_f


@dataclass
class ObservableSeries:
    """Per-iteration record of observables and live shim terms.

    Arrays are aligned with `qubits` (physical ids) and `couplers` (physical
    pairs); the series doubles as the lookback buffer for step-size
    adaptation.
    """

    qubits: list[int]
    couplers: list[tuple[int, int]]
    coupler_orbit_ids: list[int]
    m: list[np.ndarray] = field(default_factory=list)
    f: list[np.ndarray] = field(default_factory=list)
    fbo: list[np.ndarray] = field(default_factory=list)
    coupling: list[np.ndarray] = field(default_factory=list)
    fields: list[np.ndarray] = field(default_factory=list)
    psi: list[np.ndarray] = field(default_factory=list)

    def append(self, m, f, fbo, coupling, fields=None, psi=None):
        self.m.append(np.asarray(m, dtype=float).copy())
        self.f.append(np.asarray(f, dtype=float).copy())
        self.fbo.append(np.asarray(fbo, dtype=float).copy())
        self.coupling.append(np.asarray(coupling, dtype=float).copy())
        if fields is not None:
            self.fields.append(np.asarray(fields, dtype=float).copy())
        if psi is not None:
            self.psi.append(np.asarray(psi, dtype=complex).copy())

    def __len__(self) -> int:
        return len(self.m)

    def history(self, kind: str, lookback: int) -> np.ndarray:
        """Last lookback+1 rows of a shimmed-term history, shape (T, terms)."""
        stack = {"fbo": self.fbo, "coupling": self.coupling, "fields": self.fields}[kind]
        rows = stack[-(lookback + 1):]
        return np.stack(rows) if rows else np.zeros((0, 0))

    def write_csv(self, path):
        """Emit `iter,kind,id,value` rows for m, f, fbo, J, sigma_m, sigma_f."""
        sigma_m, sigma_f = (np.array([]), np.array([]))
        if len(self.m) > 0:
            sigma_m, sigma_f = dispersion(self, window=min(10, len(self.m)))
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            out.write("iter,kind,id,value\n")
            for t in range(len(self.m)):
                for k, q in enumerate(self.qubits):
                    out.write(f"{t},m,{q},{self.m[t][k]!r}\n")
                for k, (i, j) in enumerate(self.couplers):
                    out.write(f"{t},f,{i}-{j},{self.f[t][k]!r}\n")
                for k, q in enumerate(self.qubits):
                    out.write(f"{t},fbo,{q},{self.fbo[t][k]!r}\n")
                for k, (i, j) in enumerate(self.couplers):
                    out.write(f"{t},J,{i}-{j},{self.coupling[t][k]!r}\n")
                if self.fields:
                    for k, q in enumerate(self.qubits):
                        out.write(f"{t},h,{q},{self.fields[t][k]!r}\n")
                out.write(f"{t},sigma_m,all,{sigma_m[t]!r}\n")
                out.write(f"{t},sigma_f,all,{sigma_f[t]!r}\n")

    def write_psi_csv(self, path):
        """Emit `iter,read,re,im` rows of the complex order parameter."""
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            out.write("iter,read,re,im\n")
            for t, arr in enumerate(self.psi):
                for r, z in enumerate(arr):
                    out.write(f"{t},{r},{z.real!r},{z.imag!r}\n")


@dataclass(frozen=True)
class SublatticeColoring:
    """Proper 3-coloring of logical spins (no coupled pair shares a color)."""

    color: dict[int, int]

    def verify(self, model: IsingModel):
        for i in range(model.num_spins):
            if self.color.get(i) not in (0, 1, 2):
                raise ValueError(f"spin {i} is not colored")
        for (i, j) in model.couplings:
            if self.color[i] == self.color[j]:
                raise ValueError(f"adjacent spins {i},{j} share color {self.color[i]}")


def three_coloring(model: IsingModel, coords: dict[int, tuple[int, int]] | None = None) -> SublatticeColoring:
    """Deterministic proper 3-coloring of a triangular-lattice model.

    With lattice coordinates (a, c) the color is (a + 2c) mod 3; without
    coordinates a deterministic exact backtracking search is used. Raises if
    no proper coloring exists under the rule.
    """
    if coords is not None:
        color = {i: (a + 2 * c) % 3 for i, (a, c) in coords.items()}
        coloring = SublatticeColoring(color)
        coloring.verify(model)
        return coloring

    n = model.num_spins
    adj = model.adjacency()
    color: dict[int, int] = {}

    def pick() -> int | None:
        best = None
        for v in range(n):
            if v in color:
                continue
            banned = {color[u] for u in adj[v] if u in color}
            key = (3 - len(banned), v)
            if best is None or key < best[0]:
                best = (key, v, banned)
        return best

    def solve() -> bool:
        nxt = pick()
        if nxt is None:
            return True
        _, v, banned = nxt
        if len(banned) == 3:
            return False
        for c in range(3):
            if c in banned:
                continue
            color[v] = c
            if solve():
                return True
            del color[v]
        return False

    if not solve():
        raise ValueError("model admits no proper 3-coloring")
    coloring = SublatticeColoring(dict(sorted(color.items())))
    coloring.verify(model)
    return coloring


def decode_chains(states: np.ndarray, chains: list[list[int]]) -> np.ndarray:
    """Decode physical samples to logical spins.

    Each chain lists the physical column indices of one logical spin, first
    member first. Two-qubit chains decode by majority with disagreements
    resolved from the first member, which reduces to reading the first member.
    """
    reads = states.shape[0]
    out = np.empty((reads, len(chains)), dtype=np.int8)
    for k, members in enumerate(chains):
        out[:, k] = states[:, members[0]]
    return out


def order_parameter(states, coloring: SublatticeColoring) -> tuple[np.ndarray, float]:
    """Complex order parameter per read, and the mean of its magnitude.

    psi = (sqrt(3)/N) * sum_l s_l * exp(1j * c_l * 2*pi/3) over logical spins.
    """
    if isinstance(states, SampleSet):
        states = states.states
    states = np.asarray(states, dtype=float)
    n = states.shape[1]
    if sorted(coloring.color) != list(range(n)):
        raise ValueError("coloring does not cover the logical spins")
    colors = np.array([coloring.color[i] for i in range(n)])
    phases = np.exp(1j * colors * 2.0 * np.pi / 3.0)
    psi = (np.sqrt(3.0) / n) * (states @ phases)
    return psi, float(np.abs(psi).mean())


def fit_walk_exponent(history: np.ndarray, lookback: int = 20) -> float | None:
    """Best-fit exponent b with var(X_d) proportional to d^b.

    history has shape (T, terms) with T >= lookback+1; X_d collects
    x(t) - x(t-d) at the latest t over all terms. Returns None when any
    var(X_d) is zero (caller skips adaptation).
    """
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[1] < 2:
        raise ValueError("need at least 2 tracked terms")
    if history.shape[0] < lookback + 1:
        raise ValueError("history depth must be at least lookback+1")
    latest = history[-1]
    variances = np.empty(lookback)
    for d in range(1, lookback + 1):
        diff = latest - history[-1 - d]
        variances[d - 1] = diff.var()  # population convention
    if np.any(variances <= 0.0):
        return None
    logd = np.log(np.arange(1, lookback + 1))
    logv = np.log(variances)
    slope = np.polyfit(logd, logv, 1)[0]
    return float(slope)
