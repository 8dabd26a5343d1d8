"""Feedback shim loops.

Per iteration: sample the live model on the simulated annealer, compute
magnetizations and frustrations, then apply the active corrections in a fixed
order (flux offsets, couplers, fields, damping, step-size adaptation). The
flux update is Phi_i <- Phi_i - alpha_phi*(m_i - mbar); the coupler update is
J <- J*(1 + alpha_j*(f - fbar)) followed by per-orbit renormalization to the
nominal mean and truncation to the programmable range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .embedding import EmbeddingSet, program_embeddings
from .model import IsingModel
from .orbits import Orbits
from .sampler import NoiseModel, SamplerParams, derive_seed, sample
from .stats import (
    ObservableSeries,
    SublatticeColoring,
    decode_chains,
    fit_walk_exponent,
    frustrations,
    magnetizations,
    orbit_means,
    order_parameter,
)

__all__ = [
    "ShimConfig",
    "ShimState",
    "OrderParamSpec",
    "fbo_step",
    "coupler_step",
    "field_step",
    "smooth_fields",
    "damp_step",
    "adapt_step_size",
    "run_loop",
    "ensemble_fbo_shim",
]

# Multiplier floor keeps Eq-style multiplicative updates from crossing zero.
MIN_COUPLER_MULTIPLIER = 0.5


@dataclass
class ShimConfig:
    """Stage schedule, step sizes, and shim options.

    Stage starts are iteration thresholds (None disables a stage). The
    adaptive rule multiplies a step size by 1+epsilon when the fitted walk
    exponent exceeds adapt_high and divides when it falls below adapt_low.
    """

    fbo_start: int | None = None
    coupler_start: int | None = None
    field_start: int | None = None
    field_mean: float = 0.0
    alpha_phi: float = 0.05
    alpha_j: float = 0.01
    alpha_h: float = 0.01
    coupling_range: tuple[float, float] = (-2.0, 1.0)
    adaptive: bool = False
    adapt_epsilon: float = 0.1
    adapt_high: float = 1.1
    adapt_low: float = 0.9
    adapt_lookback: int = 20
    adapt_every: int = 1
    damping: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.damping <= 1.0):
            raise ValueError("damping must be in [0, 1]")
        if self.adapt_low > self.adapt_high:
            raise ValueError("adaptive thresholds out of order")
        for start in (self.fbo_start, self.coupler_start, self.field_start):
            if start is not None and start < 0:
                raise ValueError("stage starts must be nonnegative")


@dataclass
class ShimState:
    """Live shim terms over the physical qubits and couplers in play."""

    qubits: list[int]
    couplers: list[tuple[int, int]]
    fbo: np.ndarray
    couplings: np.ndarray
    fields: np.ndarray
    nominal_couplings: np.ndarray
    nominal_fields: np.ndarray
    alpha_phi: float
    alpha_j: float
    alpha_h: float
    iteration: int = 0

    @classmethod
    def from_physical(cls, physical: IsingModel, config: ShimConfig,
                      qubits: list[int] | None = None) -> "ShimState":
        qubits = sorted(
            {q for e in physical.couplings for q in e} | set(physical.fields)
        ) if qubits is None else list(qubits)
        couplers = sorted(physical.couplings)
        couplings = np.array([physical.couplings[e] for e in couplers])
        fields = np.array([physical.field_of(q) for q in qubits])
        return cls(
            qubits=qubits,
            couplers=couplers,
            fbo=np.zeros(len(qubits)),
            couplings=couplings,
            fields=fields,
            nominal_couplings=couplings.copy(),
            nominal_fields=fields.copy(),
            alpha_phi=config.alpha_phi,
            alpha_j=config.alpha_j,
            alpha_h=config.alpha_h,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "iteration": self.iteration,
                "alpha_phi": self.alpha_phi,
                "alpha_j": self.alpha_j,
                "alpha_h": self.alpha_h,
                "fbo": {str(q): v for q, v in zip(self.qubits, self.fbo.tolist())},
                "couplings": {f"{i},{j}": v for (i, j), v in zip(self.couplers, self.couplings.tolist())},
                "fields": {str(q): v for q, v in zip(self.qubits, self.fields.tolist())},
                "nominal_couplings": {f"{i},{j}": v for (i, j), v in zip(self.couplers, self.nominal_couplings.tolist())},
                "nominal_fields": {str(q): v for q, v in zip(self.qubits, self.nominal_fields.tolist())},
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ShimState":
        data = json.loads(text)
        qubits = sorted(int(q) for q in data["fbo"])
        couplers = sorted(tuple(int(x) for x in key.split(",")) for key in data["couplings"])
        return cls(
            qubits=qubits,
            couplers=[(i, j) for i, j in couplers],
            fbo=np.array([data["fbo"][str(q)] for q in qubits]),
            couplings=np.array([data["couplings"][f"{i},{j}"] for i, j in couplers]),
            fields=np.array([data["fields"][str(q)] for q in qubits]),
            nominal_couplings=np.array([data["nominal_couplings"][f"{i},{j}"] for i, j in couplers]),
            nominal_fields=np.array([data["nominal_fields"][str(q)] for q in qubits]),
            alpha_phi=float(data["alpha_phi"]),
            alpha_j=float(data["alpha_j"]),
            alpha_h=float(data["alpha_h"]),
            iteration=int(data["iteration"]),
        )

    def live_model(self, num_spins: int | None = None) -> IsingModel:
        n = (max(self.qubits) + 1 if self.qubits else 0) if num_spins is None else num_spins
        fields = {q: h for q, h in zip(self.qubits, self.fields.tolist()) if h != 0.0}
        couplings = {e: J for e, J in zip(self.couplers, self.couplings.tolist())}
        return IsingModel(n, fields, couplings)


def fbo_step(state: ShimState, m, orbits: Orbits) -> ShimState:
    """Flux update toward the per-orbit magnetization target; touches nothing else."""
    m_dict = m if isinstance(m, dict) else {q: float(v) for q, v in zip(state.qubits, m)}
    qubit_target, _ = orbit_means(m_dict, {e: 0.0 for e in state.couplers}, orbits)
    for k, q in enumerate(state.qubits):
        target = qubit_target[orbits.qubit_orbit[q]]
        state.fbo[k] -= state.alpha_phi * (m_dict[q] - target)
    return state


def coupler_step(state: ShimState, f, orbits: Orbits, config: ShimConfig) -> ShimState:
    """Multiplicative residual-frustration update, renormalized then truncated.

    After the per-coupler update each orbit is rescaled so its mean coupling
    equals its nominal mean (preventing cumulative shrinkage), then every
    coupler is clamped to the programmable range.
    """
    f_dict = f if isinstance(f, dict) else {e: float(v) for e, v in zip(state.couplers, f)}
    _, coupler_target = orbit_means({q: 0.0 for q in state.qubits}, f_dict, orbits)
    index = {e: k for k, e in enumerate(state.couplers)}
    for k, e in enumerate(state.couplers):
        fbar = coupler_target[orbits.coupler_orbit[e]]
        multiplier = 1.0 + state.alpha_j * (f_dict[e] - fbar)
        state.couplings[k] *= max(multiplier, MIN_COUPLER_MULTIPLIER)
    members: dict[int, list[int]] = {}
    for e, o in orbits.coupler_orbit.items():
        if e in index:
            members.setdefault(o, []).append(index[e])
    for ks in members.values():
        nominal_mean = state.nominal_couplings[ks].mean()
        current_mean = state.couplings[ks].mean()
        if nominal_mean == 0.0 or current_mean == 0.0:
            raise ValueError("cannot renormalize an orbit with zero mean coupling")
        state.couplings[ks] *= nominal_mean / current_mean
    lo, hi = config.coupling_range
    np.clip(state.couplings, lo, hi, out=state.couplings)
    return state


def field_step(state: ShimState, m, orbits: Orbits, hbar: float) -> ShimState:
    """Field update with the per-orbit mean pinned at hbar exactly."""
    m_dict = m if isinstance(m, dict) else {q: float(v) for q, v in zip(state.qubits, m)}
    qubit_target, _ = orbit_means(m_dict, {e: 0.0 for e in state.couplers}, orbits)
    index = {q: k for k, q in enumerate(state.qubits)}
    for k, q in enumerate(state.qubits):
        target = qubit_target[orbits.qubit_orbit[q]]
        state.fields[k] -= state.alpha_h * (m_dict[q] - target)
    members: dict[int, list[int]] = {}
    for q, o in orbits.qubit_orbit.items():
        if q in index:
            members.setdefault(o, []).append(index[q])
    for ks in members.values():
        state.fields[ks] += hbar - state.fields[ks].mean()
    return state


def smooth_fields(h_grid: dict[float, np.ndarray], eps: float) -> dict[float, np.ndarray]:
    """Smooth per-qubit fields across a grid of simulated mean fields.

    Interior grid points move toward the average of their neighbors:
    h <- (1-eps)*h + eps*(h_lower + h_upper)/2. Endpoints are untouched.
    """
    if not (0.0 <= eps < 1.0):
        raise ValueError("eps must be in [0, 1)")
    keys = sorted(h_grid)
    if len(keys) < 3:
        raise ValueError("grid needs at least 3 mean-field values")
    out = {k: np.asarray(h_grid[k], dtype=float).copy() for k in keys}
    for prev, mid, nxt in zip(keys, keys[1:], keys[2:]):
        out[mid] = (1.0 - eps) * np.asarray(h_grid[mid], dtype=float) + eps * (
            np.asarray(h_grid[prev], dtype=float) + np.asarray(h_grid[nxt], dtype=float)
        ) / 2.0
    return out


def damp_step(state: ShimState, rho: float, nominal=None) -> ShimState:
    """Pull every live coupler toward nominal: J <- J - rho*(J - Jhat)."""
    if not (0.0 <= rho <= 1.0):
        raise ValueError("rho must be in [0, 1]")
    nominal = state.nominal_couplings if nominal is None else np.asarray(nominal, dtype=float)
    state.couplings -= rho * (state.couplings - nominal)
    return state


def adapt_step_size(state: ShimState, which: str, series: ObservableSeries,
                    config: ShimConfig) -> ShimState:
    """Adjust one step size from the walk exponent of its term histories."""
    kind = {"phi": "fbo", "j": "coupling", "h": "fields"}[which]
    history = series.history(kind, config.adapt_lookback)
    if history.shape[0] < config.adapt_lookback + 1 or history.shape[1] < 2:
        return state
    b = fit_walk_exponent(history, lookback=config.adapt_lookback)
    if b is None:
        return state
    factor = 1.0 + config.adapt_epsilon
    attr = {"phi": "alpha_phi", "j": "alpha_j", "h": "alpha_h"}[which]
    if b > config.adapt_high:
        setattr(state, attr, getattr(state, attr) * factor)
    elif b < config.adapt_low:
        setattr(state, attr, getattr(state, attr) / factor)
    return state


@dataclass(frozen=True)
class OrderParamSpec:
    """Per-copy logical chain layout and sublattice coloring for psi tracking.

    chains_per_copy[k][l] lists the physical qubits of logical spin l in copy
    k (first member first; 2-qubit chains decode from their first member).
    """

    chains_per_copy: list[list[list[int]]]
    coloring: SublatticeColoring


@dataclass
class _Active:
    """Dense view over the qubits actually carrying the experiment."""

    qubits: list[int]
    index: dict[int, int]
    noise: NoiseModel

    @classmethod
    def build(cls, state: ShimState, noise: NoiseModel) -> "_Active":
        qubits = list(state.qubits)
        index = {q: k for k, q in enumerate(qubits)}
        dense_noise = NoiseModel(
            qubit_offset={index[q]: v for q, v in noise.qubit_offset.items() if q in index},
            coupler_gain={
                (index[i], index[j]) if index[i] < index[j] else (index[j], index[i]): v
                for (i, j), v in noise.coupler_gain.items()
                if i in index and j in index
            },
            crosstalk_kappa=noise.crosstalk_kappa,
            fbo_scale=noise.fbo_scale,
            drift_sigma=noise.drift_sigma,
            seed=noise.seed,
        )
        return cls(qubits, index, dense_noise)

    def dense_model(self, state: ShimState) -> IsingModel:
        fields = {self.index[q]: h for q, h in zip(state.qubits, state.fields.tolist()) if h != 0.0}
        couplings = {}
        for (i, j), J in zip(state.couplers, state.couplings.tolist()):
            a, b = self.index[i], self.index[j]
            couplings[(min(a, b), max(a, b))] = J
        return IsingModel(len(self.qubits), fields, couplings)

    def dense_nominal(self, state: ShimState) -> IsingModel:
        fields = {self.index[q]: h for q, h in zip(state.qubits, state.nominal_fields.tolist()) if h != 0.0}
        couplings = {}
        for (i, j), J in zip(state.couplers, state.nominal_couplings.tolist()):
            a, b = self.index[i], self.index[j]
            couplings[(min(a, b), max(a, b))] = J
        return IsingModel(len(self.qubits), fields, couplings)


def run_loop(
    model: IsingModel,
    embeddings: EmbeddingSet,
    orbits: Orbits,
    noise: NoiseModel,
    config: ShimConfig,
    iterations: int,
    params: SamplerParams | None = None,
    seed: int = 0,
    initial_state: ShimState | None = None,
    order_param: OrderParamSpec | None = None,
) -> tuple[ObservableSeries, ShimState]:
    """Iterative shim of an embedded model against the noisy sampler.

    Each iteration samples the live physical model, derives magnetizations
    and frustrations, applies the active stages in order (flux offsets,
    couplers, fields, damping), optionally adapts step sizes, and appends to
    the returned series. Only qubits used by the embeddings are swept: the
    rest of the hardware carries zero field and no couplers and contributes
    nothing to the statistics. Deterministic for fixed seeds and config.
    """
    params = SamplerParams() if params is None else params
    physical = program_embeddings(model, embeddings)
    if initial_state is None:
        state = ShimState.from_physical(physical, config, qubits=embeddings.used_qubits())
    else:
        state = initial_state
    if set(orbits.qubit_orbit) != set(state.qubits):
        raise ValueError("orbit map does not cover the embedded qubits")
    active = _Active.build(state, noise)
    orbit_ids = [orbits.coupler_orbit[e] for e in state.couplers]
    series = ObservableSeries(list(state.qubits), list(state.couplers), orbit_ids)
    nominal_dense = active.dense_nominal(state)

    for t in range(iterations):
        live = active.dense_model(state)
        fbo_dense = state.fbo  # state.qubits order == dense order
        it_params = replace(params, seed=derive_seed(seed, "iter", t, params.seed))
        ss = sample(live, fbo_dense, active.noise, it_params, nominal=nominal_dense, iteration=t)
        m_dense = magnetizations(ss)
        f_dense = frustrations(ss, live)
        m_phys = {q: float(m_dense[active.index[q]]) for q in state.qubits}
        f_phys = {}
        for (i, j) in state.couplers:
            a, b = active.index[i], active.index[j]
            f_phys[(i, j)] = f_dense[(min(a, b), max(a, b))]

        if config.fbo_start is not None and t >= config.fbo_start:
            fbo_step(state, m_phys, orbits)
        if config.coupler_start is not None and t >= config.coupler_start:
            coupler_step(state, f_phys, orbits, config)
        if config.field_start is not None and t >= config.field_start and config.field_mean != 0.0:
            field_step(state, m_phys, orbits, config.field_mean)
        if config.damping > 0.0:
            damp_step(state, config.damping)

        psi = None
        if order_param is not None:
            chunks = []
            for chains in order_param.chains_per_copy:
                dense_chains = [[active.index[q] for q in chain] for chain in chains]
                logical = decode_chains(ss.states, dense_chains)
                chunk, _ = order_parameter(logical, order_param.coloring)
                chunks.append(chunk)
            psi = np.concatenate(chunks)
        series.append(
            m=[m_phys[q] for q in state.qubits],
            f=[f_phys[e] for e in state.couplers],
            fbo=state.fbo,
            coupling=state.couplings,
            fields=state.fields,
            psi=psi,
        )

        if config.adaptive and t % config.adapt_every == 0:
            if config.fbo_start is not None and t >= config.fbo_start:
                adapt_step_size(state, "phi", series, config)
            if config.coupler_start is not None and t >= config.coupler_start:
                adapt_step_size(state, "j", series, config)
            if config.field_start is not None and t >= config.field_start and config.field_mean != 0.0:
                adapt_step_size(state, "h", series, config)
        state.iteration = t + 1
    return series, state


def ensemble_fbo_shim(
    realizations: list[IsingModel],
    noise: NoiseModel,
    config: ShimConfig,
    cycles: int = 20,
    params: SamplerParams | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Shared flux-offset shim cycling round-robin over zero-field realizations.

    All realizations must use the same qubit set with h=0 everywhere; the
    magnetization target is 0 and couplers are never shimmed. Returns the
    final per-qubit flux offsets and the per-call magnetization history.
    """
    if not realizations:
        raise ValueError("need at least one realization")
    n = realizations[0].num_spins
    for r in realizations:
        if r.num_spins != n:
            raise ValueError("realizations must share one qubit set")
        if any(v != 0.0 for v in r.fields.values()):
            raise ValueError("ensemble shim requires h=0 realizations")
    params = SamplerParams() if params is None else params
    fbo = np.zeros(n)
    history: list[np.ndarray] = []
    step = 0
    for cycle in range(cycles):
        for k, r in enumerate(realizations):
            it_params = replace(params, seed=derive_seed(seed, "ensemble", cycle, k, params.seed))
            ss = sample(r, fbo, noise, it_params, iteration=step)
            m = magnetizations(ss)
            fbo -= config.alpha_phi * m
            history.append(m)
            step += 1
    return fbo, history
