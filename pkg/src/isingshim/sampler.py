"""Simulated noisy annealer and an exact enumeration oracle.

The sampler stands in for analog hardware: it draws +-1 samples by annealed
single-spin Metropolis sweeps over a systematically distorted model (static
per-qubit offsets, multiplicative coupler gain errors, coupler-to-field
crosstalk, and an optional slow offset drift). Flux-bias offsets enter as a
constant effective-field shift scaled by fbo_scale; a positive offset pushes
the spin toward +1.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import numba
from numba import njit, prange

from .model import IsingModel

# Deterministic threading layer, available on every target platform.
numba.config.THREADING_LAYER = "workqueue"

__all__ = [
    "NoiseModel",
    "SamplerParams",
    "SampleSet",
    "effective_model",
    "sample",
    "exact_stats",
    "derive_seed",
]


def derive_seed(seed: int, *parts) -> int:
    """Stable 63-bit seed for a named subsystem of an experiment."""
    text = ":".join([str(seed)] + [str(p) for p in parts])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") & ((1 << 63) - 1)


@dataclass
class NoiseModel:
    """Systematic distortions applied by the simulated annealer.

    qubit_offset[i] adds to the effective field of spin i; coupler gains are
    multiplicative (J_eff = J*(1+gain)); every programmed coupler J_ij leaks
    crosstalk_kappa*J_ij into the fields of both endpoints; fbo_scale converts
    flux offsets to effective-field units; drift_sigma>0 random-walks the
    qubit offsets once per sampler call.
    """

    qubit_offset: dict[int, float] = field(default_factory=dict)
    coupler_gain: dict[tuple[int, int], float] = field(default_factory=dict)
    crosstalk_kappa: float = 0.0
    fbo_scale: float = 1.0
    drift_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.fbo_scale <= 0:
            raise ValueError("fbo_scale must be positive")
        for g in self.coupler_gain.values():
            if abs(g) >= 1.0:
                raise ValueError("coupler gains must satisfy |gain| < 1")
        if self.drift_sigma < 0:
            raise ValueError("drift_sigma must be nonnegative")
        self._drift_rng = np.random.default_rng(derive_seed(self.seed, "drift"))

    @classmethod
    def generate(
        cls,
        qubits,
        couplers,
        seed: int,
        offset_sigma: float = 0.02,
        gain_sigma: float = 0.02,
        kappa: float = 0.005,
        fbo_scale: float = 1.0,
        drift_sigma: float = 0.0,
    ) -> "NoiseModel":
        """Draw a reproducible noise realization for the given scope."""
        rng = np.random.default_rng(derive_seed(seed, "noise"))
        qubits = sorted(qubits)
        couplers = sorted((min(e), max(e)) for e in couplers)
        offsets = {q: float(v) for q, v in zip(qubits, rng.normal(0.0, offset_sigma, len(qubits)))}
        raw = rng.normal(0.0, gain_sigma, len(couplers))
        gains = {e: float(np.clip(v, -0.95, 0.95)) for e, v in zip(couplers, raw)}
        return cls(offsets, gains, kappa, fbo_scale, drift_sigma, seed)

    def drift_step(self):
        """Random-walk every qubit offset once (no-op when drift_sigma == 0)."""
        if self.drift_sigma <= 0:
            return
        for q in sorted(self.qubit_offset):
            self.qubit_offset[q] += float(self._drift_rng.normal(0.0, self.drift_sigma))

    def to_json(self) -> str:
        return json.dumps(
            {
                "qubit_offset": {str(q): v for q, v in sorted(self.qubit_offset.items())},
                "coupler_gain": {f"{i},{j}": v for (i, j), v in sorted(self.coupler_gain.items())},
                "crosstalk_kappa": self.crosstalk_kappa,
                "fbo_scale": self.fbo_scale,
                "drift_sigma": self.drift_sigma,
                "seed": self.seed,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "NoiseModel":
        data = json.loads(text)
        offsets = {int(q): float(v) for q, v in data["qubit_offset"].items()}
        gains = {}
        for key, v in data["coupler_gain"].items():
            i, j = key.split(",")
            gains[(int(i), int(j))] = float(v)
        return cls(
            offsets,
            gains,
            float(data.get("crosstalk_kappa", 0.0)),
            float(data.get("fbo_scale", 1.0)),
            float(data.get("drift_sigma", 0.0)),
            int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class SamplerParams:
    reads: int = 100
    sweeps: int = 1000
    beta_initial: float = 0.1
    beta_final: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.reads < 1:
            raise ValueError("reads must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not (0 < self.beta_initial <= self.beta_final):
            raise ValueError("need 0 < beta_initial <= beta_final")


@dataclass(frozen=True)
class SampleSet:
    """reads x num_spins matrix of +-1 samples plus provenance."""

    states: np.ndarray
    provenance: tuple

    @property
    def reads(self) -> int:
        return self.states.shape[0]

    @property
    def num_spins(self) -> int:
        return self.states.shape[1]


def effective_model(
    model: IsingModel, fbos, noise: NoiseModel, nominal: IsingModel | None = None
) -> IsingModel:
    """Model actually realized by the distorted annealer.

    h_eff_i = h_i + offset_i + kappa*sum_j Jhat_ij - fbo_scale*fbo_i, with the
    crosstalk sum taken over the nominal (pre-shim) couplings so the
    disturbance stays static; J_eff = J*(1+gain).
    """
    nominal = model if nominal is None else nominal
    if nominal.num_spins != model.num_spins:
        raise ValueError("nominal model size mismatch")
    if fbos is None:
        fbos = {}
    if isinstance(fbos, dict):
        def fbo_of(i):
            return fbos.get(i, 0.0)
    else:
        def fbo_of(i):
            return float(fbos[i])

    crosstalk: dict[int, float] = {}
    if noise.crosstalk_kappa != 0.0:
        for (i, j), J in nominal.couplings.items():
            crosstalk[i] = crosstalk.get(i, 0.0) + noise.crosstalk_kappa * J
            crosstalk[j] = crosstalk.get(j, 0.0) + noise.crosstalk_kappa * J

    fields: dict[int, float] = {}
    for i in range(model.num_spins):
        h = (
            model.field_of(i)
            + noise.qubit_offset.get(i, 0.0)
            + crosstalk.get(i, 0.0)
            - noise.fbo_scale * fbo_of(i)
        )
        if h != 0.0:
            fields[i] = h
    couplings = {}
    for e, J in model.couplings.items():
        couplings[e] = J * (1.0 + noise.coupler_gain.get(e, 0.0))
    return IsingModel(model.num_spins, fields, couplings)


@njit(cache=True, parallel=True)
def _metropolis_kernel(reads, num_spins, betas, h, indptr, indices, jvals, seed, out):  # pragma: no cover
    big = np.uint64(0x9E3779B97F4A7C15)
    for r in prange(reads):
        x = (np.uint64(seed) + np.uint64(r + 1) * np.uint64(0xBF58476D1CE4E5B9)) | np.uint64(1)
        state = np.empty(num_spins, dtype=np.int8)
        for i in range(num_spins):
            x += big
            z = x
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
            state[i] = 1 if (z >> np.uint64(63)) else -1
        for sweep in range(len(betas)):
            beta = betas[sweep]
            for i in range(num_spins):
                local = h[i]
                for p in range(indptr[i], indptr[i + 1]):
                    local += jvals[p] * state[indices[p]]
                delta = -2.0 * state[i] * local
                if delta <= 0.0:
                    state[i] = -state[i]
                else:
                    x += big
                    z = x
                    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
                    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
                    z = z ^ (z >> np.uint64(31))
                    u = (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)
                    if u < np.exp(-beta * delta):
                        state[i] = -state[i]
        for i in range(num_spins):
            out[r, i] = state[i]


def _model_arrays(model: IsingModel):
    n = model.num_spins
    h = np.zeros(n)
    for i, v in model.fields.items():
        h[i] = v
    counts = np.zeros(n, dtype=np.int64)
    for i, j in model.couplings:
        counts[i] += 1
        counts[j] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.zeros(indptr[-1], dtype=np.int64)
    jvals = np.zeros(indptr[-1])
    cursor = indptr[:-1].copy()
    for (i, j), J in sorted(model.couplings.items()):
        indices[cursor[i]] = j
        jvals[cursor[i]] = J
        cursor[i] += 1
        indices[cursor[j]] = i
        jvals[cursor[j]] = J
        cursor[j] += 1
    return h, indptr, indices, jvals


def sample(
    model: IsingModel,
    fbos,
    noise: NoiseModel,
    params: SamplerParams,
    nominal: IsingModel | None = None,
    iteration: int | None = None,
) -> SampleSet:
    """Annealed Metropolis samples from the effective (distorted) model.

    Each read starts from a random +-1 state and performs single-spin sweeps
    with beta interpolated geometrically from beta_initial to beta_final.
    Deterministic given seeds; the offset drift advances once per call.
    """
    noise.drift_step()
    eff = effective_model(model, fbos, noise, nominal=nominal)
    h, indptr, indices, jvals = _model_arrays(eff)
    if params.sweeps == 1:
        betas = np.array([params.beta_final])
    else:
        ratio = params.beta_final / params.beta_initial
        betas = params.beta_initial * ratio ** (np.arange(params.sweeps) / (params.sweeps - 1))
    out = np.empty((params.reads, model.num_spins), dtype=np.int8)
    _metropolis_kernel(
        params.reads, model.num_spins, betas, h, indptr, indices, jvals,
        np.uint64(params.seed & ((1 << 63) - 1)), out,
    )
    return SampleSet(out, (model.content_hash(), params, iteration))


def exact_stats(model: IsingModel, beta: float):
    """Exact Boltzmann magnetizations and frustration probabilities.

    Full 2^N enumeration; N is capped at 24 spins.
    """
    n = model.num_spins
    if n > 24:
        raise ValueError("exact enumeration is limited to 24 spins")
    count = 1 << n
    m_acc = np.zeros(n)
    edges = sorted(model.couplings)
    corr_acc = np.zeros(len(edges))
    weight_acc = 0.0

    h = np.zeros(n)
    for i, v in model.fields.items():
        h[i] = v
    chunk = 1 << 18
    # First pass for the minimum energy (numerical stability of the weights).
    e_min = np.inf
    for start in range(0, count, chunk):
        idx = np.arange(start, min(start + chunk, count), dtype=np.uint64)
        spins = ((idx[:, None] >> np.arange(n, dtype=np.uint64)) & 1).astype(np.float64) * 2 - 1
        e = spins @ h
        for k, (i, j) in enumerate(edges):
            e += model.couplings[(i, j)] * spins[:, i] * spins[:, j]
        e_min = min(e_min, float(e.min()))
    for start in range(0, count, chunk):
        idx = np.arange(start, min(start + chunk, count), dtype=np.uint64)
        spins = ((idx[:, None] >> np.arange(n, dtype=np.uint64)) & 1).astype(np.float64) * 2 - 1
        e = spins @ h
        prods = np.empty((len(idx), len(edges)))
        for k, (i, j) in enumerate(edges):
            prods[:, k] = spins[:, i] * spins[:, j]
            e += model.couplings[(i, j)] * prods[:, k]
        w = np.exp(-beta * (e - e_min))
        weight_acc += w.sum()
        m_acc += w @ spins
        corr_acc += w @ prods
    m = m_acc / weight_acc
    corr = corr_acc / weight_acc
    f = {}
    for k, e in enumerate(edges):
        f[e] = (1.0 + np.sign(model.couplings[e]) * corr[k]) / 2.0
    return m, f
