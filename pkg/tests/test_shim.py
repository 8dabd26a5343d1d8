import numpy as np
import pytest

from isingshim.embedding import EmbeddingSet
from isingshim.generators import make_fm_loop, make_frustrated_loop
from isingshim.model import IsingModel
from isingshim.orbits import ising_orbits, merge_embedding_orbits, override_orbits
from isingshim.sampler import NoiseModel, SamplerParams
from isingshim.shim import (
    ShimConfig,
    ShimState,
    adapt_step_size,
    coupler_step,
    damp_step,
    ensemble_fbo_shim,
    fbo_step,
    field_step,
    run_loop,
    smooth_fields,
)
from isingshim.stats import ObservableSeries


def loop_state(model, config=None, alpha_phi=0.05, alpha_j=0.01):
    config = config or ShimConfig(alpha_phi=alpha_phi, alpha_j=alpha_j)
    return ShimState.from_physical(model, config, qubits=list(range(model.num_spins)))


def test_fbo_step_arithmetic():
    m = make_fm_loop(4, -1.0)
    orbits = override_orbits(m, [[e] for e in m.couplings], qubit_classes=[[i] for i in range(4)])
    state = loop_state(m, alpha_phi=1e-5)
    state.alpha_phi = 1e-5
    fbo_step(state, {0: 0.5, 1: 0.0, 2: 0.0, 3: 0.0}, orbits)
    assert state.fbo[0] == pytest.approx(-5e-6)
    assert np.all(state.fbo[1:] == 0.0)


def test_fbo_step_fixed_point():
    m = make_fm_loop(4, -1.0)
    orbits = ising_orbits(m)  # one self-opposite orbit: target 0
    state = loop_state(m)
    baseline = state.fbo.copy()
    fbo_step(state, {i: 0.0 for i in range(4)}, orbits)
    assert np.array_equal(state.fbo, baseline)
    # nothing else mutated
    assert np.array_equal(state.couplings, state.nominal_couplings)


def test_coupler_step_arithmetic():
    m = IsingModel(3, {}, {(0, 1): -0.2, (1, 2): -0.2})
    orbits = override_orbits(m, [[(0, 1), (1, 2)]])
    state = loop_state(m)
    state.alpha_j = 0.001
    coupler_step(state, {(0, 1): 0.6, (1, 2): 0.4}, orbits, ShimConfig())
    # fbar = 0.5; the residual 0.1 multiplies (0,1) by 1.0001
    assert state.couplings[0] == pytest.approx(-0.20002, abs=1e-9)
    assert state.couplings[1] == pytest.approx(-0.19998, abs=1e-9)


def test_coupler_step_uniform_frustration_is_fixed_point():
    m = make_fm_loop(6, -0.2)
    orbits = ising_orbits(m)
    state = loop_state(m)
    coupler_step(state, {e: 0.37 for e in m.couplings}, orbits, ShimConfig())
    assert np.allclose(state.couplings, state.nominal_couplings, atol=1e-15)


def test_coupler_step_renormalizes_orbit_mean():
    m = make_frustrated_loop(16, -0.9)
    orbits = ising_orbits(m)
    state = loop_state(m)
    state.alpha_j = 0.5
    rng = np.random.default_rng(5)
    f = {e: float(rng.uniform(0.1, 0.9)) for e in m.couplings}
    coupler_step(state, f, orbits, ShimConfig())
    for members in orbits.coupler_orbit_members().values():
        idx = [state.couplers.index(e) for e in members]
        nominal = np.mean([m.couplings[e] for e in members])
        assert abs(state.couplings[idx].mean() - nominal) <= 1e-9
    assert np.all(state.couplings >= -2.0) and np.all(state.couplings <= 1.0)


def test_coupler_step_truncates_to_range():
    m = IsingModel(2, {}, {(0, 1): 0.9})
    orbits = override_orbits(m, [[(0, 1)]])
    state = loop_state(m)
    state.couplings[0] = 5.0  # pretend an earlier update blew up
    state.nominal_couplings[0] = 0.9
    coupler_step(state, {(0, 1): 0.5}, orbits, ShimConfig())
    assert state.couplings[0] <= 1.0


def test_field_step_recenters_exactly():
    m = IsingModel(2, {0: 0.5, 1: 0.5}, {(0, 1): 1.0})
    orbits = override_orbits(m, [[(0, 1)]], qubit_classes=[[0, 1]])
    state = loop_state(m)
    state.alpha_h = 0.1
    field_step(state, {0: 0.2, 1: 0.0}, orbits, hbar=0.5)
    assert state.fields.mean() == pytest.approx(0.5, abs=1e-12)
    assert state.fields[0] == pytest.approx(0.49, abs=1e-12)
    assert state.fields[1] == pytest.approx(0.51, abs=1e-12)


def test_field_step_uniform_m_unchanged():
    m = IsingModel(2, {0: 0.5, 1: 0.5}, {(0, 1): 1.0})
    orbits = override_orbits(m, [[(0, 1)]], qubit_classes=[[0, 1]])
    state = loop_state(m)
    field_step(state, {0: 0.3, 1: 0.3}, orbits, hbar=0.5)
    assert np.allclose(state.fields, [0.5, 0.5], atol=1e-12)


def test_smooth_fields():
    grid = {0.0: np.array([1.0]), 0.1: np.array([5.0]), 0.2: np.array([1.0])}
    out = smooth_fields(grid, eps=0.1)
    assert out[0.1][0] == pytest.approx(4.6)
    assert out[0.0][0] == 1.0 and out[0.2][0] == 1.0
    # eps=0 unchanged
    out0 = smooth_fields(grid, eps=0.0)
    assert all(np.array_equal(out0[k], grid[k]) for k in grid)
    # linear profiles are fixed points
    lin = {0.0: np.array([0.0]), 0.1: np.array([1.0]), 0.2: np.array([2.0])}
    outl = smooth_fields(lin, eps=0.3)
    assert outl[0.1][0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        smooth_fields({0.0: np.array([1.0])}, eps=0.1)


def test_damp_step():
    m = IsingModel(2, {}, {(0, 1): -0.2})
    state = loop_state(m)
    state.couplings[0] = -0.3
    state.nominal_couplings[0] = -0.2
    damp_step(state, 0.1)
    assert state.couplings[0] == pytest.approx(-0.29)
    damp_step(state, 1.0)
    assert state.couplings[0] == pytest.approx(-0.2)
    before = state.couplings.copy()
    damp_step(state, 0.0)
    assert np.array_equal(state.couplings, before)


def test_damp_step_contraction():
    m = IsingModel(2, {}, {(0, 1): -0.2})
    state = loop_state(m)
    rng = np.random.default_rng(0)
    state.couplings[0] = 0.7
    gap = abs(state.couplings[0] - state.nominal_couplings[0])
    for _ in range(10):
        rho = float(rng.uniform(0, 1))
        damp_step(state, rho)
        new_gap = abs(state.couplings[0] - state.nominal_couplings[0])
        assert new_gap <= gap + 1e-15
        gap = new_gap


def synthetic_series(history, nq):
    series = ObservableSeries(list(range(nq)), [], [])
    for row in history:
        series.append(np.zeros(nq), [], row, [])
    return series


def test_adapt_step_size_rules():
    rng = np.random.default_rng(7)
    cfg = ShimConfig(adaptive=True)
    # superlinear: per-term drift
    drift = rng.normal(0, 1, size=(1, 64))
    hist = np.cumsum(rng.normal(0, 1, size=(30, 64)) + drift, axis=0)
    m = make_fm_loop(4, -1.0)
    state = loop_state(m)
    state.alpha_phi = 1.0
    adapt_step_size(state, "phi", synthetic_series(hist, 64), cfg)
    assert state.alpha_phi == pytest.approx(1.1)
    # sublinear: oscillation
    t = np.arange(30)[:, None]
    amps = rng.normal(0, 1, size=(1, 64))
    hist2 = amps * (-1.0) ** t + rng.normal(0, 0.05, size=(30, 64))
    state.alpha_phi = 1.0
    adapt_step_size(state, "phi", synthetic_series(hist2, 64), cfg)
    assert state.alpha_phi == pytest.approx(1.0 / 1.1)
    # unbiased walk: dead zone
    hist3 = np.cumsum(rng.normal(0, 1, size=(40, 2000)), axis=0)
    state.alpha_phi = 1.0
    adapt_step_size(state, "phi", synthetic_series(hist3, 2000), cfg)
    assert state.alpha_phi == 1.0
    # not enough history: unchanged
    state.alpha_phi = 1.0
    adapt_step_size(state, "phi", synthetic_series(hist3[:5], 2000), cfg)
    assert state.alpha_phi == 1.0


def test_shim_state_json_roundtrip():
    m = make_frustrated_loop(6, -0.9)
    state = loop_state(m)
    state.fbo[2] = 0.125
    state.couplings[1] = -0.8
    state.iteration = 42
    back = ShimState.from_json(state.to_json())
    assert back.qubits == state.qubits
    assert back.couplers == state.couplers
    assert np.array_equal(back.fbo, state.fbo)
    assert np.array_equal(back.couplings, state.couplings)
    assert back.iteration == 42


def run_small_loop(iterations=6, config=None, seed=0, model=None, maps=None):
    model = model or make_frustrated_loop(6, -0.9)
    maps = maps or [list(range(model.num_spins))]
    es = EmbeddingSet(model, maps)
    orbits = merge_embedding_orbits(ising_orbits(model), es)
    noise = NoiseModel.generate(es.used_qubits(),
                                [(m[i], m[j]) for m in maps for (i, j) in model.couplings],
                                seed=seed)
    config = config or ShimConfig(fbo_start=2, coupler_start=4)
    params = SamplerParams(reads=40, sweeps=100)
    return run_loop(model, es, orbits, noise, config, iterations, params=params, seed=seed)


def test_run_loop_stages_disabled_constant():
    series, state = run_small_loop(config=ShimConfig())
    fbo = np.stack(series.fbo)
    J = np.stack(series.coupling)
    assert np.all(fbo == fbo[0])
    assert np.all(J == J[0])


def test_run_loop_stage_activation():
    series, state = run_small_loop(iterations=6, config=ShimConfig(fbo_start=2, coupler_start=4))
    fbo = np.stack(series.fbo)
    J = np.stack(series.coupling)
    assert np.all(fbo[:2] == 0.0)
    assert np.any(fbo[2:] != 0.0)
    assert np.all(J[:4] == J[0])
    assert np.any(J[4:] != J[0])


def test_run_loop_deterministic():
    s1, st1 = run_small_loop(seed=5)
    s2, st2 = run_small_loop(seed=5)
    for a, b in zip(s1.m, s2.m):
        assert np.array_equal(a, b)
    for a, b in zip(s1.coupling, s2.coupling):
        assert np.array_equal(a, b)
    assert np.array_equal(st1.fbo, st2.fbo)


def test_run_loop_warm_start_resumes():
    series, state = run_small_loop(iterations=4)
    back = ShimState.from_json(state.to_json())
    series2, state2 = run_small_loop(iterations=2)
    # warm-started state carries the live terms forward
    assert np.array_equal(back.couplings, state.couplings)


def test_run_loop_single_qubit_bias_corrected():
    # a known positive offset is pushed below the sampling noise floor
    model = IsingModel(1, {}, {})
    es = EmbeddingSet(model, [[0]])
    orbits = merge_embedding_orbits(ising_orbits(model), es)
    noise = NoiseModel(qubit_offset={0: 0.2}, seed=1)
    cfg = ShimConfig(fbo_start=10, alpha_phi=0.05)
    params = SamplerParams(reads=100, sweeps=60, beta_initial=1.0, beta_final=1.0)
    series, state = run_loop(model, es, orbits, noise, cfg, 70, params=params, seed=3)
    m = np.stack(series.m)[:, 0]
    early = abs(m[:10].mean())
    late = abs(m[-10:].mean())
    floor = 3 / np.sqrt(100 * 10)
    assert late < early
    assert late < floor
    assert early > floor  # the bias was detectable before the shim


def test_ensemble_fbo_shim_rejects_fields():
    bad = IsingModel(2, {0: 0.5}, {(0, 1): 1.0})
    with pytest.raises(ValueError):
        ensemble_fbo_shim([bad], NoiseModel(), ShimConfig())


def test_ensemble_fbo_shim_reduces_bias():
    rng = np.random.default_rng(11)
    n = 8
    loop = make_fm_loop(n, -0.5)
    realizations = []
    for _ in range(6):
        signs = rng.choice([-1.0, 1.0], size=n)
        couplings = {}
        for k, e in enumerate(sorted(loop.couplings)):
            couplings[e] = 0.9 * float(signs[k])
        realizations.append(IsingModel(n, {}, couplings))
    noise = NoiseModel.generate(range(n), loop.couplings, seed=13, offset_sigma=0.05)
    params = SamplerParams(reads=50, sweeps=150)
    cfg = ShimConfig(alpha_phi=0.05)
    fbo, history = ensemble_fbo_shim(realizations, noise, cfg, cycles=12, params=params, seed=2)
    early = np.abs(np.mean(history[: len(realizations)], axis=0))
    late = np.abs(np.mean(history[-len(realizations):], axis=0))
    assert late.mean() < early.mean()
    # single realization behaves like an FBO-only loop (offsets get cancelled)
    single, hist1 = ensemble_fbo_shim(realizations[:1], noise, cfg, cycles=12, params=params, seed=2)
    assert np.abs(np.mean(hist1[-3:], axis=0)).mean() < np.abs(hist1[0]).mean()
