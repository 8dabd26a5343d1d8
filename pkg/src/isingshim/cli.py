"""Command-line front end: orbit analysis, embedding, shim experiments.

Exit codes: 0 success, 2 usage or input error, 3 empty result,
4 search/resource budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .embedding import EmbeddingSet, cylinder_embeddings, raster_embed
from .generators import (
    boundary_afm_couplers,
    contract_chains,
    make_buckyball,
    make_fm_loop,
    make_frustrated_loop,
    make_square_cylinder,
)
from .hardware import make_chimera, make_pegasus
from .model import IsingModel, ModelFormatError, load_model
from .orbits import SearchBudgetExceeded, ising_orbits, merge_embedding_orbits, override_orbits
from .presets import PRESET_NAMES, preset_config
from .sampler import NoiseModel, SamplerParams, derive_seed
from .shim import OrderParamSpec, ShimConfig, ShimState, ensemble_fbo_shim, run_loop
from .signed import quantize
from .stats import dispersion, three_coloring

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EMPTY = 3
EXIT_BUDGET = 4


class EmptyResult(RuntimeError):
    pass


class UsageError(RuntimeError):
    pass


def parse_hardware(spec: str):
    kind, _, rest = spec.partition(":")
    try:
        if kind == "pegasus":
            return make_pegasus(int(rest))
        if kind == "chimera":
            m, n, t = (int(x) for x in rest.split(","))
            return make_chimera(m, n, t)
    except ValueError as err:
        raise UsageError(f"bad hardware spec {spec!r}: {err}") from err
    raise UsageError(f"unknown hardware family in {spec!r} (use pegasus:M or chimera:M,N,T)")


def parse_pattern(spec: str) -> IsingModel:
    kind, _, rest = spec.partition(":")
    if kind == "loop":
        return make_fm_loop(int(rest), -1.0)
    if kind == "frustrated_loop":
        return make_frustrated_loop(int(rest), -1.0)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"pattern {spec!r} is neither loop:N, frustrated_loop:N, nor a file")
    return load_model(path)


def orbits_to_json(orbits) -> dict:
    return {
        "qubit_orbits": {str(q): o for q, o in sorted(orbits.qubit_orbit.items())},
        "coupler_orbits": {f"{i},{j}": o for (i, j), o in sorted(orbits.coupler_orbit.items())},
        "opposite_qubit": {str(o): opp for o, opp in sorted(orbits.opposite_qubit.items())},
        "opposite_coupler": {str(o): opp for o, opp in sorted(orbits.opposite_coupler.items())},
    }


def cmd_orbits(args) -> int:
    try:
        model = load_model(args.model)
    except ModelFormatError as err:
        print(f"error: {args.model}: {err}", file=sys.stderr)
        return EXIT_USAGE
    orbits = ising_orbits(model, node_budget=args.budget)
    print(f"qubit orbits: {orbits.num_qubit_orbits()}, coupler orbits: {orbits.num_coupler_orbits()}")
    out = Path(args.out) if args.out else Path(args.model).with_suffix(".orbits.json")
    out.write_text(json.dumps(orbits_to_json(orbits), indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_embed(args) -> int:
    pattern = parse_pattern(args.pattern)
    hardware = parse_hardware(args.hardware)
    try:
        rows, cols = (int(x) for x in args.block.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad block spec {args.block!r} (use RxC, e.g. 2x2)")
    es = raster_embed(pattern, hardware, block=(rows, cols), seed=args.seed,
                      node_budget=args.budget)
    print(f"found {len(es.maps)} disjoint embeddings of {pattern.num_spins} spins")
    if not es.maps:
        return EXIT_EMPTY
    out = Path(args.out) if args.out else Path("embeddings.json")
    out.write_text(json.dumps(es.maps) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_noise_gen(args) -> int:
    if args.model:
        model = load_model(args.model)
        qubits = range(model.num_spins)
        pairs = sorted(model.couplings)
    elif args.hardware:
        hw = parse_hardware(args.hardware)
        qubits = range(hw.num_qubits)
        pairs = sorted(hw.edges)
    else:
        raise UsageError("noise-gen needs --model or --hardware")
    noise = NoiseModel.generate(
        qubits, pairs, seed=args.seed,
        offset_sigma=args.offset_sigma, gain_sigma=args.gain_sigma,
        kappa=args.kappa, fbo_scale=args.fbo_scale, drift_sigma=args.drift_sigma,
    )
    Path(args.out).write_text(noise.to_json() + "\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def _build_model(spec: dict):
    kind = spec["type"]
    if kind == "fm_loop":
        return make_fm_loop(spec["length"], spec["J"]), None
    if kind == "frustrated_loop":
        return make_frustrated_loop(spec["length"], spec["J"]), None
    if kind == "buckyball":
        return make_buckyball(), None
    if kind == "square_cylinder":
        model, chains = make_square_cylinder(spec["rows"], spec["cols"], spec["J_AFM"])
        return model, chains
    if kind == "file":
        return load_model(spec["path"]), None
    raise UsageError(f"unknown model type {spec['type']!r}")


def _find_embeddings(model, chains, spec: dict, hardware, seed: int) -> EmbeddingSet:
    want = spec.get("max_embeddings")
    if spec["model"]["type"] == "square_cylinder":
        rows, cols = spec["model"]["rows"], spec["model"]["cols"]
        maps = cylinder_embeddings(hardware, rows, cols, count=want or 1, seed=seed)
        if len(maps) < (want or 1):
            raise SearchBudgetExceeded(
                f"placed only {len(maps)}/{want} cylinder embeddings; "
                "retry with a larger hardware graph or fewer copies"
            )
        return EmbeddingSet(model, maps)
    es = raster_embed(model, hardware, seed=seed)
    if not es.maps:
        raise EmptyResult("no embeddings found")
    if want is not None and len(es.maps) > want:
        es = EmbeddingSet(model, es.maps[:want])
    return es


def _coupler_classes_by_role(model: IsingModel):
    """Group couplers by sign and magnitude (AFM bulk / AFM halved / FM ...)."""
    groups: dict[tuple, list] = {}
    for e, J in model.couplings.items():
        groups.setdefault((J > 0, quantize(abs(J))), []).append(e)
    return [sorted(v) for _, v in sorted(groups.items())]


def _halve_boundary(model: IsingModel, rows: int, cols: int) -> IsingModel:
    couplings = dict(model.couplings)
    for e in boundary_afm_couplers(rows, cols):
        couplings[e] = couplings[e] / 2.0
    return IsingModel(model.num_spins, dict(model.fields), couplings)


def run_config(config: dict, out_dir: Path, iterations_override=None) -> int:
    if config.get("schema") != 1:
        raise UsageError("config schema must be 1")
    seed = config.get("seed", 0)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")

    model, chains = _build_model(config["model"])

    if config.get("orbits_only"):
        orbits = ising_orbits(model)
        (out_dir / "orbits.json").write_text(
            json.dumps(orbits_to_json(orbits), indent=2, sort_keys=True) + "\n"
        )
        print(f"qubit orbits: {orbits.num_qubit_orbits()}, coupler orbits: {orbits.num_coupler_orbits()}")
        return EXIT_OK

    sampler_cfg = config.get("sampler", {})
    params = SamplerParams(
        reads=sampler_cfg.get("reads", 100),
        sweeps=sampler_cfg.get("sweeps", 1000),
        beta_initial=sampler_cfg.get("beta", [0.1, 3.0])[0],
        beta_final=sampler_cfg.get("beta", [0.1, 3.0])[1],
    )
    noise_cfg = config.get("noise", {})

    if "ensemble" in config:
        ens = config["ensemble"]
        rng = np.random.default_rng(derive_seed(seed, "ensemble-signs"))
        realizations = []
        for _ in range(ens["realizations"]):
            couplings = {}
            for e in sorted(model.couplings):
                couplings[e] = float(ens["J"] * rng.choice([-1.0, 1.0]))
            realizations.append(IsingModel(model.num_spins, {}, couplings))
        noise = NoiseModel.generate(
            range(model.num_spins), model.couplings, seed=derive_seed(seed, "noise"),
            offset_sigma=noise_cfg.get("offset_sigma", 0.02),
            gain_sigma=noise_cfg.get("gain_sigma", 0.02),
            kappa=noise_cfg.get("kappa", 0.005),
            fbo_scale=noise_cfg.get("fbo_scale", 1.0),
            drift_sigma=noise_cfg.get("drift_sigma", 0.0),
        )
        shim_cfg = ShimConfig(alpha_phi=config.get("alpha", {}).get("phi", 0.05))
        fbo, history = ensemble_fbo_shim(
            realizations, noise, shim_cfg, cycles=ens["cycles"], params=params, seed=seed
        )
        with open(out_dir / "series.csv", "w", encoding="utf-8", newline="\n") as f:
            f.write("iter,kind,id,value\n")
            for t, m in enumerate(history):
                for q, v in enumerate(m):
                    f.write(f"{t},m,{q},{v!r}\n")
        (out_dir / "state.json").write_text(
            json.dumps({"fbo": {str(q): float(v) for q, v in enumerate(fbo)}}, indent=2) + "\n"
        )
        early = float(np.mean(np.abs(np.mean(history[: len(realizations)], axis=0))))
        late = float(np.mean(np.abs(np.mean(history[-len(realizations):], axis=0))))
        print(f"mean |time-averaged m|: first cycle {early:.4f}, last cycle {late:.4f}")
        return EXIT_OK

    flags = config.get("flags", {})
    model_spec = config["model"]
    if flags.get("halve_boundary_couplers"):
        if model_spec["type"] != "square_cylinder":
            raise UsageError("halve_boundary_couplers applies to square_cylinder models")
        model = _halve_boundary(model, model_spec["rows"], model_spec["cols"])

    hardware_spec = config.get("hardware")
    if hardware_spec:
        hardware = parse_hardware(hardware_spec)
        es = _find_embeddings(model, chains, config, hardware, derive_seed(seed, "embed"))
    else:
        es = EmbeddingSet(model, [list(range(model.num_spins))])

    shim_type = flags.get("shim_type", "embedded_finite")
    if shim_type == "triangular_infinite":
        source_orbits = override_orbits(model, _coupler_classes_by_role(model))
    elif shim_type == "embedded_finite":
        source_orbits = ising_orbits(model)
    else:
        raise UsageError(f"unknown shim_type {shim_type!r}")
    orbits = merge_embedding_orbits(source_orbits, es)

    phys_pairs = [
        (min(m[i], m[j]), max(m[i], m[j])) for m in es.maps for (i, j) in model.couplings
    ]
    if isinstance(config.get("noise"), str):
        noise = NoiseModel.from_json(Path(config["noise"]).read_text())
    else:
        noise = NoiseModel.generate(
            es.used_qubits(), phys_pairs, seed=derive_seed(seed, "noise"),
            offset_sigma=noise_cfg.get("offset_sigma", 0.02),
            gain_sigma=noise_cfg.get("gain_sigma", 0.02),
            kappa=noise_cfg.get("kappa", 0.005),
            fbo_scale=noise_cfg.get("fbo_scale", 1.0),
            drift_sigma=noise_cfg.get("drift_sigma", 0.0),
        )

    stages = config.get("stages", {})
    alpha = config.get("alpha", {})
    shim_cfg = ShimConfig(
        fbo_start=stages.get("fbo_start"),
        coupler_start=stages.get("coupler_start"),
        field_start=stages.get("field_start"),
        field_mean=stages.get("field_mean", 0.0),
        alpha_phi=alpha.get("phi", 0.05),
        alpha_j=alpha.get("j", 0.01),
        alpha_h=alpha.get("h", 0.01),
        adaptive=flags.get("adaptive_step_size", False),
        damping=config.get("damping", 0.0),
    )

    order_param = None
    if model_spec["type"] == "square_cylinder":
        logical, _ = contract_chains(model, chains)
        cols = model_spec["cols"]
        coords = {k: divmod(k, cols) for k in range(logical.num_spins)}
        coloring = three_coloring(logical, coords=coords)
        chains_per_copy = [
            [[mapping[p], mapping[q]] for (p, q) in chains] for mapping in es.maps
        ]
        order_param = OrderParamSpec(chains_per_copy, coloring)

    iterations = config.get("iterations", 0) if iterations_override is None else iterations_override
    warm = config.get("warm_start")
    initial_state = ShimState.from_json(Path(warm).read_text()) if warm else None
    series, state = run_loop(
        model, es, orbits, noise, shim_cfg, iterations,
        params=params, seed=seed, initial_state=initial_state, order_param=order_param,
    )
    series.write_csv(out_dir / "series.csv")
    if order_param is not None and series.psi:
        series.write_psi_csv(out_dir / "psi.csv")
    (out_dir / "state.json").write_text(state.to_json() + "\n")
    if len(series) == 0:
        print("0 iterations: wrote nominal state and empty series")
        return EXIT_OK
    window = min(10, len(series))
    sigma_m, sigma_f = dispersion(series, window=window)
    print(
        f"sigma_m first/last window: {sigma_m[window - 1]:.5f} / {sigma_m[-1]:.5f}; "
        f"sigma_f first/last window: {sigma_f[window - 1]:.5f} / {sigma_f[-1]:.5f}"
    )
    print(f"wrote {out_dir / 'series.csv'}")
    return EXIT_OK


def cmd_run(args) -> int:
    if bool(args.preset) == bool(args.config):
        raise UsageError("run needs exactly one of --preset or --config")
    if args.preset:
        config = preset_config(args.preset, seed=args.seed, paper_scale=args.paper_scale)
    else:
        config = json.loads(Path(args.config).read_text())
        if args.seed is not None:
            config["seed"] = args.seed
    if args.alpha_phi is not None:
        config.setdefault("alpha", {})["phi"] = args.alpha_phi
    if args.alpha_j is not None:
        config.setdefault("alpha", {})["j"] = args.alpha_j
    if args.shim_type:
        config.setdefault("flags", {})["shim_type"] = args.shim_type
    if args.halve_boundary_couplers:
        config.setdefault("flags", {})["halve_boundary_couplers"] = True
    if args.adaptive_step_size:
        config.setdefault("flags", {})["adaptive_step_size"] = True
    if args.noise:
        config["noise"] = args.noise
    if args.warm_start:
        config["warm_start"] = args.warm_start
    out_dir = Path(args.out_dir) if args.out_dir else Path(config.get("name", "run") + "_out")
    return run_config(config, out_dir, iterations_override=args.iterations)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isingshim",
        description="Calibration refinement for Ising machines: orbits, embeddings, shim loops.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_orbits = sub.add_parser("orbits", help="qubit/coupler orbits of a model text file")
    p_orbits.add_argument("model", help="Ising model text file (lines: 'i h' or 'i j J')")
    p_orbits.add_argument("--out", help="output JSON path")
    p_orbits.add_argument("--budget", type=int, default=10_000_000, help="search node budget")
    p_orbits.set_defaults(func=cmd_orbits)

    p_embed = sub.add_parser("embed", help="pack disjoint copies of a pattern into hardware")
    p_embed.add_argument("--pattern", required=True, help="loop:N, frustrated_loop:N, or model file")
    p_embed.add_argument("--hardware", required=True, help="pegasus:M or chimera:M,N,T")
    p_embed.add_argument("--block", default="2x2", help="raster window in cells (RxC)")
    p_embed.add_argument("--seed", type=int, default=0)
    p_embed.add_argument("--budget", type=int, default=30_000, help="per-attempt node budget")
    p_embed.add_argument("--out", help="output JSON path (maps[k][spin] = qubit)")
    p_embed.set_defaults(func=cmd_embed)

    p_run = sub.add_parser("run", help="run a shim experiment preset or config")
    p_run.add_argument("--preset", choices=PRESET_NAMES)
    p_run.add_argument("--config", help="experiment config JSON (schema 1)")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--iterations", type=int, help="override iteration count")
    p_run.add_argument("--paper-scale", action="store_true",
                       help="full-size protocols instead of desk-scale defaults")
    p_run.add_argument("--out-dir", help="output directory")
    p_run.add_argument("--alpha-phi", type=float, help="flux-offset step size")
    p_run.add_argument("--alpha-j", type=float, help="coupler step size")
    p_run.add_argument("--shim-type", choices=["embedded_finite", "triangular_infinite"])
    p_run.add_argument("--halve-boundary-couplers", action="store_true")
    p_run.add_argument("--adaptive-step-size", action="store_true")
    p_run.add_argument("--noise", help="noise model JSON file")
    p_run.add_argument("--warm-start", help="resume from a saved state JSON")
    p_run.add_argument("--threads", type=int, default=0, help="sampler threads (0 = default)")
    p_run.set_defaults(func=cmd_run)

    p_noise = sub.add_parser("noise-gen", help="generate a reproducible noise model JSON")
    p_noise.add_argument("--model", help="scope: model text file")
    p_noise.add_argument("--hardware", help="scope: hardware spec")
    p_noise.add_argument("--seed", type=int, default=0)
    p_noise.add_argument("--offset-sigma", type=float, default=0.02)
    p_noise.add_argument("--gain-sigma", type=float, default=0.02)
    p_noise.add_argument("--kappa", type=float, default=0.005)
    p_noise.add_argument("--fbo-scale", type=float, default=1.0)
    p_noise.add_argument("--drift-sigma", type=float, default=0.0)
    p_noise.add_argument("--out", default="noise.json")
    p_noise.set_defaults(func=cmd_noise_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 0):
        import numba

        numba.set_num_threads(args.threads)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ModelFormatError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyResult as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_EMPTY
    except SearchBudgetExceeded as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
