"""Ready-made experiment configurations mirroring the worked examples.

Every preset runs end to end with only a seed; desk-scale defaults keep
runtimes in minutes, and paper_scale restores the full-size protocols.
"""

from __future__ import annotations

PRESET_NAMES = (
    "fm_loop_balancing",
    "fm_loop_correlations",
    "frustrated_loop",
    "buckyball_orbits",
    "tafm_forward_anneal",
    "ensemble",
)


def preset_config(name: str, seed: int = 0, paper_scale: bool = False) -> dict:
    """Resolved config dict (schema 1) for a named preset."""
    if name == "fm_loop_balancing":
        return {
            "schema": 1,
            "name": name,
            "model": {"type": "fm_loop", "length": 64, "J": -0.2},
            "hardware": "pegasus:16" if paper_scale else "pegasus:6",
            "max_embeddings": None if paper_scale else 3,
            "iterations": 100,
            "stages": {"fbo_start": 10, "coupler_start": None},
            "alpha": {"phi": 0.05, "j": 0.01, "h": 0.01},
            "sampler": {"reads": 100, "sweeps": 1000, "beta": [0.1, 3.0]},
            "noise": {"offset_sigma": 0.02, "gain_sigma": 0.02, "kappa": 0.005,
                      "fbo_scale": 1.0, "drift_sigma": 0.0},
            "flags": {"shim_type": "embedded_finite", "adaptive_step_size": False,
                      "halve_boundary_couplers": False},
            "damping": 0.0,
            "seed": seed,
        }
    if name == "fm_loop_correlations":
        cfg = preset_config("fm_loop_balancing", seed, paper_scale)
        cfg["name"] = name
        cfg["iterations"] = 300
        cfg["stages"] = {"fbo_start": 100, "coupler_start": 200}
        return cfg
    if name == "frustrated_loop":
        return {
            "schema": 1,
            "name": name,
            "model": {"type": "frustrated_loop", "length": 16, "J": -0.9},
            "hardware": "pegasus:16" if paper_scale else "pegasus:6",
            "max_embeddings": None if paper_scale else 8,
            "iterations": 300,
            "stages": {"fbo_start": 100, "coupler_start": 200},
            "alpha": {"phi": 0.05, "j": 0.01, "h": 0.01},
            "sampler": {"reads": 100, "sweeps": 1000, "beta": [0.1, 3.0]},
            "noise": {"offset_sigma": 0.02, "gain_sigma": 0.02, "kappa": 0.005,
                      "fbo_scale": 1.0, "drift_sigma": 0.0},
            "flags": {"shim_type": "embedded_finite", "adaptive_step_size": False,
                      "halve_boundary_couplers": False},
            "damping": 0.0,
            "seed": seed,
        }
    if name == "buckyball_orbits":
        return {
            "schema": 1,
            "name": name,
            "model": {"type": "buckyball"},
            "hardware": None,
            "orbits_only": True,
            "seed": seed,
        }
    if name == "tafm_forward_anneal":
        return {
            "schema": 1,
            "name": name,
            "model": {
                "type": "square_cylinder",
                "rows": 12 if paper_scale else 6,
                "cols": 12 if paper_scale else 6,
                "J_AFM": 0.9,
            },
            "hardware": "pegasus:16" if paper_scale else "pegasus:6",
            "max_embeddings": 10 if paper_scale else 2,
            "iterations": 800 if paper_scale else 100,
            "stages": {
                "fbo_start": 100 if paper_scale else 20,
                "coupler_start": 300 if paper_scale else 50,
            },
            "alpha": {"phi": 0.05, "j": 0.01, "h": 0.01},
            "sampler": {"reads": 100, "sweeps": 1000, "beta": [0.1, 3.0]},
            "noise": {"offset_sigma": 0.02, "gain_sigma": 0.02, "kappa": 0.005,
                      "fbo_scale": 1.0, "drift_sigma": 0.0},
            "flags": {"shim_type": "embedded_finite", "adaptive_step_size": False,
                      "halve_boundary_couplers": False},
            "damping": 0.0,
            "seed": seed,
        }
    if name == "ensemble":
        return {
            "schema": 1,
            "name": name,
            "model": {"type": "fm_loop", "length": 16, "J": -0.9},
            "hardware": None,
            "ensemble": {"realizations": 300 if paper_scale else 30,
                         "cycles": 20, "J": 0.9},
            "alpha": {"phi": 0.05, "j": 0.01, "h": 0.01},
            "sampler": {"reads": 100, "sweeps": 1000, "beta": [0.1, 3.0]},
            "noise": {"offset_sigma": 0.02, "gain_sigma": 0.0, "kappa": 0.005,
                      "fbo_scale": 1.0, "drift_sigma": 0.0},
            "seed": seed,
        }
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
