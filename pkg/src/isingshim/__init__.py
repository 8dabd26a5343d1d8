"""Calibration refinement toolkit for Ising machines.

Find statistical symmetries (qubit and coupler orbits) of an Ising model,
embed many copies into an annealer-style hardware graph, and run iterative
shim loops against a simulated noisy sampler to homogenize magnetizations
and frustration probabilities.
"""

from .model import (
    GaugeTransform,
    IsingModel,
    ModelFormatError,
    apply_gauge,
    dump_model,
    energy,
    frustration_indicators,
    load_model,
    loads_model,
)
from .signed import LabeledGraph, SignedIsingModel, build_signed, signed_to_labeled_graph
from .generators import (
    make_buckyball,
    make_fm_loop,
    make_frustrated_loop,
    make_square_cylinder,
    contract_chains,
    boundary_afm_couplers,
)
from .orbits import (
    Orbits,
    Permutation,
    SearchBudgetExceeded,
    automorphism_generators,
    ising_orbits,
    merge_embedding_orbits,
    override_orbits,
    vertex_and_edge_orbits,
)
from .hardware import HardwareGraph, make_chimera, make_pegasus, mask_qubits
from .embedding import (
    EmbeddingSet,
    cylinder_embeddings,
    find_subgraph,
    program_embeddings,
    raster_embed,
    verify_embedding,
)
from .sampler import NoiseModel, SamplerParams, SampleSet, derive_seed, effective_model, exact_stats, sample
from .stats import (
    ObservableSeries,
    SublatticeColoring,
    decode_chains,
    dispersion,
    fit_walk_exponent,
    frustrations,
    magnetizations,
    orbit_means,
    order_parameter,
    three_coloring,
)
from .shim import (
    OrderParamSpec,
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

__version__ = "0.1.0"
