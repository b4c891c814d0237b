"""walklab: simulate random walks on truncated infinite graphs, extract the
PATH subgraph, compute harmonic voltages and effective resistances, and
statistically verify the quantitative bounds behind PATH recurrence."""

from .graphs import (
    LineSpec,
    MultiGraph,
    build_lattice,
    build_line_graph,
    build_regular_tree,
    contract_vertex_set,
    degree_bound,
    random_connected_multigraph,
    read_graph,
    write_graph,
)
from .walks import (
    PathSubgraph,
    StopRule,
    WalkTrace,
    crossing_stats_line,
    extract_path,
    simulate,
    union_paths,
    write_trace,
)
from .harmonic import (
    VoltageField,
    check_martingale,
    edge_ratio_excess,
    harmonic_residual,
    line_voltage_profile,
    probe_truncation,
    solve_voltage,
    voltage_line_exact,
    write_field,
)
from .electrical import (
    ResistanceReport,
    effective_resistance,
    max_pair_resistance,
    nash_williams_bound,
    path_resistance_line,
    path_to_network,
    resistance_to_infinity,
    thomson_energy,
    write_resistance_csv,
)
from .prooflab import (
    CampaignConfig,
    CampaignResult,
    EnergyTrial,
    LayerSchedule,
    LemmaStats,
    build_cutsets,
    cut_edge_frequency,
    energy_statistics,
    general_tail_trial,
    layer_schedule_line,
    lemma_frequencies,
    union_resistance_frequencies,
    wilson_interval,
    write_lemma_jsonl,
)
from .experiments import (
    ExperimentManifest,
    GrowthResult,
    ManifestError,
    growth_experiment,
    load_manifest,
    run_experiment,
    save_manifest,
)

__version__ = "0.1.0"
