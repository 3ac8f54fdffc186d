from .base import ALL_VARIANTS, DEConfig, Individual, RunTrace, VariantId, read_trace_csv, write_trace_csv
from .dcmaea import DcmaeaState, dcmaea_init, dcmaea_step
from .operators import (
    ShadeMemory,
    crossover_binomial,
    degl_mutation,
    init_population,
    jade_mutation,
    mutate_best1,
    mutate_rand1,
    opposition_point,
    rank_selection_probabilities,
    select_greedy,
    shade_sample_params,
    shade_update_memory,
    similarity_mutation,
    speciation_partition,
)
from .runner import run

__all__ = [
    "ALL_VARIANTS",
    "DEConfig",
    "DcmaeaState",
    "Individual",
    "RunTrace",
    "ShadeMemory",
    "VariantId",
    "crossover_binomial",
    "dcmaea_init",
    "dcmaea_step",
    "degl_mutation",
    "init_population",
    "jade_mutation",
    "mutate_best1",
    "mutate_rand1",
    "opposition_point",
    "rank_selection_probabilities",
    "read_trace_csv",
    "run",
    "select_greedy",
    "shade_sample_params",
    "shade_update_memory",
    "similarity_mutation",
    "speciation_partition",
    "write_trace_csv",
]
