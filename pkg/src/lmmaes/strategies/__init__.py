"""Optimizer kernels: LM-MA-ES, fast MA-ES, sigma-only ES and the storage variant."""

from .driver import EvolutionStrategy, NonFiniteObjectiveError, StoppingCriteria, run
from .kernels import (
    rank_one_chain,
    storage_rates,
    EsState,
    EvaluatedSample,
    LmMaEsState,
    MaEsState,
    StorageVariantState,
    csa,
    init_state,
    lmma_sample,
    lmma_sample_population,
    lmma_transform,
    lmma_update,
    maes_sample,
    maes_sample_population,
    maes_update_fast,
    rank_order,
    select_slot,
    sigma_only_update,
    sigma_sample_population,
    storage_sample_population,
    storage_transform,
    storage_update,
    storage_variant_step,
)
from .params import VARIANTS, HyperParameters, default_hyperparameters, default_population_size, recombination_weights
