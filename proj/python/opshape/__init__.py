"""Budgeted opinion shaping on gossip networks."""

from ._opshape import (
    AgentPartition,
    ConfigError,
    DanglingNode,
    Error,
    GeneralModel,
    Infeasible,
    InteractionGraph,
    NonAbsorbing,
    OpinionModel,
    ParseError,
    load_edge_list,
    phi_oracle,
    project_budget_simplex,
    random_partition,
    reference_optimum,
    run_experiment,
    run_general,
    run_partial,
    run_sas,
    run_sgd,
)

__all__ = [name for name in dir() if not name.startswith("_")]
