"""Shaken dynamics: parallel heat-bath MCMC for Ising-type systems on arbitrary graphs."""

from shaken.graph import (
    DoublingGraph,
    GraphError,
    InteractionGraph,
    Orientation,
    build_doubling,
    orient,
    parse_graph,
    validate_doubling,
)
from shaken.hamiltonian import (
    energy,
    local_field_12,
    local_field_21,
    log_stationary_weight,
    pair_energy,
)
from shaken.dynamics import (
    alternate_step,
    half_step_12,
    half_step_21,
    heat_bath_step,
    reversed_shaken_step,
    run,
    shaken_step,
)
from shaken.rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "DoublingGraph",
    "GraphError",
    "InteractionGraph",
    "Orientation",
    "RngStream",
    "alternate_step",
    "build_doubling",
    "energy",
    "half_step_12",
    "half_step_21",
    "heat_bath_step",
    "local_field_12",
    "local_field_21",
    "log_stationary_weight",
    "orient",
    "pair_energy",
    "parse_graph",
    "reversed_shaken_step",
    "run",
    "shaken_step",
    "validate_doubling",
]
