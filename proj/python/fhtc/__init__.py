"""Functional hierarchical tensor solver for stochastic optimal control."""

from fhtc._core import (  # noqa: F401
    BasisSet,
    DyadicTree,
    Fht,
    GLModel,
    SolvedStack,
    add,
    apply_markov,
    drift,
    estimate_operator,
    grid_to_leaf,
    interpolate,
    legendre_basis,
    load_fht,
    load_stack,
    marginal_mass,
    potential,
    preset_json,
    round_fht,
    simulate,
    solve,
)

__all__ = [
    "BasisSet",
    "DyadicTree",
    "Fht",
    "GLModel",
    "SolvedStack",
    "add",
    "apply_markov",
    "drift",
    "estimate_operator",
    "grid_to_leaf",
    "interpolate",
    "legendre_basis",
    "load_fht",
    "load_stack",
    "marginal_mass",
    "potential",
    "preset_json",
    "round_fht",
    "simulate",
    "solve",
]
