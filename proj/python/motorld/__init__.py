"""Switching-diffusion homogenisation toolkit: effective Hamiltonians,
Lagrangians, stationary cell measures and Monte Carlo paths."""

from ._motorld import (
    IoError,
    Model,
    ModelError,
    NumericalError,
    builtin_model,
    check_containment,
    hamiltonian,
    hamiltonian_grad_p,
    legendre,
    lln_velocity,
    load_model,
    path_action,
    run_check_suite,
    simulate_ensemble,
    stationary_measure,
    zero_cost_path,
)

__all__ = [
    "IoError",
    "Model",
    "ModelError",
    "NumericalError",
    "builtin_model",
    "check_containment",
    "hamiltonian",
    "hamiltonian_grad_p",
    "legendre",
    "lln_velocity",
    "load_model",
    "path_action",
    "run_check_suite",
    "simulate_ensemble",
    "stationary_measure",
    "zero_cost_path",
]
