"""Exactly solvable system-environment models.

Every parameter class exposes ``model_id`` and
``transition_kernel(tau, bath) -> TransitionKernel``, which is all the sweep
engine needs.
"""
from .large_spin import (
    RHO0,
    RHO1,
    RHO2,
    LargeSpinParams,
    dephase,
    dephased_matrix_element,
    generic_transition,
    large_spin_decay_rate,
    large_spin_transitions,
)
from .single_spin import SingleSpinParams, single_spin_decay_rate, single_spin_transition
from .spin_bath import (
    MAX_ENUMERATION_N,
    SpinBathParams,
    SpinBathTerm,
    bloch_coefficients,
    collapse_uniform_bath,
    enumerate_bath_exact,
    free_rotation_coefficients,
    log_partition_function,
    spin_bath_decay_rate,
    spin_bath_transition,
)

MODELS = {
    "single_spin": SingleSpinParams,
    "spin_bath": SpinBathParams,
    "large_spin": LargeSpinParams,
}
