"""Simulation of bipartite product Hamiltonians: rates, protocols, capacities, strength measures."""

__version__ = "0.1.0"

from .capacity import (
    capacity_boxplus,
    capacity_catalytic,
    compute_alpha,
    entanglement_capacity,
    entanglement_rate,
    optimal_state,
)
from .errors import (
    AncillaContaminationError,
    DomainError,
    IneligibleError,
    LocalHamiltonianError,
    NotLocalError,
    ValidationError,
)
from .hamiltonians import (
    BipartiteHamiltonian,
    ProductHamiltonian,
    StandardForm,
    boxplus,
    delta,
    gamma_product,
    is_local,
    ising,
    k_otimes,
    standardize,
)
from .product_sim import (
    boxplus_to_product,
    catalytic_normal_form,
    check_catalytic,
    gamma_boxplus,
    ising_to_product,
    product_to_boxplus,
    product_to_ising,
    product_to_product,
)
from .protocol import Protocol, compose, realize, verify
from .strength import gamma_two_qubit, k123, pauli_normal_form, strength_property_suite
