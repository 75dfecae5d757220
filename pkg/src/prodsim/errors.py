"""Exception types. The CLI maps each family onto an exit code."""


class ValidationError(ValueError):
    """Input failed a structural check (shape, hermiticity, normalization, file schema)."""


class DomainError(ValueError):
    """Input is well formed but outside the domain of the requested operation."""


class LocalHamiltonianError(DomainError):
    """A nonlocal Hamiltonian was required but the input has no nonlocal content."""


class NotLocalError(DomainError):
    """A local Hamiltonian was required but the input has a nonlocal part."""


class IneligibleError(DomainError):
    """The catalytic conditions do not hold for the given terms."""


class AncillaContaminationError(RuntimeError):
    """An ancilla was not returned to its initial state before being discarded."""

    def __init__(self, leakage: float, tol: float):
        super().__init__(f"ancilla contamination: leakage {leakage:.3e} exceeds {tol:.1e}")
        self.leakage = leakage
        self.tol = tol
