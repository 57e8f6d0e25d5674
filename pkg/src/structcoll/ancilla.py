"""Structured ancillae and their correlation functions.

An ancilla is a composite system whose subsystems carry free
Hamiltonians omega * C^dag C (plus an optional constant shift) and pair
exchange couplings kappa * D_j D_k^dag + h.c.  The thermal state of the
*full* Hamiltonian generically carries coherence in the bare product
basis; the correlation functions evaluated here are what that coherence
feeds into the reduced system dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .qcore import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    SpectralDecomposition,
    gibbs_state,
    hermitian_eig,
)


@dataclass(frozen=True)
class FreeTerm:
    """omega * C^dag C + energy_shift * I on one subsystem.

    The shift only moves the zero of energy (Gibbs states and heat are
    unaffected); qubit models use -omega/2 so the two levels sit at
    -omega/2 and +omega/2.
    """

    subsystem: int
    omega: float
    lowering: np.ndarray
    energy_shift: float = 0.0


@dataclass(frozen=True)
class ExchangeTerm:
    """kappa * D_a D_b^dag + h.c. between two distinct subsystems."""

    sub_a: int
    sub_b: int
    kappa: complex
    op_a: np.ndarray
    op_b: np.ndarray


@dataclass(frozen=True)
class AncillaSpec:
    subsystem_dims: tuple[int, ...]
    free_terms: tuple[FreeTerm, ...] = ()
    exchange_terms: tuple[ExchangeTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "subsystem_dims", tuple(int(d) for d in self.subsystem_dims))
        object.__setattr__(self, "free_terms", tuple(self.free_terms))
        object.__setattr__(self, "exchange_terms", tuple(self.exchange_terms))
        dims = self.subsystem_dims
        for term in self.free_terms:
            if not 0 <= term.subsystem < len(dims):
                raise ValueError(f"free term on unknown subsystem {term.subsystem}")
            d = dims[term.subsystem]
            if np.shape(term.lowering) != (d, d):
                raise ValueError(f"lowering operator shape {np.shape(term.lowering)} != ({d},{d})")
            if term.omega < 0:
                raise ValueError("frequencies must be >= 0")
        for term in self.exchange_terms:
            if term.sub_a == term.sub_b:
                raise ValueError("exchange terms must couple distinct subsystems")
            for sub, op in ((term.sub_a, term.op_a), (term.sub_b, term.op_b)):
                if not 0 <= sub < len(dims):
                    raise ValueError(f"exchange term on unknown subsystem {sub}")
                d = dims[sub]
                if np.shape(op) != (d, d):
                    raise ValueError(f"exchange operator shape {np.shape(op)} != ({d},{d})")


def embed(local_ops: Mapping[int, np.ndarray], dims) -> np.ndarray:
    """Kronecker product placing each operator on its subsystem, identity elsewhere."""
    out = np.array([[1.0 + 0j]])
    for i, d in enumerate(dims):
        factor = np.asarray(local_ops[i], dtype=complex) if i in local_ops else np.eye(d)
        out = np.kron(out, factor)
    return out


@dataclass(frozen=True)
class StructuredAncilla:
    spec: AncillaSpec
    space: HilbertSpace
    h_free: Operator
    h_int: Operator
    h_total: Operator
    eig: SpectralDecomposition


def build_ancilla(spec: AncillaSpec) -> StructuredAncilla:
    dims = spec.subsystem_dims
    space = HilbertSpace(dims)
    n = space.total_dim
    h_free = np.zeros((n, n), dtype=complex)
    for term in spec.free_terms:
        c = np.asarray(term.lowering, dtype=complex)
        local = term.omega * (c.conj().T @ c) + term.energy_shift * np.eye(dims[term.subsystem])
        h_free += embed({term.subsystem: local}, dims)
    h_int = np.zeros((n, n), dtype=complex)
    for term in spec.exchange_terms:
        cross = term.kappa * embed(
            {term.sub_a: term.op_a, term.sub_b: np.asarray(term.op_b).conj().T}, dims
        )
        h_int += cross + cross.conj().T
    h_total = h_free + h_int
    total_op = Operator(space, h_total)
    return StructuredAncilla(
        spec=spec,
        space=space,
        h_free=Operator(space, h_free),
        h_int=Operator(space, h_int),
        h_total=total_op,
        eig=hermitian_eig(total_op),
    )


def thermal_state(anc: StructuredAncilla, beta: float) -> DensityMatrix:
    return gibbs_state(anc.h_total, beta)


def corr_first(b: np.ndarray, eta: DensityMatrix) -> complex:
    """Tr[B eta]."""
    return complex(np.trace(np.asarray(b) @ eta.matrix))


def corr_second(b1: np.ndarray, b2: np.ndarray, eta: DensityMatrix) -> complex:
    """Tr[B2^dag B1 eta]."""
    return complex(np.trace(np.asarray(b2).conj().T @ np.asarray(b1) @ eta.matrix))


def corr_he(anc: StructuredAncilla, b: np.ndarray, eta: DensityMatrix) -> complex:
    """Tr[H_E B eta]."""
    return complex(np.trace(anc.h_total.entries @ np.asarray(b) @ eta.matrix))


@dataclass(frozen=True)
class InteractionTerm:
    """One A_sys (x) B_env product in the system-ancilla coupling."""

    a_sys: np.ndarray
    b_env: np.ndarray
    label: str

    def __post_init__(self):
        object.__setattr__(self, "a_sys", np.asarray(self.a_sys, dtype=complex))
        object.__setattr__(self, "b_env", np.asarray(self.b_env, dtype=complex))


@dataclass(frozen=True)
class CorrelationSet:
    """First/second order ancilla expectations keyed by interaction-term label.

    g2[(l, lp)] = Tr[B_lp^dag B_l eta]; g_he[l] = Tr[H_E B_l eta].
    """

    g1: dict[str, complex] = field(default_factory=dict)
    g2: dict[tuple[str, str], complex] = field(default_factory=dict)
    g_he: dict[str, complex] = field(default_factory=dict)


def correlation_set(anc: StructuredAncilla, terms, beta: float) -> CorrelationSet:
    """Evaluate all correlation functions against the thermal state at beta.

    Every collision sees the same fresh thermal ancilla, so callers
    (e.g. CollisionModel) evaluate this once per (ancilla, beta) pair and
    hold onto the result.
    """
    eta = thermal_state(anc, beta)
    g1 = {t.label: corr_first(t.b_env, eta) for t in terms}
    g2 = {
        (t.label, tp.label): corr_second(t.b_env, tp.b_env, eta)
        for t in terms
        for tp in terms
    }
    g_he = {t.label: corr_he(anc, t.b_env, eta) for t in terms}
    return CorrelationSet(g1=g1, g2=g2, g_he=g_he)
