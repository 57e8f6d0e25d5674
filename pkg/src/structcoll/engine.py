"""Collision propagation and steady states.

Two interchangeable one-step maps are provided: the exact joint unitary
step (trace out the ancilla after evolving with the full Hamiltonian)
and its second-order expansion in dt, parameterized by the ancilla
correlation functions.  Models may additionally register a closed-form
per-element map.  Steady states are found by vectorizing the one-step
linear map and solving for its fixed point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .ancilla import CorrelationSet, StructuredAncilla, correlation_set
from .qcore import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    collision_unitary,
    partial_trace_matrix,
)

# eigenvalues below WARN are reported, below ABORT the propagation stops:
# the truncated map is not completely positive and may dip negative at
# order dt^3, which we monitor but never project away.
EIG_WARN = -1e-8
EIG_ABORT = -1e-6


class PropagationError(RuntimeError):
    """A propagator produced an invalid state."""


class SteadyStateError(RuntimeError):
    """No unique fixed point could be determined."""


class PropagatorKind(Enum):
    EXACT = "exact"
    SECOND_ORDER = "second-order"
    ANALYTIC = "analytic"


class CollisionModel:
    """System Hamiltonian + structured ancilla + interaction terms + dt.

    Immutable after assembly; derived quantities (thermal ancilla state,
    joint Hamiltonian, collision unitary, correlation set) are computed
    once and cached.
    """

    def __init__(self, h_sys, ancilla: StructuredAncilla, terms, beta: float, dt: float,
                 analytic_step=None):
        h_sys = np.asarray(h_sys, dtype=complex)
        if h_sys.ndim != 2 or h_sys.shape[0] != h_sys.shape[1]:
            raise ValueError("h_sys must be a square matrix")
        if np.abs(h_sys - h_sys.conj().T).max() > 1e-12 * max(1.0, np.abs(h_sys).max()):
            raise ValueError("h_sys must be Hermitian")
        if dt <= 0:
            raise ValueError("dt must be > 0")
        if beta < 0:
            raise ValueError("beta must be >= 0")
        self.h_sys = h_sys
        self.ancilla = ancilla
        self.terms = tuple(terms)
        self.beta = float(beta)
        self.dt = float(dt)
        self.analytic_step = analytic_step
        d_env = ancilla.space.total_dim
        for t in self.terms:
            if t.a_sys.shape != h_sys.shape:
                raise ValueError(f"term {t.label}: system operator shape mismatch")
            if t.b_env.shape != (d_env, d_env):
                raise ValueError(f"term {t.label}: ancilla operator shape mismatch")
        h_int = self.h_int_joint
        if np.abs(h_int - h_int.conj().T).max() > 1e-12 * max(1.0, np.abs(h_int).max()):
            raise ValueError("sum of interaction terms is not Hermitian")

    @property
    def system_dim(self) -> int:
        return self.h_sys.shape[0]

    @cached_property
    def joint_space(self) -> HilbertSpace:
        return HilbertSpace((self.system_dim,) + self.ancilla.space.dims)

    @cached_property
    def h_int_joint(self) -> np.ndarray:
        d_s, d_e = self.system_dim, self.ancilla.space.total_dim
        h = np.zeros((d_s * d_e, d_s * d_e), dtype=complex)
        for t in self.terms:
            h += np.kron(t.a_sys, t.b_env)
        return h

    @cached_property
    def h_total_joint(self) -> np.ndarray:
        d_s, d_e = self.system_dim, self.ancilla.space.total_dim
        return (
            np.kron(self.h_sys, np.eye(d_e))
            + np.kron(np.eye(d_s), self.ancilla.h_total.entries)
            + self.h_int_joint
        )

    @cached_property
    def eta(self) -> DensityMatrix:
        from .ancilla import thermal_state

        return thermal_state(self.ancilla, self.beta)

    @cached_property
    def unitary(self) -> np.ndarray:
        op = Operator(self.joint_space, self.h_total_joint)
        return collision_unitary(op, self.dt).entries

    @cached_property
    def correlations(self) -> CorrelationSet:
        return correlation_set(self.ancilla, self.terms, self.beta)


@dataclass(frozen=True)
class CollisionOutcome:
    rho_after: DensityMatrix
    eta_out: DensityMatrix
    joint_before: DensityMatrix
    joint_after: DensityMatrix


def _exact_apply(mat: np.ndarray, model: CollisionModel) -> np.ndarray:
    """One exact collision applied to an arbitrary system matrix (linear map)."""
    joint = np.kron(mat, model.eta.matrix)
    u = model.unitary
    after = u @ joint @ u.conj().T
    dims = (model.system_dim, model.ancilla.space.total_dim)
    return partial_trace_matrix(after, dims, (0,))


def exact_collision(rho: DensityMatrix, model: CollisionModel) -> CollisionOutcome:
    if rho.space.total_dim != model.system_dim:
        raise ValueError("state dimension does not match the model's system")
    joint_before = np.kron(rho.matrix, model.eta.matrix)
    u = model.unitary
    joint_after = u @ joint_before @ u.conj().T
    dims = (model.system_dim, model.ancilla.space.total_dim)
    rho_after = partial_trace_matrix(joint_after, dims, (0,))
    eta_out = partial_trace_matrix(joint_after, dims, (1,))
    joint_dims = model.joint_space.dims
    return CollisionOutcome(
        rho_after=DensityMatrix.from_matrix(rho_after, (model.system_dim,)),
        eta_out=DensityMatrix.from_matrix(eta_out, model.ancilla.space.dims),
        joint_before=DensityMatrix.from_matrix(joint_before, joint_dims),
        joint_after=DensityMatrix.from_matrix(joint_after, joint_dims),
    )


def _truncated_apply(mat: np.ndarray, model: CollisionModel, corr: CorrelationSet) -> np.ndarray:
    """Second-order one-step map: rho + dt*L1(rho) + dt^2*L2(rho)."""
    dt = model.dt
    hs = model.h_sys
    terms = model.terms
    g1 = corr.g1
    g2 = corr.g2
    g_he = corr.g_he

    drive = hs + sum(g1[t.label] * t.a_sys for t in terms)
    l1 = -1j * (drive @ mat - mat @ drive)

    l2 = np.zeros_like(mat)
    # dissipator block over all ordered term pairs
    for t in terms:
        a = t.a_sys
        for tp in terms:
            ap_dag = tp.a_sys.conj().T
            g = g2[(t.label, tp.label)]
            ada = ap_dag @ a
            l2 += g * (2.0 * a @ mat @ ap_dag - ada @ mat - mat @ ada)
    # cross terms between H_S and the first-order drive
    for t in terms:
        g = g1[t.label]
        if g == 0:
            continue
        a = t.a_sys
        cross = hs @ a + a @ hs
        l2 += g * (2.0 * hs @ mat @ a + 2.0 * a @ mat @ hs - cross @ mat - mat @ cross)
    # commutator block fed by Tr[H_E B eta]; vanishes for thermal eta but
    # kept so the map is complete for any stationary-state substitute
    comm_op = sum(
        (g_he[t.label] * t.a_sys - np.conj(g_he[t.label]) * t.a_sys.conj().T for t in terms),
        start=np.zeros_like(hs),
    )
    l2 += comm_op @ mat - mat @ comm_op
    # pure system double commutator
    hs2 = hs @ hs
    l2 += 2.0 * hs @ mat @ hs - hs2 @ mat - mat @ hs2

    return mat + dt * l1 + 0.5 * dt * dt * l2


def truncated_step(rho: DensityMatrix, model: CollisionModel,
                   corr: CorrelationSet | None = None) -> DensityMatrix:
    if corr is None:
        corr = model.correlations
    out = _truncated_apply(rho.matrix, model, corr)
    # Hermiticity and trace are exact algebraic properties of the map;
    # positivity is not, so validation is relaxed to the abort threshold.
    return DensityMatrix.from_matrix(out, (model.system_dim,), positivity_tol=-EIG_ABORT)


@dataclass
class Trajectory:
    states: list
    thermo: list
    bloch: np.ndarray | None
    c_l1: np.ndarray


# Pauli matrices in the (excited, ground) basis
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def l1_coherence(rho: DensityMatrix, h_sys: np.ndarray | None = None) -> float:
    """Sum of |rho_ij|, i != j, in the energy eigenbasis of h_sys.

    With no Hamiltonian given the computational basis is taken to be the
    energy basis (true for every model in this package).
    """
    mat = rho.matrix
    if h_sys is not None and np.abs(h_sys - np.diag(np.diag(h_sys))).max() > 1e-12:
        _, vecs = np.linalg.eigh(h_sys)
        mat = vecs.conj().T @ mat @ vecs
    return float(np.sum(np.abs(mat)) - np.sum(np.abs(np.diag(mat))))


def _step_state(model: CollisionModel, state: DensityMatrix, kind: PropagatorKind):
    """Returns (next_state, outcome or None)."""
    if kind is PropagatorKind.EXACT:
        outcome = exact_collision(state, model)
        return outcome.rho_after, outcome
    if kind is PropagatorKind.SECOND_ORDER:
        return truncated_step(state, model), None
    if kind is PropagatorKind.ANALYTIC:
        if model.analytic_step is None:
            raise ValueError("model does not register an analytic map")
        out = model.analytic_step(state.matrix)
        next_state = DensityMatrix.from_matrix(
            out, (model.system_dim,), positivity_tol=-EIG_ABORT
        )
        return next_state, None
    raise ValueError(f"unknown propagator kind {kind}")


def run_trajectory(model: CollisionModel, rho0: DensityMatrix, n: int,
                   kind: PropagatorKind, record_thermo: bool = True) -> Trajectory:
    """Apply the chosen one-step map n times, recording observables.

    Thermodynamic records are produced for the exact propagator only
    (they require the joint post-collision state).
    """
    if n < 1:
        raise ValueError("need at least one collision")
    from . import thermo as thermo_mod

    d = model.system_dim
    states = [rho0]
    thermo = []
    state = rho0
    for i in range(1, n + 1):
        state, outcome = _step_state(model, state, kind)
        min_eig = np.linalg.eigvalsh(state.matrix)[0]
        if min_eig < EIG_ABORT:
            raise PropagationError(
                f"state invalid at step {i}: min eigenvalue {min_eig:.3e}"
            )
        if min_eig < EIG_WARN:
            warnings.warn(f"step {i}: eigenvalue {min_eig:.3e} slightly negative")
        states.append(state)
        if record_thermo and outcome is not None:
            thermo.append(thermo_mod.collision_thermo(outcome, model))

    c_l1 = np.array([l1_coherence(s) for s in states])
    bloch = None
    if d == 2:
        bloch = np.array(
            [
                [
                    np.trace(p @ s.matrix).real
                    for p in (SX, SY, SZ)
                ]
                for s in states
            ]
        )
    return Trajectory(states=states, thermo=thermo, bloch=bloch, c_l1=c_l1)


def _one_step_map_matrix(model: CollisionModel, kind: PropagatorKind) -> np.ndarray:
    """The one-step map as a d^2 x d^2 matrix acting on vectorized states."""
    d = model.system_dim
    if kind is PropagatorKind.EXACT:
        apply = lambda m: _exact_apply(m, model)
    elif kind is PropagatorKind.SECOND_ORDER:
        corr = model.correlations
        apply = lambda m: _truncated_apply(m, model, corr)
    elif kind is PropagatorKind.ANALYTIC:
        if model.analytic_step is None:
            raise ValueError("model does not register an analytic map")
        apply = model.analytic_step
    else:
        raise ValueError(f"unknown propagator kind {kind}")
    cols = []
    for i in range(d):
        for j in range(d):
            basis = np.zeros((d, d), dtype=complex)
            basis[i, j] = 1.0
            cols.append(apply(basis).reshape(-1))
    return np.array(cols).T


def steady_state(model: CollisionModel, kind: PropagatorKind) -> DensityMatrix:
    """Fixed point of the one-step map via a vectorized linear solve."""
    d = model.system_dim
    phi = _one_step_map_matrix(model, kind)
    a = phi - np.eye(d * d)

    # uniqueness: (phi - 1) may lose exactly one rank direction
    svals = np.linalg.svd(a, compute_uv=False)
    null_dims = int(np.sum(svals < 1e-10 * max(1.0, svals[0])))
    if null_dims > 1:
        raise SteadyStateError(f"steady state not unique ({null_dims} null directions)")

    trace_row = np.eye(d, dtype=complex).reshape(1, -1)
    lhs = np.vstack([a, trace_row])
    rhs = np.zeros(d * d + 1, dtype=complex)
    rhs[-1] = 1.0
    vec, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    mat = vec.reshape(d, d)
    mat = 0.5 * (mat + mat.conj().T)
    mat /= np.trace(mat).real

    residual = np.abs(
        (phi @ mat.reshape(-1)).reshape(d, d) - mat
    ).max()
    if residual > 1e-10:
        # fall back to fixed-point iteration from the maximally mixed state
        mat = np.eye(d, dtype=complex) / d
        for _ in range(200_000):
            nxt = (phi @ mat.reshape(-1)).reshape(d, d)
            if np.abs(nxt - mat).max() <= 1e-13:
                mat = nxt
                break
            mat = nxt
        else:
            raise SteadyStateError("fixed-point iteration did not converge")
        mat = 0.5 * (mat + mat.conj().T)
        mat /= np.trace(mat).real
        residual = np.abs((phi @ mat.reshape(-1)).reshape(d, d) - mat).max()
        if residual > 1e-10:
            raise SteadyStateError(f"steady-state residual {residual:.3e} too large")

    return DensityMatrix.from_matrix(mat, (d,), positivity_tol=-EIG_ABORT)
