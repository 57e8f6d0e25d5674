"""Per-collision thermodynamic accounting.

Sign conventions: heat and work are positive when absorbed by the
system.  The exact collision is the source of truth; the perturbative
trace formulas and the model-2 closed forms are O(dt^2) cross-checks.
Entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .qcore import DensityMatrix, relative_entropy, vn_entropy

if TYPE_CHECKING:  # pragma: no cover
    from .ancilla import CorrelationSet
    from .engine import CollisionModel, CollisionOutcome


@dataclass(frozen=True)
class ThermoRecord:
    """Energy and entropy bookkeeping for one collision.

    dW_drive is identically zero (the Hamiltonians are time-independent
    within a collision); it is kept so the first-law decomposition
    dU = dQ + w_sw + dW_drive is explicit.  The entropy fields are None
    for records produced by the perturbative formulas, which only yield
    the energy flows.
    """

    dU: float
    dQ: float
    w_sw: float
    dW_drive: float = 0.0
    dS_sys: float | None = None
    sigma: float | None = None
    sigma_alt: float | None = None

    @property
    def first_law_residual(self) -> float:
        return self.dU - self.dQ - self.w_sw - self.dW_drive


def internal_energy(h_sys: np.ndarray, rho: DensityMatrix) -> float:
    """U = Tr[H_S rho]."""
    return float(np.trace(np.asarray(h_sys) @ rho.matrix).real)


def collision_thermo(outcome: "CollisionOutcome", model: "CollisionModel") -> ThermoRecord:
    """Exact per-collision energy flows and entropy production.

    dU from the system Hamiltonian, dQ as minus the ancilla energy gain,
    w_sw as the interaction energy dropped when the coupling switches
    off.  sigma = dS_sys - beta*dQ; sigma_alt re-derives it as
    system-ancilla mutual information plus the relative-entropy
    displacement of the ancilla, an explicitly nonnegative form.
    """
    h_sys = model.h_sys
    h_env = model.ancilla.h_total.entries
    h_int = model.h_int_joint

    rho_in = outcome.joint_before  # rho (x) eta, so partial traces are cheap to infer
    d_s = model.system_dim
    d_e = model.ancilla.space.total_dim
    from .qcore import partial_trace_matrix

    rho_before = partial_trace_matrix(rho_in.matrix, (d_s, d_e), (0,))
    rho_sys_in = DensityMatrix.from_matrix(rho_before, (d_s,))

    dU = internal_energy(h_sys, outcome.rho_after) - internal_energy(h_sys, rho_sys_in)
    e_env_in = float(np.trace(h_env @ model.eta.matrix).real)
    e_env_out = float(np.trace(h_env @ outcome.eta_out.matrix).real)
    dQ = -(e_env_out - e_env_in)
    w_sw = float(
        np.trace(h_int @ (rho_in.matrix - outcome.joint_after.matrix)).real
    )

    dS_sys = vn_entropy(outcome.rho_after) - vn_entropy(rho_sys_in)
    sigma = dS_sys - model.beta * dQ

    mutual = (
        vn_entropy(outcome.rho_after)
        + vn_entropy(outcome.eta_out)
        - vn_entropy(outcome.joint_after)
    )
    sigma_alt = mutual + relative_entropy(outcome.eta_out, model.eta)

    return ThermoRecord(
        dU=dU, dQ=dQ, w_sw=w_sw, dS_sys=dS_sys, sigma=sigma, sigma_alt=sigma_alt
    )


def perturbative_thermo(rho: DensityMatrix, model: "CollisionModel",
                        corr: "CorrelationSet | None" = None) -> ThermoRecord:
    """Second-order (in dt) energy flows from joint-space trace formulas.

    Expanding Tr[X (U R U^dag - R)] to second order in dt gives, for any
    joint observable X,
        -i dt Tr[[X, H] R] - (dt^2/2) Tr[[H, [H, X]] R]
    with H the total Hamiltonian; applied here with X = H_S, H_E, H_SE.
    """
    d_e = model.ancilla.space.total_dim
    d_s = model.system_dim
    hs = np.kron(model.h_sys, np.eye(d_e))
    he = np.kron(np.eye(d_s), model.ancilla.h_total.entries)
    hi = model.h_int_joint
    h = hs + he + hi
    r = np.kron(rho.matrix, model.eta.matrix)
    dt = model.dt

    def comm(a, b):
        return a @ b - b @ a

    def flow(x):
        first = -1j * dt * np.trace(comm(x, h) @ r)
        second = -0.5 * dt * dt * np.trace(comm(h, comm(h, x)) @ r)
        return float((first + second).real)

    dU = flow(hs)
    dQ = -flow(he)
    w_sw = -flow(hi)
    return ThermoRecord(dU=dU, dQ=dQ, w_sw=w_sw)


def example2_thermo_closed(rho: DensityMatrix, c, spectrum,
                           eta: DensityMatrix) -> tuple[float, float, float]:
    """Model-2 closed-form (dU, dQ, w_sw) for one collision from state rho.

    The heat carries the bare transition energy E3 - E2 and a
    contribution from the bare-basis coherence of the thermal ancilla;
    the switching work is their first-law complement dU - dQ, whose
    leading term is proportional to the mismatch (E3 - E2 - omega_s).
    """
    from .models import E_INDEX

    dt, ws = c.dt, c.omega_s
    dt2 = dt * dt
    mat = rho.matrix
    sz = float((mat[0, 0] - mat[1, 1]).real)
    r12, r21 = mat[0, 1], mat[1, 0]
    # bare levels of the coupled ancilla transition
    p = spectrum.params
    e_gap = p.omega2 - p.omega1  # E3 - E2
    eta23 = eta.matrix[E_INDEX[2], E_INDEX[3]]
    eta32 = eta.matrix[E_INDEX[3], E_INDEX[2]]

    rate_bracket = sz * (c.gPM + c.gMP) + (c.gPM - c.gMP)
    drive = (
        0.5 * dt2 * ws * (c.gP * r12 + c.gM * r21)
        + 1j * dt * (c.gP * r12 - c.gM * r21)
    ).real

    dU = -0.5 * dt2 * ws * rate_bracket + ws * drive
    dQ = (
        -0.5 * dt2 * e_gap * rate_bracket
        + 0.5 * dt2 * p.kappa12 * abs(c.alpha) ** 2 * float((eta23 + eta32).real)
    )
    return (float(dU), float(dQ), float(dU - dQ))


def steady_state_balance(model: "CollisionModel") -> tuple[float, float]:
    """(w_sw, dQ) for one exact collision launched from the steady state.

    At the fixed point the internal energy is stationary, so the
    switching work exactly balances the dissipated heat.
    """
    from .engine import PropagatorKind, exact_collision, steady_state

    ss = steady_state(model, PropagatorKind.EXACT)
    record = collision_thermo(exact_collision(ss, model), model)
    return (record.w_sw, record.dQ)
