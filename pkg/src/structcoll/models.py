"""The two preassembled qubit-plus-two-qubit-ancilla models.

Both models share the same structured ancilla: two exchange-coupled
qubits (frequencies omega1, omega2, coupling kappa12).  Model 1 couples
the system qubit to each ancilla qubit individually through flip-flop
terms; model 2 couples it to a single transition |E2> <-> |E3| between
the two singly-excited bare levels.

Basis conventions (frozen, everything below depends on them):
  * every qubit uses the (excited, ground) basis, sigma_z = diag(1, -1),
    free Hamiltonian (omega/2) sigma_z;
  * the ancilla product basis orders qubit 1 as the slow Kronecker
    factor, so the four bare levels are indexed
        0: both excited   (E4,  energy +(omega1+omega2)/2)
        1: q1 excited     (E2,  energy +(omega1-omega2)/2)
        2: q2 excited     (E3,  energy -(omega1-omega2)/2)
        3: both ground    (E1,  energy -(omega1+omega2)/2)
    The E-labels match the closed-form expressions implemented here.

All closed forms in this module are independent cross-checks of the
generic ancilla/engine machinery and are tested against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .ancilla import AncillaSpec, ExchangeTerm, FreeTerm, InteractionTerm, build_ancilla
from .engine import SX, SY, SZ, CollisionModel
from .qcore import DensityMatrix

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

# bare-level index of E1..E4 in the 4-dimensional ancilla space
E_INDEX = {1: 3, 2: 1, 3: 2, 4: 0}


def env_sigma_plus() -> np.ndarray:
    """|E3><E2| on the ancilla (transition between the singly-excited levels)."""
    op = np.zeros((4, 4), dtype=complex)
    op[E_INDEX[3], E_INDEX[2]] = 1.0
    return op


def env_sigma_minus() -> np.ndarray:
    """|E2><E3| on the ancilla."""
    return env_sigma_plus().conj().T


@dataclass(frozen=True)
class TwoQubitAncillaParams:
    omega1: float
    omega2: float
    kappa12: float

    def __post_init__(self):
        if self.omega1 < 0 or self.omega2 < 0:
            raise ValueError("qubit frequencies must be >= 0")


@dataclass(frozen=True)
class TwoQubitSpectrum:
    """Closed-form eigensystem of the two-qubit ancilla.

    ``energies`` holds (E'1, E'2, E'3, E'4) in label order; note E'2 can
    drop below E'1 once kappa12^2 > omega1*omega2.  The middle dressed
    states are  |E'2> = a_minus |E2> + b_minus |E3>  and
    |E'3> = a_plus |E2> + b_plus |E3>.
    """

    params: TwoQubitAncillaParams
    energies: tuple[float, float, float, float]
    a_minus: float
    b_minus: float
    a_plus: float
    b_plus: float


def _middle_amplitudes(energy: float, y: float, kappa: float) -> tuple[float, float]:
    # eigenvector of [[y, kappa], [kappa, -y]] for the given eigenvalue
    norm = sqrt(kappa * kappa + (energy - y) ** 2)
    if norm == 0.0:
        return 1.0, 0.0
    return kappa / norm, (energy - y) / norm


def two_qubit_spectrum(p: TwoQubitAncillaParams) -> TwoQubitSpectrum:
    x = 0.5 * (p.omega1 + p.omega2)
    y = 0.5 * (p.omega1 - p.omega2)
    r = sqrt(y * y + p.kappa12 * p.kappa12)
    if r == 0.0:
        raise ValueError(
            "degenerate middle levels (omega1 == omega2 with kappa12 == 0): "
            "use a numerical eigendecomposition instead"
        )
    a_minus, b_minus = _middle_amplitudes(-r, y, p.kappa12)
    a_plus, b_plus = _middle_amplitudes(+r, y, p.kappa12)
    return TwoQubitSpectrum(
        params=p,
        energies=(-x, -r, r, x),
        a_minus=a_minus,
        b_minus=b_minus,
        a_plus=a_plus,
        b_plus=b_plus,
    )


def two_qubit_ancilla(p: TwoQubitAncillaParams) -> AncillaSpec:
    """Two exchange-coupled qubits with levels at +-omega/2."""
    free = (
        FreeTerm(0, p.omega1, SIGMA_MINUS, energy_shift=-0.5 * p.omega1),
        FreeTerm(1, p.omega2, SIGMA_MINUS, energy_shift=-0.5 * p.omega2),
    )
    exchange = ()
    if p.kappa12 != 0.0:
        # kappa * sigma1+ sigma2- + h.c.
        exchange = (ExchangeTerm(0, 1, p.kappa12, SIGMA_PLUS, SIGMA_PLUS),)
    return AncillaSpec(subsystem_dims=(2, 2), free_terms=free, exchange_terms=exchange)


def _thermal_weights(spectrum: TwoQubitSpectrum, beta: float) -> np.ndarray:
    e = np.array(spectrum.energies)
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def _eta_elements(spectrum: TwoQubitSpectrum, beta: float):
    """Closed-form thermal-state elements in the E-label basis.

    Returns (eta22, eta33, eta23) with eta23 = <E2| eta |E3>.
    """
    w = _thermal_weights(spectrum, beta)
    am, bm, ap, bp = spectrum.a_minus, spectrum.b_minus, spectrum.a_plus, spectrum.b_plus
    eta22 = w[1] * am * am + w[2] * ap * ap
    eta33 = w[1] * bm * bm + w[2] * bp * bp
    eta23 = w[1] * am * bm + w[2] * ap * bp
    return eta22, eta33, eta23


# ---------------------------------------------------------------------------
# model 1: independent flip-flop couplings to each ancilla qubit


def example1_terms(alpha1: complex, alpha2: complex) -> tuple[InteractionTerm, ...]:
    dims = (2, 2)
    from .ancilla import embed

    s1m = embed({0: SIGMA_MINUS}, dims)
    s1p = embed({0: SIGMA_PLUS}, dims)
    s2m = embed({1: SIGMA_MINUS}, dims)
    s2p = embed({1: SIGMA_PLUS}, dims)
    return (
        InteractionTerm(SIGMA_PLUS, alpha1 * s1m, "raise1"),
        InteractionTerm(SIGMA_MINUS, np.conj(alpha1) * s1p, "lower1"),
        InteractionTerm(SIGMA_PLUS, alpha2 * s2m, "raise2"),
        InteractionTerm(SIGMA_MINUS, np.conj(alpha2) * s2p, "lower2"),
    )


def example1_model(p: TwoQubitAncillaParams, omega_s: float, alpha1: complex,
                   alpha2: complex, beta: float, dt: float) -> CollisionModel:
    h_sys = 0.5 * omega_s * SZ
    anc = build_ancilla(two_qubit_ancilla(p))
    return CollisionModel(h_sys, anc, example1_terms(alpha1, alpha2), beta, dt)


def example1_closed_g(p: TwoQubitAncillaParams, alpha1: complex, alpha2: complex,
                      beta: float):
    """Closed-form correlation set for model 1 (no dense traces involved)."""
    from .ancilla import CorrelationSet

    spectrum = two_qubit_spectrum(p)
    w = _thermal_weights(spectrum, beta)
    eta22, eta33, eta23 = _eta_elements(spectrum, beta)
    a1c, a2c = np.conj(alpha1), np.conj(alpha2)

    labels = ("raise1", "lower1", "raise2", "lower2")
    g1 = {lab: 0j for lab in labels}
    g_he = {lab: 0j for lab in labels}
    g2 = {(l, lp): 0j for l in labels for lp in labels}
    # same-qubit populations: Tr[sigma_k^+ sigma_k^- eta] etc.
    g2[("raise1", "raise1")] = abs(alpha1) ** 2 * (w[3] + eta22)
    g2[("lower1", "lower1")] = abs(alpha1) ** 2 * (w[0] + eta33)
    g2[("raise2", "raise2")] = abs(alpha2) ** 2 * (w[3] + eta33)
    g2[("lower2", "lower2")] = abs(alpha2) ** 2 * (w[0] + eta22)
    # cross-qubit coherences: Tr[sigma_1^-+ sigma_2^-+ eta] via eta23
    g2[("raise1", "raise2")] = a2c * alpha1 * eta23
    g2[("raise2", "raise1")] = a1c * alpha2 * np.conj(eta23)
    g2[("lower1", "lower2")] = alpha2 * a1c * np.conj(eta23)
    g2[("lower2", "lower1")] = alpha1 * a2c * eta23
    return CorrelationSet(g1=g1, g2=g2, g_he=g_he)


def example1_steady(corr) -> DensityMatrix:
    """Diagonal fixed point: populations set by the summed up/down rates."""
    raise_labels = [l for l in corr.g1 if l.startswith("raise")]
    lower_labels = [l for l in corr.g1 if l.startswith("lower")]
    g_up = sum(corr.g2[(l, lp)] for l in raise_labels for lp in raise_labels).real
    g_down = sum(corr.g2[(l, lp)] for l in lower_labels for lp in lower_labels).real
    total = g_up + g_down
    if total <= 0:
        raise ValueError("total transition rate vanishes; steady state undefined")
    return DensityMatrix.from_matrix(np.diag([g_up / total, g_down / total]), (2,))


# ---------------------------------------------------------------------------
# model 2: eigenoperator coupling to the |E2> <-> |E3> transition


@dataclass(frozen=True)
class Example2Coefficients:
    """Closed-form coefficients of the model-2 truncated master equation."""

    gP: complex
    gM: complex
    gPM: float
    gMP: float
    alpha: complex
    omega_s: float
    dt: float

    def __post_init__(self):
        if abs(self.gM - np.conj(self.gP)) > 1e-12:
            raise ValueError("gM must be the conjugate of gP")
        if self.gPM < 0 or self.gMP < 0:
            raise ValueError("second-order rates must be >= 0")


def example2_terms(alpha: complex) -> tuple[InteractionTerm, ...]:
    return (
        InteractionTerm(SIGMA_PLUS, alpha * env_sigma_minus(), "raise"),
        InteractionTerm(SIGMA_MINUS, np.conj(alpha) * env_sigma_plus(), "lower"),
    )


def example2_closed_coeffs(p: TwoQubitAncillaParams, alpha: complex, omega_s: float,
                           beta: float, dt: float) -> Example2Coefficients:
    spectrum = two_qubit_spectrum(p)
    eta22, eta33, eta23 = _eta_elements(spectrum, beta)
    return Example2Coefficients(
        gP=alpha * eta23,
        gM=np.conj(alpha * eta23),
        gPM=abs(alpha) ** 2 * eta22,
        gMP=abs(alpha) ** 2 * eta33,
        alpha=alpha,
        omega_s=omega_s,
        dt=dt,
    )


def example2_map_apply(mat: np.ndarray, c: Example2Coefficients) -> np.ndarray:
    """The per-element update map for model 2 (linear in the state)."""
    dt, ws = c.dt, c.omega_s
    dt2 = dt * dt
    r11, r12, r21, r22 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    gap = c.gPM + c.gMP + ws * ws

    flux = (
        dt2 * (c.gMP * r22 - c.gPM * r11)
        + 0.5 * dt2 * ws * (c.gP * r12 + c.gM * r21)
        + 1j * dt * (c.gP * r12 - c.gM * r21)
    )
    pol = r11 - r22
    new12 = r12 + (0.5 * dt2 * ws + 1j * dt) * c.gM * pol - 1j * dt * ws * r12 - 0.5 * dt2 * gap * r12
    new21 = r21 + (0.5 * dt2 * ws - 1j * dt) * c.gP * pol + 1j * dt * ws * r21 - 0.5 * dt2 * gap * r21
    return np.array([[r11 + flux, new12], [new21, r22 - flux]])


def example2_map_step(rho: DensityMatrix, c: Example2Coefficients) -> DensityMatrix:
    out = example2_map_apply(rho.matrix, c)
    return DensityMatrix.from_matrix(out, (2,), positivity_tol=1e-6)


def example2_model(p: TwoQubitAncillaParams, omega_s: float, alpha: complex,
                   beta: float, dt: float) -> CollisionModel:
    h_sys = 0.5 * omega_s * SZ
    anc = build_ancilla(two_qubit_ancilla(p))
    coeffs = example2_closed_coeffs(p, alpha, omega_s, beta, dt)
    return CollisionModel(
        h_sys,
        anc,
        example2_terms(alpha),
        beta,
        dt,
        analytic_step=lambda mat: example2_map_apply(mat, coeffs),
    )


def example2_analytic_steady(c: Example2Coefficients) -> tuple[float, float, float]:
    """Closed-form steady-state Bloch vector of the model-2 map."""
    ws, dt = c.omega_s, c.dt
    dt2 = dt * dt
    rates = c.gPM + c.gMP
    gap = rates + ws * ws
    drive2 = (c.gP * c.gM).real  # |gP|^2
    k = (
        8.0 * drive2 * (rates - ws * ws)
        + 4.0 * ws * ws * rates
        + dt2 * (rates * gap * gap - 2.0 * drive2 * ws * ws * gap)
    )
    if abs(k) < 1e-300:
        raise ValueError("steady-state denominator vanishes")
    imbalance = c.gMP - c.gPM
    sz = imbalance * (4.0 * ws * ws + dt2 * gap * gap) / k
    w = c.gM * (4.0 * ws + 2j * dt * rates + dt2 * ws * gap)
    sx = imbalance * 2.0 * w.real / k
    sy = -imbalance * 2.0 * w.imag / k
    return (float(sx), float(sy), float(sz))
