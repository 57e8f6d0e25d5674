import numpy as np
import pytest

from structcoll.ancilla import build_ancilla, thermal_state
from structcoll.engine import PropagatorKind, _truncated_apply, steady_state, truncated_step
from structcoll.models import (
    E_INDEX,
    Example2Coefficients,
    TwoQubitAncillaParams,
    env_sigma_minus,
    env_sigma_plus,
    example1_closed_g,
    example1_model,
    example1_steady,
    example2_analytic_steady,
    example2_closed_coeffs,
    example2_map_apply,
    example2_model,
    two_qubit_ancilla,
    two_qubit_spectrum,
    _eta_elements,
)
from structcoll.qcore import DensityMatrix

FIG = TwoQubitAncillaParams(omega1=0.5, omega2=1.5, kappa12=0.3)


def closed_vector(spectrum, which):
    """The closed-form eigenvector for the label E'2 or E'3 as a length-4 array."""
    v = np.zeros(4)
    if which == 2:
        a, b = spectrum.a_minus, spectrum.b_minus
    else:
        a, b = spectrum.a_plus, spectrum.b_plus
    v[E_INDEX[2]] = a
    v[E_INDEX[3]] = b
    return v


def test_spectrum_against_numerical_diagonalization():
    rng = np.random.default_rng(31)
    cases = [FIG]
    for _ in range(40):
        cases.append(
            TwoQubitAncillaParams(
                omega1=rng.uniform(0.0, 3.0),
                omega2=rng.uniform(0.0, 3.0),
                kappa12=rng.uniform(0.05, 3.0),
            )
        )
    for p in cases:
        spectrum = two_qubit_spectrum(p)
        anc = build_ancilla(two_qubit_ancilla(p))
        numeric = np.sort(np.linalg.eigvalsh(anc.h_total.entries))
        assert np.abs(np.sort(spectrum.energies) - numeric).max() < 1e-10
        # middle eigenvectors, matched by eigenvalue and compared up to sign
        vals, vecs = np.linalg.eigh(anc.h_total.entries)
        for which, energy in ((2, spectrum.energies[1]), (3, spectrum.energies[2])):
            idx = int(np.argmin(np.abs(vals - energy)))
            v_closed = closed_vector(spectrum, which)
            v_num = vecs[:, idx].real
            err = min(np.abs(v_num - v_closed).max(), np.abs(v_num + v_closed).max())
            assert err < 1e-10


def test_spectrum_amplitudes_normalized_and_orthogonal():
    rng = np.random.default_rng(37)
    for _ in range(20):
        p = TwoQubitAncillaParams(rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0.05, 2))
        s = two_qubit_spectrum(p)
        assert s.a_minus**2 + s.b_minus**2 == pytest.approx(1.0, abs=1e-12)
        assert s.a_plus**2 + s.b_plus**2 == pytest.approx(1.0, abs=1e-12)
        assert s.a_minus * s.a_plus + s.b_minus * s.b_plus == pytest.approx(0.0, abs=1e-12)


def test_spectrum_degenerate_case_rejected():
    with pytest.raises(ValueError):
        two_qubit_spectrum(TwoQubitAncillaParams(1.0, 1.0, 0.0))


def test_label_order_can_invert():
    # once kappa^2 > omega1*omega2 the level E'2 drops below E'1
    p = TwoQubitAncillaParams(0.5, 0.5, 2.0)
    s = two_qubit_spectrum(p)
    assert s.energies[1] < s.energies[0]


def test_eta_elements_against_dense_thermal_state():
    for beta in (0.1, 1.0, 10.0):
        for kappa in (0.0, 0.3, 1.0, 3.0):
            p = TwoQubitAncillaParams(0.5, 1.5, kappa)
            spectrum = two_qubit_spectrum(p)
            eta = thermal_state(build_ancilla(two_qubit_ancilla(p)), beta).matrix
            eta22, eta33, eta23 = _eta_elements(spectrum, beta)
            i2, i3 = E_INDEX[2], E_INDEX[3]
            assert eta22 == pytest.approx(eta[i2, i2].real, abs=1e-12)
            assert eta33 == pytest.approx(eta[i3, i3].real, abs=1e-12)
            assert eta23 == pytest.approx(eta[i2, i3], abs=1e-12)


def test_eta_coherence_vanishes_without_coupling():
    p = TwoQubitAncillaParams(0.5, 1.5, 0.0)
    _, _, eta23 = _eta_elements(two_qubit_spectrum(p), 1.0)
    assert abs(eta23) < 1e-15


def test_env_transition_operators():
    sp = env_sigma_plus()
    assert sp[E_INDEX[3], E_INDEX[2]] == 1.0
    assert np.count_nonzero(sp) == 1
    assert np.allclose(env_sigma_minus(), sp.conj().T)


def test_example1_closed_g_matches_dense_traces():
    alpha1, alpha2 = 0.1, 0.07
    for beta in (0.1, 1.0, 10.0):
        for kappa in (0.0, 0.3, 1.0, 3.0):
            p = TwoQubitAncillaParams(0.5, 1.5, kappa)
            model = example1_model(p, 1.0, alpha1, alpha2, beta, 0.1)
            closed = example1_closed_g(p, alpha1, alpha2, beta)
            dense = model.correlations
            for key in dense.g2:
                assert closed.g2[key] == pytest.approx(dense.g2[key], abs=1e-12)
            for lab in dense.g1:
                assert abs(dense.g1[lab]) < 1e-13
                assert abs(dense.g_he[lab]) < 1e-13


def test_example2_closed_coeffs_match_dense_thermal_state():
    alpha = 0.2
    for beta in (0.1, 1.0, 10.0):
        for kappa in (0.0, 0.3, 1.0, 3.0):
            p = TwoQubitAncillaParams(0.5, 1.5, kappa)
            c = example2_closed_coeffs(p, alpha, 1.0, beta, 0.1)
            eta = thermal_state(build_ancilla(two_qubit_ancilla(p)), beta).matrix
            i2, i3 = E_INDEX[2], E_INDEX[3]
            assert c.gP == pytest.approx(alpha * eta[i2, i3], abs=1e-12)
            assert c.gM == pytest.approx(np.conj(alpha * eta[i2, i3]), abs=1e-12)
            assert c.gPM == pytest.approx(abs(alpha) ** 2 * eta[i2, i2].real, abs=1e-12)
            assert c.gMP == pytest.approx(abs(alpha) ** 2 * eta[i3, i3].real, abs=1e-12)


def test_example2_rate_inequalities():
    # |gP|^2 is bounded by the second-order rates (Cauchy-Schwarz on eta)
    for beta in (0.2, 1.0, 5.0):
        for kappa in (0.1, 0.3, 1.0, 3.0):
            p = TwoQubitAncillaParams(0.5, 1.5, kappa)
            c = example2_closed_coeffs(p, 0.2, 1.0, beta, 0.1)
            eta22, eta33, eta23 = _eta_elements(two_qubit_spectrum(p), beta)
            assert abs(eta23) ** 2 <= eta22 * eta33 + 1e-15
            assert abs(c.gP) ** 2 <= c.gPM + 1e-15
            assert abs(c.gP) ** 2 <= c.gMP + 1e-15


def test_example2_coefficients_validation():
    with pytest.raises(ValueError):
        Example2Coefficients(gP=0.1, gM=0.2, gPM=0.1, gMP=0.1, alpha=0.1, omega_s=1, dt=0.1)
    with pytest.raises(ValueError):
        Example2Coefficients(gP=0.0, gM=0.0, gPM=-0.1, gMP=0.1, alpha=0.1, omega_s=1, dt=0.1)


def test_example2_map_equals_generic_truncated_map():
    """The per-element map is the generic second-order map specialized."""
    rng = np.random.default_rng(41)
    model = example2_model(FIG, 1.0, 0.1, 1.0, 0.1)
    c = example2_closed_coeffs(FIG, 0.1, 1.0, 1.0, 0.1)
    corr = model.correlations
    for _ in range(10):
        m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        got = example2_map_apply(m, c)
        want = _truncated_apply(m, model, corr)
        assert np.abs(got - want).max() < 1e-14


def test_example2_analytic_steady_is_a_fixed_point():
    c = example2_closed_coeffs(FIG, 0.1, 1.0, 1.0, 0.1)
    sx, sy, sz = example2_analytic_steady(c)
    mat = 0.5 * np.array([[1 + sz, sx - 1j * sy], [sx + 1j * sy, 1 - sz]])
    out = example2_map_apply(mat, c)
    assert np.abs(out - mat).max() < 1e-12


def test_example2_analytic_steady_matches_solver():
    model = example2_model(FIG, 1.0, 0.1, 1.0, 0.1)
    c = example2_closed_coeffs(FIG, 0.1, 1.0, 1.0, 0.1)
    sx, sy, sz = example2_analytic_steady(c)
    ss = steady_state(model, PropagatorKind.ANALYTIC).matrix
    assert (ss[0, 0] - ss[1, 1]).real == pytest.approx(sz, abs=1e-11)
    assert 2 * ss[1, 0].real == pytest.approx(sx, abs=1e-11)
    assert 2 * ss[1, 0].imag == pytest.approx(sy, abs=1e-11)


def test_example1_steady_is_fixed_under_truncated_map():
    model = example1_model(FIG, 1.0, 0.1, 0.1, 1.0, 0.1)
    closed = example1_steady(example1_closed_g(FIG, 0.1, 0.1, 1.0))
    stepped = truncated_step(closed, model)
    assert np.abs(stepped.matrix - closed.matrix).max() < 1e-12
    # and it is diagonal by construction
    assert abs(closed.matrix[0, 1]) == 0.0


def test_example1_steady_needs_nonzero_rates():
    with pytest.raises(ValueError):
        example1_steady(example1_closed_g(FIG, 0.0, 0.0, 1.0))
