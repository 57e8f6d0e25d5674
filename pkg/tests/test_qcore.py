import numpy as np
import pytest

from structcoll.qcore import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    StateValidityError,
    SupportError,
    collision_unitary,
    fix_phases,
    gibbs_state,
    hermitian_eig,
    partial_trace,
    partial_trace_matrix,
    relative_entropy,
    tensor_product,
    vn_entropy,
)


def random_hermitian(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (m + m.conj().T)


def random_density(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = m @ m.conj().T
    return m / np.trace(m)


def test_hilbert_space_dims():
    assert HilbertSpace((2, 3)).total_dim == 6
    with pytest.raises(ValueError):
        HilbertSpace(())
    with pytest.raises(ValueError):
        HilbertSpace((2, 1))


def test_operator_shape_and_dagger():
    space = HilbertSpace((2,))
    op = Operator(space, [[0, 1j], [0, 0]])
    assert np.allclose(op.dagger().entries, [[0, 0], [-1j, 0]])
    assert not op.is_hermitian()
    with pytest.raises(ValueError):
        Operator(space, np.zeros((3, 3)))


def test_operator_entries_read_only():
    op = Operator(HilbertSpace((2,)), np.eye(2))
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5.0


def test_density_matrix_invariants():
    DensityMatrix.from_matrix(np.eye(2) / 2, (2,))
    with pytest.raises(StateValidityError):
        DensityMatrix.from_matrix([[0.5, 0.5], [0.2, 0.5]], (2,))  # not Hermitian
    with pytest.raises(StateValidityError):
        DensityMatrix.from_matrix(np.eye(2), (2,))  # trace 2
    with pytest.raises(StateValidityError):
        DensityMatrix.from_matrix(np.diag([1.5, -0.5]), (2,))  # negative eigenvalue
    # relaxed tolerance admits a slightly negative eigenvalue
    DensityMatrix.from_matrix(np.diag([1 + 1e-7, -1e-7]), (2,), positivity_tol=1e-6)


def test_tensor_product_mixed_products():
    """(A x B)(C x D) = (AC) x (BD)."""
    rng = np.random.default_rng(7)
    sa, sb = HilbertSpace((2,)), HilbertSpace((3,))
    for _ in range(5):
        a, c = (random_hermitian(rng, 2) for _ in range(2))
        b, d = (random_hermitian(rng, 3) for _ in range(2))
        lhs = tensor_product(Operator(sa, a), Operator(sb, b)).entries @ tensor_product(
            Operator(sa, c), Operator(sb, d)
        ).entries
        rhs = tensor_product(Operator(sa, a @ c), Operator(sb, b @ d)).entries
        assert np.abs(lhs - rhs).max() < 1e-12


def _partial_trace_by_summation(mat, dims, keep):
    """Independent oracle: explicit index loops over the traced factors."""
    n = len(dims)
    keep = sorted(keep)
    traced = [i for i in range(n) if i not in keep]
    t = np.asarray(mat).reshape(dims + tuple(dims))
    d_keep = int(np.prod([dims[k] for k in keep]))
    out = np.zeros((d_keep, d_keep), dtype=complex)
    keep_ranges = [range(dims[k]) for k in keep]
    traced_ranges = [range(dims[k]) for k in traced]
    import itertools

    for row in itertools.product(*keep_ranges):
        for col in itertools.product(*keep_ranges):
            acc = 0.0
            for tr in itertools.product(*traced_ranges):
                idx_row = [0] * n
                idx_col = [0] * n
                for k, v in zip(keep, row):
                    idx_row[k] = v
                for k, v in zip(keep, col):
                    idx_col[k] = v
                for k, v in zip(traced, tr):
                    idx_row[k] = v
                    idx_col[k] = v
                acc += t[tuple(idx_row) + tuple(idx_col)]
            r = np.ravel_multi_index(row, [dims[k] for k in keep]) if keep else 0
            c = np.ravel_multi_index(col, [dims[k] for k in keep]) if keep else 0
            out[r, c] = acc
    return out


@pytest.mark.parametrize("keep", [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)])
def test_partial_trace_matches_summation_oracle(keep):
    rng = np.random.default_rng(11)
    dims = (2, 3, 2)
    mat = random_density(rng, 12)
    got = partial_trace_matrix(mat, dims, keep)
    want = _partial_trace_by_summation(mat, dims, keep)
    assert np.abs(got - want).max() < 1e-13


def test_partial_trace_of_product_state():
    rng = np.random.default_rng(3)
    a = random_density(rng, 2)
    b = random_density(rng, 3)
    joint = DensityMatrix.from_matrix(np.kron(a, b), (2, 3))
    assert np.abs(partial_trace(joint, (0,)).matrix - a).max() < 1e-13
    assert np.abs(partial_trace(joint, (1,)).matrix - b).max() < 1e-13


def test_partial_trace_rejects_bad_keep():
    with pytest.raises(ValueError):
        partial_trace_matrix(np.eye(4), (2, 2), ())
    with pytest.raises(ValueError):
        partial_trace_matrix(np.eye(4), (2, 2), (0, 0))
    with pytest.raises(ValueError):
        partial_trace_matrix(np.eye(4), (2, 2), (2,))


def test_fix_phases_pivot_real_positive():
    rng = np.random.default_rng(5)
    _, vecs = np.linalg.eigh(random_hermitian(rng, 4))
    fixed = fix_phases(vecs)
    for j in range(4):
        # same ray, pivot rotated onto the positive real axis
        overlap = abs(np.vdot(fixed[:, j], vecs[:, j]))
        assert abs(overlap - 1.0) < 1e-12
        i = int(np.argmax(np.abs(fixed[:, j])))
        assert fixed[i, j].imag == pytest.approx(0.0, abs=1e-12)
        assert fixed[i, j].real > 0


def test_hermitian_eig_reconstructs():
    rng = np.random.default_rng(9)
    h = random_hermitian(rng, 5)
    dec = hermitian_eig(Operator(HilbertSpace((5,)), h))
    recon = (dec.eigenvectors * dec.eigenvalues) @ dec.eigenvectors.conj().T
    assert np.abs(recon - h).max() < 1e-12
    assert np.all(np.diff(dec.eigenvalues) >= -1e-12)


def test_collision_unitary_is_unitary_and_matches_series():
    rng = np.random.default_rng(13)
    h = Operator(HilbertSpace((4,)), random_hermitian(rng, 4))
    u = collision_unitary(h, 0.37).entries
    assert np.abs(u @ u.conj().T - np.eye(4)).max() < 1e-12
    # commutes with its generator
    assert np.abs(u @ h.entries - h.entries @ u).max() < 1e-12
    # Taylor series oracle at small dt
    dt = 1e-3
    u_small = collision_unitary(h, dt).entries
    hm = h.entries
    series = np.eye(4) - 1j * dt * hm - 0.5 * dt**2 * hm @ hm + (1j / 6) * dt**3 * hm @ hm @ hm
    assert np.abs(u_small - series).max() < 1e-11
    with pytest.raises(ValueError):
        collision_unitary(h, -0.1)


def test_gibbs_state_two_level_closed_form():
    omega, beta = 1.3, 0.8
    h = Operator(HilbertSpace((2,)), np.diag([0.5 * omega, -0.5 * omega]))
    rho = gibbs_state(h, beta)
    z = 2 * np.cosh(0.5 * beta * omega)
    expected = np.diag([np.exp(-0.5 * beta * omega), np.exp(0.5 * beta * omega)]) / z
    assert np.abs(rho.matrix - expected).max() < 1e-14


def test_gibbs_state_limits():
    rng = np.random.default_rng(17)
    h = Operator(HilbertSpace((3,)), random_hermitian(rng, 3))
    hot = gibbs_state(h, 0.0)
    assert np.abs(hot.matrix - np.eye(3) / 3).max() < 1e-14
    cold = gibbs_state(h, 500.0)
    # essentially the ground-state projector
    vals, vecs = np.linalg.eigh(h.entries)
    ground = np.outer(vecs[:, 0], vecs[:, 0].conj())
    assert np.abs(cold.matrix - ground).max() < 1e-10
    with pytest.raises(ValueError):
        gibbs_state(h, -1.0)


def test_vn_entropy_reference_values():
    pure = DensityMatrix.from_matrix(np.diag([1.0, 0.0]), (2,))
    assert vn_entropy(pure) == pytest.approx(0.0, abs=1e-12)
    mixed = DensityMatrix.from_matrix(np.eye(4) / 4, (4,))
    assert vn_entropy(mixed) == pytest.approx(np.log(4), abs=1e-12)
    p = 0.3
    binary = DensityMatrix.from_matrix(np.diag([p, 1 - p]), (2,))
    expected = -p * np.log(p) - (1 - p) * np.log(1 - p)
    assert vn_entropy(binary) == pytest.approx(expected, abs=1e-12)


def test_relative_entropy_properties():
    rng = np.random.default_rng(21)
    for _ in range(5):
        rho = DensityMatrix.from_matrix(random_density(rng, 3), (3,))
        sigma = DensityMatrix.from_matrix(random_density(rng, 3), (3,))
        s = relative_entropy(rho, sigma)
        assert s >= -1e-12
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-10)
    # classical cross-check on diagonal states
    rho = DensityMatrix.from_matrix(np.diag([0.7, 0.3]), (2,))
    sigma = DensityMatrix.from_matrix(np.diag([0.4, 0.6]), (2,))
    expected = 0.7 * np.log(0.7 / 0.4) + 0.3 * np.log(0.3 / 0.6)
    assert relative_entropy(rho, sigma) == pytest.approx(expected, abs=1e-12)


def test_relative_entropy_outside_support():
    rho = DensityMatrix.from_matrix(np.diag([1.0, 0.0]), (2,))
    sigma = DensityMatrix.from_matrix(np.diag([0.0, 1.0]), (2,))
    with pytest.raises(SupportError):
        relative_entropy(rho, sigma)
