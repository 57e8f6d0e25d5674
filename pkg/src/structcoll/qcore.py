"""Dense linear algebra for small composite quantum systems.

Everything here works on explicit complex matrices: tensor products,
partial traces, Hermitian eigendecompositions, unitaries generated by
Hermitian Hamiltonians, Gibbs states and entropic functionals.  The
Kronecker convention is the standard one (left factor varies slowest)
and is relied upon by every module above this one.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np


class StateValidityError(ValueError):
    """A matrix claimed to be a density matrix fails its invariants."""


class SupportError(ValueError):
    """Relative entropy requested outside the support of the reference state."""


@dataclass
class NumericalPolicy:
    """Global tolerance knobs.

    algebra_tol    -- exact algebraic identities (Hermiticity, traces)
    spectral_tol   -- anything that passes through an eigendecomposition
    positivity_tol -- how negative an eigenvalue may be before a state is invalid
    entropy_clamp  -- eigenvalues in [-entropy_clamp, 0) are treated as 0
    support_cutoff -- eigenvalues below this count as outside the support
    """

    algebra_tol: float = 1e-12
    spectral_tol: float = 1e-10
    positivity_tol: float = 1e-10
    entropy_clamp: float = 1e-10
    support_cutoff: float = 1e-14


POLICY = NumericalPolicy()


@dataclass(frozen=True)
class HilbertSpace:
    """An ordered factorization of a finite-dimensional Hilbert space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims or any(d < 2 for d in self.dims):
            raise ValueError(f"subsystem dimensions must all be >= 2, got {self.dims}")

    @property
    def total_dim(self) -> int:
        return prod(self.dims)


@dataclass(frozen=True)
class Operator:
    """A dense square matrix tagged with its Hilbert-space factorization."""

    space: HilbertSpace
    entries: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=complex)
        n = self.space.total_dim
        if mat.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got shape {mat.shape}")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "entries", mat)

    def dagger(self) -> "Operator":
        return Operator(self.space, self.entries.conj().T)

    def is_hermitian(self, tol: float | None = None) -> bool:
        tol = POLICY.algebra_tol if tol is None else tol
        scale = max(1.0, np.abs(self.entries).max())
        return np.abs(self.entries - self.entries.conj().T).max() <= tol * scale


class DensityMatrix:
    """A positive unit-trace Hermitian operator.

    ``positivity_tol`` can be relaxed by callers that knowingly hold
    states from a truncated (non-CP) propagator; the default enforces
    the standard invariant.
    """

    def __init__(self, op: Operator, positivity_tol: float | None = None):
        tol = POLICY.positivity_tol if positivity_tol is None else positivity_tol
        mat = op.entries
        if np.abs(mat - mat.conj().T).max() > POLICY.algebra_tol:
            raise StateValidityError("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > 1e-12 or abs(np.trace(mat).imag) > 1e-12:
            raise StateValidityError(f"density matrix trace is {np.trace(mat)}, not 1")
        min_eig = np.linalg.eigvalsh(mat)[0]
        if min_eig < -tol:
            raise StateValidityError(f"density matrix has eigenvalue {min_eig:.3e} < -{tol:.1e}")
        self.op = op

    @classmethod
    def from_matrix(cls, mat, dims, positivity_tol: float | None = None) -> "DensityMatrix":
        space = HilbertSpace(tuple(dims))
        return cls(Operator(space, mat), positivity_tol=positivity_tol)

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def space(self) -> HilbertSpace:
        return self.op.space


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and a unitary of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def tensor_product(a: Operator, b: Operator) -> Operator:
    space = HilbertSpace(a.space.dims + b.space.dims)
    return Operator(space, np.kron(a.entries, b.entries))


def partial_trace_matrix(mat: np.ndarray, dims, keep) -> np.ndarray:
    """Trace out every factor not listed in ``keep`` (indices into dims)."""
    dims = tuple(dims)
    keep = tuple(keep)
    n = len(dims)
    if not keep or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep={keep} is not a valid nonempty subset of range({n})")
    if len(set(keep)) != len(keep):
        raise ValueError(f"keep={keep} contains duplicates")
    keep = tuple(sorted(keep))
    tensor = np.asarray(mat, dtype=complex).reshape(dims + dims)
    # contract the traced factors pairwise (row index with column index)
    traced = [i for i in range(n) if i not in keep]
    for count, i in enumerate(sorted(traced, reverse=True)):
        live = n - count  # factors still present on each side
        tensor = np.trace(tensor, axis1=i, axis2=i + live)
    d_keep = prod(dims[k] for k in keep)
    return tensor.reshape(d_keep, d_keep)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    dims = rho.space.dims
    reduced = partial_trace_matrix(rho.matrix, dims, keep)
    kept_dims = tuple(dims[k] for k in sorted(keep))
    return DensityMatrix.from_matrix(reduced, kept_dims)


def _require_hermitian(mat: np.ndarray, tol: float | None = None) -> None:
    tol = POLICY.spectral_tol if tol is None else tol
    scale = max(1.0, np.abs(mat).max())
    dev = np.abs(mat - mat.conj().T).max()
    if dev > tol * scale:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        pivot = out[i, j]
        if abs(pivot) > 0:
            out[:, j] *= abs(pivot) / pivot
    return out


def hermitian_eig(h: Operator) -> SpectralDecomposition:
    _require_hermitian(h.entries)
    vals, vecs = np.linalg.eigh(h.entries)
    return SpectralDecomposition(vals, fix_phases(vecs))


def collision_unitary(h_total: Operator, dt: float) -> Operator:
    """exp(-i * dt * H) via the spectral decomposition of Hermitian H."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    _require_hermitian(h_total.entries)
    vals, vecs = np.linalg.eigh(h_total.entries)
    u = (vecs * np.exp(-1j * dt * vals)) @ vecs.conj().T
    return Operator(h_total.space, u)


def gibbs_state(h: Operator, beta: float) -> DensityMatrix:
    """e^{-beta H} / Z, computed in the eigenbasis of H."""
    if beta < 0 or not np.isfinite(beta):
        raise ValueError("beta must be finite and >= 0")
    _require_hermitian(h.entries)
    vals, vecs = np.linalg.eigh(h.entries)
    weights = np.exp(-beta * (vals - vals.min()))
    weights /= weights.sum()
    mat = (vecs * weights) @ vecs.conj().T
    mat = 0.5 * (mat + mat.conj().T)
    return DensityMatrix(Operator(h.space, mat))


def _clamped_spectrum(mat: np.ndarray) -> np.ndarray:
    vals = np.linalg.eigvalsh(mat)
    if vals[0] < -POLICY.entropy_clamp:
        raise StateValidityError(f"eigenvalue {vals[0]:.3e} too negative for an entropy")
    return np.clip(vals, 0.0, 1.0)


def vn_entropy(rho: DensityMatrix) -> float:
    """von Neumann entropy -Tr[rho ln rho] in nats."""
    vals = _clamped_spectrum(rho.matrix)
    pos = vals[vals > 0]
    return float(-np.sum(pos * np.log(pos)))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """S(rho || sigma) = Tr[rho ln rho] - Tr[rho ln sigma], in nats."""
    p = _clamped_spectrum(rho.matrix)
    p_pos = p[p > 0]
    tr_rho_ln_rho = float(np.sum(p_pos * np.log(p_pos)))

    s_vals, s_vecs = np.linalg.eigh(sigma.matrix)
    overlaps = np.real(np.einsum("ij,jk,ki->i", s_vecs.conj().T, rho.matrix, s_vecs))
    overlaps = np.clip(overlaps, 0.0, None)
    outside = s_vals <= POLICY.support_cutoff
    if np.any(overlaps[outside] > 1e-12):
        raise SupportError("rho has weight outside the support of sigma")
    inside = ~outside
    tr_rho_ln_sigma = float(np.sum(overlaps[inside] * np.log(s_vals[inside])))
    return tr_rho_ln_rho - tr_rho_ln_sigma
