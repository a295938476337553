"""Quantum channel algebra in the Pauli transfer matrix (PTM) representation.

Conventions, fixed package-wide:

* Channels are real matrices in the normalized Pauli basis
  {I, X, Y, Z} / sqrt(2), with row/column 0 the identity component. A channel
  is trace preserving iff its first row is (1, 0, ..., 0) and unital iff its
  first column is (1, 0, ..., 0)^T.
* States and measurement effects are real coefficient vectors in the same
  basis; Born probabilities are plain dot products of those vectors.
* Matrices are vectorized by column stacking, so vec(A X B) =
  (B^T kron A) vec(X).

Interfaces carry the Hilbert-space dimension d so that they generalize, but
only d = 2 (one qubit) is constructed and exercised here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

__all__ = [
    "Superoperator",
    "State",
    "Effect",
    "ChoiMatrix",
    "pauli_basis",
    "vec",
    "unvec",
    "rotation_channel",
    "depolarizing_channel",
    "identity_channel",
    "zero_channel",
    "channel_from_unitary",
    "compose",
    "born_probability",
    "to_choi",
    "choi_eigenvalues",
    "is_cp",
    "is_tp",
    "is_unital",
    "is_unitary_channel",
    "agi",
    "agi_haar_oracle",
    "diamond_distance",
]

STRUCTURAL_TOL = 1e-9
EIGVAL_IMAG_TOL = 1e-10

_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def pauli_basis(dim: int = 2) -> np.ndarray:
    """Normalized Hermitian operator basis, shape (dim**2, dim, dim).

    For dim = 2 this is {I, X, Y, Z} / sqrt(2), orthonormal under the
    Hilbert-Schmidt inner product.
    """
    if dim != 2:
        raise NotImplementedError("only the one-qubit basis is constructed")
    return np.stack([np.eye(2, dtype=complex), _SIGMA_X, _SIGMA_Y, _SIGMA_Z]) / np.sqrt(2.0)


def vec(matrix: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(matrix).T.reshape(-1)


def unvec(vector: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    vector = np.asarray(vector)
    if dim is None:
        dim = int(round(np.sqrt(vector.size)))
    return vector.reshape(dim, dim).T


@dataclass(frozen=True)
class Superoperator:
    """A linear map on operators, stored as its real PTM."""

    ptm: np.ndarray

    def __post_init__(self):
        ptm = np.array(self.ptm, dtype=float)
        if ptm.ndim != 2 or ptm.shape[0] != ptm.shape[1]:
            raise ValueError(f"PTM must be square, got shape {ptm.shape}")
        d = int(round(np.sqrt(ptm.shape[0])))
        if d * d != ptm.shape[0]:
            raise ValueError(f"PTM side {ptm.shape[0]} is not a perfect square")
        ptm.setflags(write=False)
        object.__setattr__(self, "ptm", ptm)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension d (PTM is d**2 by d**2)."""
        return int(round(np.sqrt(self.ptm.shape[0])))

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        """Composition: (A @ B) applies B first, then A."""
        if self.ptm.shape != other.ptm.shape:
            raise ValueError("dimension mismatch in composition")
        return Superoperator(self.ptm @ other.ptm)

    def apply(self, state: "State") -> "State":
        if state.coeffs.shape[0] != self.ptm.shape[0]:
            raise ValueError("dimension mismatch applying channel to state")
        return State(self.ptm @ state.coeffs, validate=False)


@dataclass(frozen=True)
class State:
    """Density operator as a real Pauli-basis coefficient vector."""

    coeffs: np.ndarray
    validate: bool = True

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        if self.validate:
            d = int(round(np.sqrt(coeffs.shape[0])))
            if abs(coeffs[0] - 1.0 / np.sqrt(d)) > STRUCTURAL_TOL:
                raise ValueError("state is not unit trace (coefficient 0 must be 1/sqrt(d))")
            if d == 2 and np.linalg.norm(coeffs[1:]) > 1.0 / np.sqrt(2.0) + STRUCTURAL_TOL:
                raise ValueError("Bloch vector norm exceeds 1")

    @classmethod
    def z_plus(cls) -> "State":
        """|0><0|, the +1 eigenstate of sigma_z."""
        return cls(np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0))

    @classmethod
    def from_density_matrix(cls, rho: np.ndarray) -> "State":
        basis = pauli_basis(rho.shape[0])
        coeffs = np.einsum("jab,ba->j", basis, np.asarray(rho, dtype=complex))
        if np.max(np.abs(coeffs.imag)) > STRUCTURAL_TOL:
            raise ValueError("density matrix is not Hermitian")
        return cls(coeffs.real)


@dataclass(frozen=True)
class Effect:
    """POVM effect as a real Pauli-basis coefficient vector."""

    coeffs: np.ndarray
    validate: bool = True

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        if self.validate and coeffs.shape[0] == 4:
            op = _operator_from_coeffs(coeffs)
            ev = np.linalg.eigvalsh(op)
            if ev[0] < -STRUCTURAL_TOL or ev[-1] > 1.0 + STRUCTURAL_TOL:
                raise ValueError("effect eigenvalues must lie in [0, 1]")

    @classmethod
    def z_plus(cls) -> "Effect":
        """Projector onto the +1 eigenstate of sigma_z."""
        return cls(np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0))

    @classmethod
    def from_operator(cls, op: np.ndarray) -> "Effect":
        basis = pauli_basis(op.shape[0])
        coeffs = np.einsum("jab,ba->j", basis, np.asarray(op, dtype=complex))
        if np.max(np.abs(coeffs.imag)) > STRUCTURAL_TOL:
            raise ValueError("effect operator is not Hermitian")
        return cls(coeffs.real)


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix sum_ij B_ij (x) G(B_ij) over matrix units B_ij (unnormalized:
    the identity channel has Choi trace d)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)


def _operator_from_coeffs(coeffs: np.ndarray) -> np.ndarray:
    basis = pauli_basis(int(round(np.sqrt(coeffs.shape[0]))))
    return np.einsum("j,jab->ab", np.asarray(coeffs, dtype=float), basis)


def channel_from_unitary(u: np.ndarray) -> Superoperator:
    """PTM of the unitary conjugation rho -> U rho U^dagger."""
    u = np.asarray(u, dtype=complex)
    basis = pauli_basis(u.shape[0])
    ud = u.conj().T
    ptm = np.einsum("iab,bc,jcd,da->ij", basis, u, basis, ud)
    return Superoperator(ptm.real)


def rotation_channel(axis: np.ndarray, angle: float) -> Superoperator:
    """Unitary rotation channel exp(-i*angle*(axis . sigma)/2) acting by conjugation.

    The axis must be a unit 3-vector (|axis| = 1 within 1e-12).
    """
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,):
        raise ValueError("rotation axis must be a 3-vector")
    if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
        raise ValueError(f"rotation axis must be a unit vector, |axis| = {np.linalg.norm(axis)!r}")
    h = axis[0] * _SIGMA_X + axis[1] * _SIGMA_Y + axis[2] * _SIGMA_Z
    u = np.cos(angle / 2.0) * np.eye(2) - 1j * np.sin(angle / 2.0) * h
    return channel_from_unitary(u)


def depolarizing_channel(lam: float, dim: int = 2) -> Superoperator:
    """Depolarizing channel rho -> (1 - lam) I/d + lam rho, PTM diag(1, lam, ..., lam)."""
    lo = -1.0 / (dim * dim - 1.0)
    if not (lo <= lam <= 1.0):
        raise ValueError(
            f"depolarizing parameter {lam} outside [{lo}, 1]: the minimal Choi "
            "eigenvalue (1 - lam)/d - lam*(d - 1)/d or (1 + (d**2 - 1)*lam)/d "
            "would be negative"
        )
    diag = np.full(dim * dim, lam)
    diag[0] = 1.0
    return Superoperator(np.diag(diag))


def identity_channel(dim: int = 2) -> Superoperator:
    return Superoperator(np.eye(dim * dim))


def zero_channel(dim: int = 2) -> Superoperator:
    """The map rho -> 0."""
    return Superoperator(np.zeros((dim * dim, dim * dim)))


def compose(*channels: Superoperator) -> Superoperator:
    """Compose channels; compose(A, B) applies B first, then A."""
    if not channels:
        raise ValueError("compose() needs at least one channel")
    out = channels[0]
    for ch in channels[1:]:
        out = out @ ch
    return out


def born_probability(effect: Effect, channel: Superoperator, state: State) -> float:
    """Tr[E G(rho)] as a dot product in the Pauli basis."""
    if effect.coeffs.shape[0] != channel.ptm.shape[0] or state.coeffs.shape[0] != channel.ptm.shape[0]:
        raise ValueError("dimension mismatch in Born probability")
    return float(effect.coeffs @ (channel.ptm @ state.coeffs))


# --------------------------------------------------------------------------
# Choi matrix and positivity
# --------------------------------------------------------------------------


def _matrix_unit_action(s: Superoperator) -> np.ndarray:
    """Tensor T[a, b, i, k] = <a| S(B_ik) |b> of the map's action on matrix units."""
    d = s.dim
    basis = pauli_basis(d)
    # coefficient of B_ik in front of basis element j: Tr[P_j B_ik] = P_j[k, i]
    in_coeffs = basis.transpose(0, 2, 1)  # [j, i, k] = P_j[k, i]
    out_coeffs = np.einsum("aj,jik->aik", s.ptm, in_coeffs)
    return np.einsum("aik,apq->pqik", out_coeffs, basis)


def _choi_from_action(t: np.ndarray, d: int) -> np.ndarray:
    # chi[(i,a),(k,b)] = S(B_ik)[a,b] block layout over matrix units
    chi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for k in range(d):
            chi[i * d:(i + 1) * d, k * d:(k + 1) * d] = t[:, :, i, k]
    return chi


_PTM_TO_CHOI: np.ndarray | None = None


def _ptm_to_choi_matrix() -> np.ndarray:
    """Cached linear map from flattened 4x4 PTMs to flattened Choi matrices."""
    global _PTM_TO_CHOI
    if _PTM_TO_CHOI is None:
        columns = []
        for index in range(16):
            ptm = np.zeros((4, 4))
            ptm.flat[index] = 1.0
            t = _matrix_unit_action(Superoperator(ptm))
            columns.append(_choi_from_action(t, 2).reshape(-1))
        _PTM_TO_CHOI = np.array(columns).T
    return _PTM_TO_CHOI


def to_choi(s: Superoperator) -> ChoiMatrix:
    d = s.dim
    if d == 2:
        chi = (_ptm_to_choi_matrix() @ s.ptm.reshape(-1)).reshape(4, 4)
        return ChoiMatrix(chi)
    return ChoiMatrix(_choi_from_action(_matrix_unit_action(s), d))


def choi_eigenvalues(s: Superoperator) -> np.ndarray:
    """Eigenvalues of the Choi matrix, sorted ascending.

    Raises if the spectrum has non-negligible imaginary parts, which signals a
    map that is not Hermiticity preserving.
    """
    chi = to_choi(s).entries
    if np.max(np.abs(chi - chi.conj().T)) > EIGVAL_IMAG_TOL:
        ev = np.linalg.eigvals(chi)
        if np.max(np.abs(ev.imag)) > EIGVAL_IMAG_TOL:
            raise ValueError("Choi spectrum is complex: map is not Hermiticity preserving")
        return np.sort(ev.real)
    return np.linalg.eigvalsh(chi)


def is_cp(s: Superoperator, tol: float = STRUCTURAL_TOL) -> bool:
    """Complete positivity: all Choi eigenvalues >= -tol."""
    return bool(choi_eigenvalues(s)[0] >= -tol)


def is_tp(s: Superoperator, tol: float = STRUCTURAL_TOL) -> bool:
    """Trace preservation: first PTM row equals (1, 0, ..., 0) within tol."""
    row = s.ptm[0].copy()
    row[0] -= 1.0
    return bool(np.max(np.abs(row)) <= tol)


def is_unital(s: Superoperator, tol: float = STRUCTURAL_TOL) -> bool:
    col = s.ptm[:, 0].copy()
    col[0] -= 1.0
    return bool(np.max(np.abs(col)) <= tol)


def is_unitary_channel(s: Superoperator, tol: float = STRUCTURAL_TOL) -> bool:
    """Unitary channels have orthogonal PTMs."""
    gram = s.ptm.T @ s.ptm
    return bool(np.max(np.abs(gram - np.eye(gram.shape[0]))) <= tol)


# --------------------------------------------------------------------------
# Gate fidelity
# --------------------------------------------------------------------------


def agi(g_tilde: Superoperator, g: Superoperator) -> float:
    """Average gate infidelity of g_tilde to the target g.

    Computed as (d**2 - Tr(L)) / (d (d + 1)) with L = g_tilde g^{-1}, which
    equals one minus the Haar-averaged state fidelity for unitary targets.
    """
    d = g.dim
    try:
        g_inv = np.linalg.inv(g.ptm)
    except np.linalg.LinAlgError as exc:
        raise ValueError("target channel is singular") from exc
    trace = np.trace(g_tilde.ptm @ g_inv)
    return float((d * d - trace) / (d * (d + 1)))


def agi_haar_oracle(
    g_tilde: Superoperator,
    g: Superoperator,
    n_samples: int = 100_000,
    seed: int = 0,
    with_stderr: bool = False,
):
    """Monte Carlo estimate of 1 - int dpsi Tr(g_tilde[psi] g[psi]) over
    Haar-random pure states. Converges to agi() at rate O(1/sqrt(n_samples))
    for unitary targets.
    """
    if g.dim != 2 or g_tilde.dim != 2:
        raise NotImplementedError("Haar sampling is implemented for one qubit only")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    basis = pauli_basis(2)
    total = 0.0
    total_sq = 0.0
    remaining = n_samples
    while remaining > 0:
        n = min(remaining, 1 << 17)
        z = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        coeffs = np.einsum("ni,jik,nk->nj", z.conj(), basis, z).real
        fvals = np.einsum("nj,nj->n", coeffs @ g_tilde.ptm.T, coeffs @ g.ptm.T)
        total += float(fvals.sum())
        total_sq += float((fvals * fvals).sum())
        remaining -= n
    mean_f = total / n_samples
    estimate = 1.0 - mean_f
    if not with_stderr:
        return estimate
    var = max(total_sq / n_samples - mean_f * mean_f, 0.0)
    stderr = np.sqrt(var / n_samples)
    return estimate, stderr


# --------------------------------------------------------------------------
# Diamond norm distance
# --------------------------------------------------------------------------


def _joint_natural_rep(t: np.ndarray) -> np.ndarray:
    """16x16 column-stacking representation of Delta (x) Id on the doubled system.

    t is the matrix-unit action tensor of Delta (first tensor factor).
    """
    eye = np.eye(2)
    n8 = np.einsum("abik,jJ,lL->blajkLiJ", t, eye, eye)
    return n8.reshape(16, 16)


def _stabilized_trace_norms(n_mat: np.ndarray, psis: np.ndarray) -> np.ndarray:
    """||(Delta (x) Id)(|psi><psi|)||_1 for a batch of pure psi in C^4."""
    vecs = np.einsum("nc,nr->ncr", psis.conj(), psis).reshape(-1, 16)
    outs = (vecs @ n_mat.T).reshape(-1, 4, 4).transpose(0, 2, 1)
    outs = 0.5 * (outs + outs.conj().transpose(0, 2, 1))  # clean Hermitian round-off
    return np.abs(np.linalg.eigvalsh(outs)).sum(axis=1)


def _stabilized_trace_norm_single(n_mat: np.ndarray, psi: np.ndarray) -> float:
    v = np.outer(psi.conj(), psi).reshape(16)
    out = (n_mat @ v).reshape(4, 4).T
    out = 0.5 * (out + out.conj().T)
    return float(np.abs(np.linalg.eigvalsh(out)).sum())


_CANONICAL_STARTS = np.array(
    [
        [1, 0, 0, 1],  # Bell pairs probe the stabilized part of the norm
        [1, 0, 0, -1],
        [0, 1, 1, 0],
        [0, 1j, 1, 0],
        [1, 0, 0, 0],
        [1, 1, 1, 1],
    ],
    dtype=complex,
)


def diamond_distance(
    a: Superoperator,
    b: Superoperator,
    seed: int = 0,
    restarts: int = 20,
    screen_size: int = 2048,
    tol: float = 1e-6,
) -> float:
    """Diamond norm distance ||A - B||_diamond.

    Maximizes ||((A - B) (x) Id)(|psi><psi|)||_1 over pure states of the
    doubled system; for Hermiticity-preserving differences the supremum is
    attained on pure inputs. Deterministic given the seed; `restarts` local
    polishing runs are seeded from the best of `screen_size` random states.
    """
    if a.dim != 2 or b.dim != 2:
        raise NotImplementedError("diamond distance is implemented for one qubit only")
    delta = Superoperator(a.ptm - b.ptm)
    if np.max(np.abs(delta.ptm)) < 1e-15:
        return 0.0
    n_mat = _joint_natural_rep(_matrix_unit_action(delta))

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    pool = rng.standard_normal((screen_size, 4)) + 1j * rng.standard_normal((screen_size, 4))
    pool /= np.linalg.norm(pool, axis=1, keepdims=True)
    canon = _CANONICAL_STARTS / np.linalg.norm(_CANONICAL_STARTS, axis=1, keepdims=True)
    pool = np.concatenate([canon, pool])
    values = _stabilized_trace_norms(n_mat, pool)
    order = np.argsort(values)[::-1]
    starts = pool[order[: max(restarts, 1)]]

    def negative_objective(x: np.ndarray) -> float:
        z = x[:4] + 1j * x[4:]
        nrm = np.linalg.norm(z)
        if nrm < 1e-12:
            return 0.0
        return -_stabilized_trace_norm_single(n_mat, z / nrm)

    best = float(values[order[0]])
    for z0 in starts:
        x0 = np.concatenate([z0.real, z0.imag])
        res = optimize.minimize(
            negative_objective,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": tol * 1e-4, "maxiter": 4000, "maxfev": 6000},
        )
        best = max(best, -float(res.fun))
    return best
