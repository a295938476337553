"""Representation-independent theories of the RB decay.

Two decay predictors for a gateset:

* the exact one, from the spectrum of a 4|C| x 4|C| block matrix whose
  (k, j) block is the imperfect implementation of C_j^{-1} C_k divided by
  |C|; averaging over all sequences of length m reduces to its (m+1)-th
  power, and

* an approximate one, from a 16x16 map acting on channels,
  L(E) = avg_i[C_i^{-1} E C~_i], whose second-largest eigenvalue gamma sets
  the decay base. Its error is bounded by half the average diamond distance
  of the per-gate error maps to their mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .clifford import GateSet, average_error_map, error_maps
from .protocol import Spam
from .superop import diamond_distance, vec, unvec

__all__ = [
    "RMatrix",
    "SpectralDecay",
    "GammaResult",
    "DeltaBound",
    "build_r_matrix",
    "exact_decay",
    "build_l_map",
    "gamma_and_r_gamma",
    "predicted_decay",
    "delta_diamond",
    "brute_force_pm",
]

_EIG_COND_LIMIT = 1e8
_REALNESS_TOL = 1e-10


@dataclass(frozen=True)
class RMatrix:
    """Sequence-averaging block matrix; block (k, j) is the imperfect
    implementation of C_j^{-1} C_k, scaled by 1/|C|."""

    matrix: np.ndarray
    group_size: int

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)


@dataclass(frozen=True)
class SpectralDecay:
    """Eigenvalues and SPAM-dependent weights of a decay generator.

    For source "r_matrix" the prediction is sum_i weights_i * eig_i**(m+1);
    for source "l_map" it is sum_i weights_i * eig_i**m. Weights are None
    when the generator was numerically defective and the spectral form was
    abandoned for iterated multiplication.
    """

    eigenvalues: np.ndarray
    weights: np.ndarray | None
    source: str

    def predict(self, lengths) -> np.ndarray:
        if self.weights is None:
            raise ValueError("no spectral weights available (defective generator)")
        offset = 1 if self.source == "r_matrix" else 0
        values = np.array(
            [np.sum(self.weights * self.eigenvalues ** (m + offset)) for m in np.asarray(lengths)]
        )
        if np.max(np.abs(values.imag)) > _REALNESS_TOL:
            raise ValueError("spectral decay prediction has a non-real component")
        return values.real


@dataclass(frozen=True)
class GammaResult:
    gamma: float
    r_gamma: float
    subdominant_moduli: np.ndarray

    def kappa_bound_at(self, m: int) -> float:
        """Envelope of the non-dominant spectral remainder, sum of
        |gamma_i|**m over eigenvalues below gamma (weights not included)."""
        return float(np.sum(self.subdominant_moduli ** m))


@dataclass(frozen=True)
class DeltaBound:
    """delta_diamond = mean(per-gate diamond distances to the average error
    map) / 2; bounds the approximate theory's error at every length."""

    delta_diamond: float
    per_gate_distances: np.ndarray


def build_r_matrix(gateset: GateSet) -> RMatrix:
    group = gateset.ideal
    size = len(group)
    blocks = np.zeros((4 * size, 4 * size))
    for k in range(size):
        for j in range(size):
            # block (k, j) holds the imperfect version of the transition
            # element C_k C_j^{-1}; with this order the path products through
            # R^(m+1) telescope into exactly the self-inverting RB sequences
            idx = group.cayley[k, group.inverse[j]]
            blocks[4 * k:4 * k + 4, 4 * j:4 * j + 4] = gateset.imperfect[idx].ptm
    return RMatrix(matrix=blocks / size, group_size=size)


def _spam_vectors(spam: Spam, size: int) -> tuple[np.ndarray, np.ndarray]:
    rho = np.zeros(4 * size)
    eff = np.zeros(4 * size)
    rho[:4] = spam.state.coeffs
    eff[:4] = spam.effect.coeffs
    return eff, rho


def exact_decay(
    gateset: GateSet,
    spam: Spam | None = None,
    lengths=(1,),
) -> tuple[SpectralDecay, np.ndarray]:
    """Average survival probability over all sequences, for every length.

    Uses the eigendecomposition of the block matrix; if that basis is
    numerically defective (condition number above 1e8), falls back to
    iterated block multiplication and reports no weights.
    """
    spam = spam if spam is not None else Spam.ideal()
    lengths = np.asarray([int(m) for m in np.atleast_1d(lengths)])
    r = build_r_matrix(gateset)
    size = r.group_size
    eff, rho = _spam_vectors(spam, size)

    eigvals, eigvecs = np.linalg.eig(r.matrix)
    cond = np.linalg.cond(eigvecs)
    if cond < _EIG_COND_LIMIT:
        left = eff @ eigvecs
        right = np.linalg.solve(eigvecs, rho)
        weights = size * left * right
        decay = SpectralDecay(eigenvalues=eigvals, weights=weights, source="r_matrix")
        return decay, decay.predict(lengths)

    decay = SpectralDecay(eigenvalues=eigvals, weights=None, source="r_matrix")
    values = np.empty(len(lengths), dtype=float)
    order = np.argsort(lengths)
    vec_state = rho.copy()
    power = 0
    for pos in order:
        target = int(lengths[pos]) + 1
        while power < target:
            vec_state = r.matrix @ vec_state
            power += 1
        values[pos] = size * float(eff @ vec_state)
    return decay, values


def build_l_map(gateset: GateSet, primed: bool = False) -> np.ndarray:
    """16x16 matrix of E -> avg_i[C_i^{-1} E C~_i] on column-stacked PTMs
    (vec(A X B) = (B^T kron A) vec(X)); `primed` gives
    E -> avg_i[C~_i E C_i^{-1}], which has the same spectrum."""
    group = gateset.ideal
    out = np.zeros((16, 16))
    for i in range(len(group)):
        c_inv = group.elements[group.inverse[i]].ptm
        c_tilde = gateset.imperfect[i].ptm
        if primed:
            out += np.kron(c_inv.T, c_tilde)
        else:
            out += np.kron(c_tilde.T, c_inv)
    return out / len(group)


def gamma_and_r_gamma(l_matrix: np.ndarray, dim: int = 2) -> GammaResult:
    """Decay base gamma: the largest-modulus eigenvalue after the single
    unit eigenvalue, which must be real; r_gamma = (d-1)(1-gamma)/d.

    Degenerate unit eigenvalues or a complex gamma signal errors too large
    for the small-error theory and raise.
    """
    eigvals = np.linalg.eigvals(np.asarray(l_matrix))
    unit = np.abs(eigvals - 1.0) < 1e-9
    if unit.sum() != 1:
        raise ValueError(
            f"expected exactly one unit eigenvalue, found {int(unit.sum())}: "
            "the gateset is outside the small-error regime"
        )
    rest = eigvals[~unit]
    top = np.argmax(np.abs(rest))
    gamma = rest[top]
    if abs(gamma.imag) > 1e-9:
        raise ValueError(f"subdominant eigenvalue {gamma} is not real")
    if abs(gamma) > 1.0 + 1e-9:
        raise ValueError(f"subdominant eigenvalue {gamma} exceeds 1 in modulus")
    moduli = np.sort(np.abs(np.delete(rest, top)))[::-1]
    gamma_real = float(gamma.real)
    return GammaResult(
        gamma=gamma_real,
        r_gamma=(dim - 1) * (1.0 - gamma_real) / dim,
        subdominant_moduli=moduli,
    )


def predicted_decay(
    gateset: GateSet,
    spam: Spam | None = None,
    lengths=(1,),
) -> np.ndarray:
    """Approximate decay Tr(E Lbar [L^m(Id)](rho)) by iterated application
    of the 16x16 map to the vectorized identity channel."""
    spam = spam if spam is not None else Spam.ideal()
    lengths = np.asarray([int(m) for m in np.atleast_1d(lengths)])
    l_matrix = build_l_map(gateset)
    lbar = average_error_map(gateset).ptm
    eff, rho = spam.effect.coeffs, spam.state.coeffs

    values = np.empty(len(lengths), dtype=float)
    order = np.argsort(lengths)
    current = vec(np.eye(4))
    power = 0
    for pos in order:
        target = int(lengths[pos])
        while power < target:
            current = l_matrix @ current
            power += 1
        values[pos] = float(eff @ (lbar @ unvec(current) @ rho))
    return values


def l_spectral_decay(gateset: GateSet, spam: Spam | None = None) -> SpectralDecay:
    """Spectral form of the approximate decay (weights from the SPAM and the
    average error map); None weights when the map is defective."""
    spam = spam if spam is not None else Spam.ideal()
    l_matrix = build_l_map(gateset)
    lbar = average_error_map(gateset).ptm
    eigvals, eigvecs = np.linalg.eig(l_matrix)
    if np.linalg.cond(eigvecs) >= _EIG_COND_LIMIT:
        return SpectralDecay(eigenvalues=eigvals, weights=None, source="l_map")
    # w^T x = Tr(E Lbar unvec(x) rho) is linear in x
    dual = np.array([
        float(spam.effect.coeffs @ (lbar @ unvec(basis_vec) @ spam.state.coeffs))
        for basis_vec in np.eye(16)
    ])
    left = dual @ eigvecs
    right = np.linalg.solve(eigvecs, vec(np.eye(4)))
    return SpectralDecay(eigenvalues=eigvals, weights=left * right, source="l_map")


def delta_diamond(gateset: GateSet, seed: int = 0) -> DeltaBound:
    """Half the average diamond distance between each gate's error map and
    the average error map."""
    maps = error_maps(gateset)
    avg = average_error_map(gateset)
    distances = np.array(
        [diamond_distance(m, avg, seed=seed + i) for i, m in enumerate(maps)]
    )
    return DeltaBound(delta_diamond=float(distances.mean() / 2.0), per_gate_distances=distances)


def brute_force_pm(gateset: GateSet, spam: Spam | None = None, m: int = 1) -> float:
    """Ground truth for small m: enumerate all |C|**m sequences exactly."""
    spam = spam if spam is not None else Spam.ideal()
    if m > 3:
        raise ValueError("brute force enumeration is capped at m = 3")
    group = gateset.ideal
    size = len(group)
    ptms = gateset.imperfect_stack()

    sequences = np.array(list(product(range(size), repeat=m)), dtype=np.intp)
    products = sequences[:, 0].copy()
    for t in range(1, m):
        products = group.cayley[sequences[:, t], products]
    inversions = group.inverse[products]

    states = np.broadcast_to(spam.state.coeffs, (len(sequences), 4)).copy()
    for t in range(m):
        states = np.matmul(ptms[sequences[:, t]], states[:, :, None])[:, :, 0]
    states = np.matmul(ptms[inversions], states[:, :, None])[:, :, 0]
    return float(np.mean(states @ spam.effect.coeffs))
