"""Complex linear algebra primitives for one- and two-qubit systems.

Everything downstream manipulates only 2x2 and 4x4 complex matrices, so
the helpers here are specialized accordingly and stay dense.  Pure
states and rank-1 measurements are parameterized by Bloch angles
(polar alpha, azimuthal beta), which removes the global-phase degree of
freedom from every optimization built on top.

Conventions:
  * |psi> = cos(alpha/2)|0> + exp(i*beta) sin(alpha/2)|1>
  * alpha in [0, pi], beta normalized into [-pi, pi)
  * tensor(a, b) puts `a` on the outer blocks (first subsystem)

All values are immutable after construction and all operations are pure
functions, so they are safe to share across any number of workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HERMITIAN_TOL",
    "PSD_TOL",
    "UNITARY_TOL",
    "PROB_CLAMP_BAND",
    "I2",
    "I4",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "BlochAngles",
    "DensityOperator",
    "ProjectorPair",
    "state_from_bloch",
    "projector_pair_from_bloch",
    "born_probability",
    "tensor",
    "partial_trace",
    "hermitian_from_generator",
    "generator_from_hermitian",
    "unitary_from_generator",
    "bloch_vector_of_matrix",
]

# Structural tolerances: exact algebraic identities are checked at 1e-12,
# quantities that pass through an eigendecomposition at 1e-10.
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
UNITARY_TOL = 1e-10

# Born values inside [-PROB_CLAMP_BAND, 0) or (1, 1 + PROB_CLAMP_BAND] are
# treated as rounding noise and clamped; anything further out is a bug.
PROB_CLAMP_BAND = 1e-10

_GENERATOR_SIZE = 16
_OFFDIAG_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _readonly(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


I2 = _readonly(np.eye(2))
I4 = _readonly(np.eye(4))
PAULI_X = _readonly([[0.0, 1.0], [1.0, 0.0]])
PAULI_Y = _readonly([[0.0, -1.0j], [1.0j, 0.0]])
PAULI_Z = _readonly([[1.0, 0.0], [0.0, -1.0]])


def _check_square(matrix: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise ValueError(f"{name} must be a 2x2 or 4x4 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError(f"{name} contains non-finite entries")
    return m


@dataclass(frozen=True)
class BlochAngles:
    """Polar/azimuthal pair locating a pure state or measurement axis.

    alpha is validated into [0, pi]; beta is wrapped into [-pi, pi).
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        b = float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("Bloch angles must be finite")
        if a < -1e-12 or a > math.pi + 1e-12:
            raise ValueError(f"polar angle {a} outside [0, pi]")
        a = min(max(a, 0.0), math.pi)
        b = math.remainder(b, math.tau)
        if b >= math.pi:  # remainder lands in [-pi, pi]; fold the top edge
            b -= math.tau
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    def antipode(self) -> "BlochAngles":
        """Angles of the opposite point on the sphere."""
        return BlochAngles(math.pi - self.alpha, self.beta + math.pi)

    def unit_vector(self) -> np.ndarray:
        """Cartesian Bloch vector (x, y, z) of unit length."""
        sa = math.sin(self.alpha)
        return np.array(
            [sa * math.cos(self.beta), sa * math.sin(self.beta), math.cos(self.alpha)]
        )

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "BlochAngles":
        """Canonical angles of a nonzero Cartesian direction."""
        v = np.asarray(vec, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise ValueError("direction must be a finite 3-vector")
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise ValueError("cannot orient a zero direction")
        x, y, z = (v / norm).tolist()
        alpha = math.acos(min(max(z, -1.0), 1.0))
        beta = math.atan2(y, x)
        return cls(alpha, beta)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive-semidefinite 2x2 or 4x4 matrix."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _check_square(self.matrix, "density matrix")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > 1e-12 or abs(np.trace(m).imag) > 1e-12:
            raise ValueError("density matrix trace differs from 1 beyond 1e-12")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def bloch_vector(self) -> np.ndarray:
        """Cartesian Bloch vector; qubit states only."""
        if self.dim != 2:
            raise ValueError("Bloch vector is defined for qubit states only")
        return bloch_vector_of_matrix(self.matrix)


@dataclass(frozen=True, eq=False)
class ProjectorPair:
    """Two rank-1 qubit projectors resolving the identity.

    p0 corresponds to outcome 0, p1 to outcome 1.
    """

    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self) -> None:
        p0 = _check_square(self.p0, "projector p0")
        p1 = _check_square(self.p1, "projector p1")
        if p0.shape != (2, 2) or p1.shape != (2, 2):
            raise ValueError("projector pairs are qubit-sized")
        if np.max(np.abs(p0 + p1 - I2)) > 1e-12:
            raise ValueError("projectors do not sum to identity within 1e-12")
        for name, p in (("p0", p0), ("p1", p1)):
            if np.max(np.abs(p @ p - p)) > 1e-12:
                raise ValueError(f"{name} is not idempotent within 1e-12")
            if abs(np.trace(p).real - 1.0) > 1e-9:
                raise ValueError(f"{name} is not rank-1 (trace != 1)")
        object.__setattr__(self, "p0", _readonly(p0))
        object.__setattr__(self, "p1", _readonly(p1))

    def effect(self, outcome: int) -> np.ndarray:
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome}")
        return self.p0 if outcome == 0 else self.p1

    def axis(self) -> np.ndarray:
        """Bloch direction of the outcome-0 projector."""
        return bloch_vector_of_matrix(self.p0)


def bloch_vector_of_matrix(matrix: np.ndarray) -> np.ndarray:
    """Bloch components (tr(m X), tr(m Y), tr(m Z)) of a 2x2 Hermitian matrix."""
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("Bloch components are defined for 2x2 matrices only")
    return np.array(
        [
            2.0 * m[0, 1].real,
            -2.0 * m[0, 1].imag,
            (m[0, 0] - m[1, 1]).real,
        ]
    )


def state_from_bloch(angles: BlochAngles) -> DensityOperator:
    """Rank-1 density operator |psi><psi| at the given Bloch angles.

    The amplitudes are <0|psi> = cos(alpha/2), <1|psi> = exp(i*beta) sin(alpha/2).
    """
    half = 0.5 * angles.alpha
    psi = np.array([math.cos(half), math.sin(half) * complex(math.cos(angles.beta), math.sin(angles.beta))])
    return DensityOperator(np.outer(psi, psi.conj()))


def projector_pair_from_bloch(angles: BlochAngles) -> ProjectorPair:
    """Projector pair along a Bloch axis: p0 at `angles`, p1 at its antipode."""
    p0 = state_from_bloch(angles).matrix
    return ProjectorPair(p0, np.eye(2) - p0)


def born_probability(effect: np.ndarray, state: DensityOperator | np.ndarray) -> float:
    """Outcome probability tr(effect @ state), clamped against rounding noise.

    Values in [-1e-10, 0) and (1, 1 + 1e-10] are clamped to the nearest
    endpoint; values further outside [0, 1] raise, since they indicate a
    malformed effect or state rather than floating-point jitter.
    """
    e = np.asarray(effect, dtype=complex)
    s = state.matrix if isinstance(state, DensityOperator) else np.asarray(state, dtype=complex)
    if e.shape != s.shape or e.ndim != 2:
        raise ValueError(f"dimension mismatch: effect {e.shape} vs state {s.shape}")
    value = float(np.trace(e @ s).real)
    if value < -PROB_CLAMP_BAND or value > 1.0 + PROB_CLAMP_BAND:
        raise ValueError(f"Born value {value} is outside [0, 1] beyond rounding tolerance")
    return min(max(value, 0.0), 1.0)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two 2x2 matrices, `a` indexing the outer blocks."""
    am = np.asarray(a, dtype=complex)
    bm = np.asarray(b, dtype=complex)
    if am.shape != (2, 2) or bm.shape != (2, 2):
        raise ValueError("tensor is defined for pairs of 2x2 matrices")
    return np.kron(am, bm)


def partial_trace(matrix: np.ndarray, keep: str) -> np.ndarray:
    """Trace out one qubit of a 4x4 matrix.

    Parameters
    ----------
    matrix : (4, 4) complex array
    keep : "first" or "second", the subsystem left over

    The full trace is preserved.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"partial trace expects a 4x4 matrix, got shape {m.shape}")
    t = m.reshape(2, 2, 2, 2)
    if keep == "first":
        return np.einsum("ijkj->ik", t)
    if keep == "second":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'first' or 'second', got {keep!r}")


def hermitian_from_generator(params: np.ndarray) -> np.ndarray:
    """Assemble a 4x4 Hermitian matrix from 16 real parameters.

    Layout: 4 diagonal entries, then the 6 real and 6 imaginary parts of
    the upper triangle in row-major pair order.
    """
    p = np.asarray(params, dtype=float)
    if p.shape != (_GENERATOR_SIZE,):
        raise ValueError(f"generator takes exactly 16 real parameters, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("generator parameters must be finite")
    h = np.zeros((4, 4), dtype=complex)
    h[np.arange(4), np.arange(4)] = p[:4]
    for k, (i, j) in enumerate(_OFFDIAG_PAIRS):
        h[i, j] = complex(p[4 + k], p[10 + k])
        h[j, i] = h[i, j].conjugate()
    return h


def generator_from_hermitian(h: np.ndarray) -> np.ndarray:
    """Inverse of hermitian_from_generator; the input must be Hermitian."""
    m = _check_square(h, "generator matrix")
    if m.shape != (4, 4):
        raise ValueError("generator matrices are 4x4")
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian within 1e-12")
    p = np.empty(_GENERATOR_SIZE)
    p[:4] = np.diag(m).real
    for k, (i, j) in enumerate(_OFFDIAG_PAIRS):
        p[4 + k] = m[i, j].real
        p[10 + k] = m[i, j].imag
    return p


def unitary_from_generator(params: np.ndarray) -> np.ndarray:
    """Two-qubit unitary exp(i H) for the Hermitian H encoded by `params`.

    Computed by spectral decomposition of H, which keeps U unitary to
    eigensolver precision (checked at 1e-10 by callers that store it).
    """
    h = hermitian_from_generator(params)
    eigvals, eigvecs = np.linalg.eigh(h)
    return (eigvecs * np.exp(1j * eigvals)) @ eigvecs.conj().T
