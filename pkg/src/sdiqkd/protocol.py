"""Random-access-code protocols: encodings, honest receivers, and bounds.

A 2->1 or 3->1 code sends n bits through a single qubit.  The sender
encodes the input tuple as a pure state, the receiver is handed an
index b and measures a two-outcome projector pair to guess bit b.  This
module defines the reference encodings, the honest receiver
measurements, the average success probability, the quantum and
classical ceilings on it, and the key-rate function used to turn an
observed success probability into bits per sifted round.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Union

import numpy as np

from .qmath import (
    BlochAngles,
    DensityOperator,
    ProjectorPair,
    born_probability,
    projector_pair_from_bloch,
    state_from_bloch,
)

__all__ = [
    "TETRA_ALPHA",
    "TETRA_BETA",
    "Fixed2to1",
    "Fixed3to1",
    "Tampered3to1Symmetric",
    "GeneralEncoding",
    "EncodingParams",
    "RacProtocol",
    "n_bits",
    "input_tuples",
    "build_states",
    "honest_bob_measurements",
    "honest_protocol",
    "per_bit_success",
    "success_probability",
    "quantum_max",
    "classical_max",
    "key_rate",
]

# Polar/azimuthal angles of the tetrahedral 3->1 encoding.
TETRA_ALPHA = math.acos(1.0 / 3.0)
TETRA_BETA = 2.0 * math.pi / 3.0


@dataclass(frozen=True)
class Fixed2to1:
    """The reference 2->1 encoding: poles of Z plus the two X-axis states."""


@dataclass(frozen=True)
class Fixed3to1:
    """The reference 3->1 encoding: a tetrahedron and its antipodes."""


@dataclass(frozen=True)
class Tampered3to1Symmetric:
    """3->1 encoding family with one polar and one azimuthal knob.

    Inputs 001, 010, 100 sit at polar angle alpha with azimuths
    0, beta, -beta; input 000 stays at the pole; the four remaining
    inputs are the antipodes of their bitwise complements.  The
    reference tetrahedron is recovered at alpha=acos(1/3), beta=2*pi/3.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        angles = BlochAngles(self.alpha, self.beta)  # validates and wraps
        object.__setattr__(self, "alpha", angles.alpha)
        object.__setattr__(self, "beta", angles.beta)


@dataclass(frozen=True)
class GeneralEncoding:
    """Arbitrary pure-state encoding: one Bloch pair per input, no constraint."""

    angles: tuple[BlochAngles, ...]

    def __post_init__(self) -> None:
        angles = tuple(self.angles)
        if len(angles) not in (4, 8):
            raise ValueError(f"encoding needs 4 or 8 states, got {len(angles)}")
        if not all(isinstance(a, BlochAngles) for a in angles):
            raise ValueError("encoding entries must be BlochAngles")
        object.__setattr__(self, "angles", angles)


EncodingParams = Union[Fixed2to1, Fixed3to1, Tampered3to1Symmetric, GeneralEncoding]


def n_bits(params: EncodingParams) -> int:
    """Number of encoded bits for an encoding description."""
    if isinstance(params, Fixed2to1):
        return 2
    if isinstance(params, (Fixed3to1, Tampered3to1Symmetric)):
        return 3
    if isinstance(params, GeneralEncoding):
        return 2 if len(params.angles) == 4 else 3
    raise TypeError(f"not an encoding description: {params!r}")


def input_tuples(n: int) -> tuple[tuple[int, ...], ...]:
    """All n-bit inputs in lexicographic order."""
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    return tuple(itertools.product((0, 1), repeat=n))


def _complement(x: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(1 - bit for bit in x)


def _tampered_angles(alpha: float, beta: float) -> dict[tuple[int, ...], BlochAngles]:
    base = {
        (0, 0, 0): BlochAngles(0.0, 0.0),
        (0, 0, 1): BlochAngles(alpha, 0.0),
        (0, 1, 0): BlochAngles(alpha, beta),
        (1, 0, 0): BlochAngles(alpha, -beta),
    }
    for x in list(base):
        base[_complement(x)] = base[x].antipode()
    return base


def build_states(params: EncodingParams) -> Mapping[tuple[int, ...], DensityOperator]:
    """Density operator for every input tuple of the encoding."""
    if isinstance(params, Fixed2to1):
        angles = {
            (0, 0): BlochAngles(0.0, 0.0),
            (0, 1): BlochAngles(math.pi / 2.0, 0.0),
            (1, 0): BlochAngles(math.pi / 2.0, math.pi),
            (1, 1): BlochAngles(math.pi, 0.0),
        }
    elif isinstance(params, Fixed3to1):
        angles = _tampered_angles(TETRA_ALPHA, TETRA_BETA)
    elif isinstance(params, Tampered3to1Symmetric):
        angles = _tampered_angles(params.alpha, params.beta)
    elif isinstance(params, GeneralEncoding):
        angles = dict(zip(input_tuples(n_bits(params)), params.angles))
    else:
        raise TypeError(f"not an encoding description: {params!r}")
    return MappingProxyType({x: state_from_bloch(a) for x, a in angles.items()})


def honest_bob_measurements(n: int) -> tuple[ProjectorPair, ...]:
    """Receiver measurements matched to the fixed n-bit encoding.

    For each bit index b the measurement axis is the normalized mean of
    (-1)^(bit b of x) times the Bloch vector of the encoded state, which
    attains the quantum ceiling on the fixed encodings.
    """
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    states = build_states(Fixed2to1() if n == 2 else Fixed3to1())
    pairs = []
    for b in range(n):
        direction = np.zeros(3)
        for x, rho in states.items():
            direction += (1.0 if x[b] == 0 else -1.0) * rho.bloch_vector()
        pairs.append(projector_pair_from_bloch(BlochAngles.from_vector(direction)))
    return tuple(pairs)


@dataclass(frozen=True, eq=False)
class RacProtocol:
    """A complete protocol instance: encoder map plus receiver measurements."""

    n: int
    encoder: Mapping[tuple[int, ...], DensityOperator]
    bob_measurements: tuple[ProjectorPair, ...]

    def __post_init__(self) -> None:
        if self.n not in (2, 3):
            raise ValueError(f"n must be 2 or 3, got {self.n}")
        expected = set(input_tuples(self.n))
        if set(self.encoder) != expected:
            raise ValueError("encoder must cover every input tuple exactly once")
        if not all(isinstance(s, DensityOperator) and s.dim == 2 for s in self.encoder.values()):
            raise ValueError("encoder outputs must be qubit density operators")
        measurements = tuple(self.bob_measurements)
        if len(measurements) != self.n:
            raise ValueError(f"expected {self.n} receiver measurements, got {len(measurements)}")
        object.__setattr__(self, "encoder", MappingProxyType(dict(self.encoder)))
        object.__setattr__(self, "bob_measurements", measurements)


def honest_protocol(params: EncodingParams) -> RacProtocol:
    """Protocol with the given encoding and the honest receiver measurements."""
    n = n_bits(params)
    return RacProtocol(n, build_states(params), honest_bob_measurements(n))


def per_bit_success(proto: RacProtocol) -> tuple[float, ...]:
    """Success probability of each bit index separately, inputs uniform."""
    out = []
    for b, pair in enumerate(proto.bob_measurements):
        terms = [
            born_probability(pair.effect(x[b]), rho) for x, rho in sorted(proto.encoder.items())
        ]
        out.append(math.fsum(terms) / len(terms))
    return tuple(out)


def success_probability(proto: RacProtocol) -> float:
    """Average probability of guessing the queried bit, uniform over inputs and b."""
    return math.fsum(per_bit_success(proto)) / proto.n


def quantum_max(n: int) -> float:
    """Largest success probability any qubit strategy reaches."""
    if n == 2:
        return (2.0 + math.sqrt(2.0)) / 4.0
    if n == 3:
        return (3.0 + math.sqrt(3.0)) / 6.0
    raise ValueError(f"n must be 2 or 3, got {n}")


def classical_max(n: int) -> float:
    """Largest success probability of one classical bit of communication.

    3/4 for both n; the exhaustive strategy enumeration backing the
    constant lives in the test suite, not on the runtime path.
    """
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    return 0.75


def key_rate(p: float) -> float:
    """Bits per sifted round, 1 - H(p) with H the binary entropy.

    H(0) = H(1) = 0 by continuity.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 1.0
    entropy = -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))
    return 1.0 - entropy
