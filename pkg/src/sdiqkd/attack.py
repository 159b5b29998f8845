"""Eavesdropping channels and post-selected statistics.

Two attack classes are modeled.  Intercept/resend (IR): the
eavesdropper measures the flying qubit with a basis chosen by her own
guess e of the receiver's index, forwards the projector of her
outcome, and blinds the detector so it always clicks when e matches
the announced index b and clicks with probability eta otherwise.
Delayed measurement (DM): she instead entangles the flying qubit with
a memory qubit through a two-qubit unitary, forwards the first
subsystem, and measures her memory only after b is public.

Success probabilities are always post-selected on a detector click.
With clicks certain on matched indices and of probability eta
otherwise, cell (e, b) carries weight 1 if e == b and eta if not,
normalized by n*(1 + (n-1)*eta); the observed average efficiency is
(1 + (n-1)*eta)/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .protocol import EncodingParams, build_states, input_tuples, n_bits
from .qmath import (
    DensityOperator,
    ProjectorPair,
    born_probability,
    partial_trace,
    state_from_bloch,
    tensor,
    BlochAngles,
    I2,
    PAULI_X,
    UNITARY_TOL,
)

__all__ = [
    "EfficiencyModel",
    "IrAttack",
    "DmAttack",
    "ObservedStats",
    "eta_avg",
    "postselection_weights",
    "ir_conditional_eve",
    "ir_conditional_bob",
    "postselected_stats_ir",
    "dm_joint_state",
    "postselected_stats_dm",
    "dm_from_ir",
    "security_margin",
]


@dataclass(frozen=True)
class EfficiencyModel:
    """Detector-click model under blinding.

    eta is the click probability when the eavesdropper's guess misses
    the announced index; clicks on matched indices are certain, which
    is the blinding optimum, so eta_eb is pinned to 1.
    """

    n: int
    eta: float
    eta_eb: float = 1.0

    def __post_init__(self) -> None:
        if self.n not in (2, 3):
            raise ValueError(f"n must be 2 or 3, got {self.n}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta {self.eta} outside [0, 1]")
        if self.eta_eb != 1.0:
            raise ValueError("matched-index click probability is fixed to 1")


def eta_avg(model: EfficiencyModel) -> float:
    """Average detection efficiency the honest parties observe."""
    return (1.0 + (model.n - 1) * model.eta) / model.n


def postselection_weights(n: int, eta: float) -> np.ndarray:
    """Normalized post-selection weight of each (e, b) cell; sums to 1."""
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta {eta} outside [0, 1]")
    w = np.full((n, n), eta)
    np.fill_diagonal(w, 1.0)
    return w / (n * (1.0 + (n - 1) * eta))


@dataclass(frozen=True)
class ObservedStats:
    """Post-selected success probabilities and the observed efficiency."""

    p_b: float
    p_e: float
    eta_avg: float

    def __post_init__(self) -> None:
        for name in ("p_b", "p_e", "eta_avg"):
            value = float(getattr(self, name))
            if not -1e-12 <= value <= 1.0 + 1e-12:
                raise ValueError(f"{name} = {value} outside [0, 1]")
            object.__setattr__(self, name, min(max(value, 0.0), 1.0))


@dataclass(frozen=True, eq=False)
class IrAttack:
    """Intercept/resend strategy.

    eve_measurements[e] is the basis used on interception;
    bob_measurements[e][b] is what the tampered receiver measures, which
    may depend on e because the eavesdropper controls the device.
    """

    eve_measurements: tuple[ProjectorPair, ...]
    bob_measurements: tuple[tuple[ProjectorPair, ...], ...]
    encoding: EncodingParams

    def __post_init__(self) -> None:
        n = n_bits(self.encoding)
        eve = tuple(self.eve_measurements)
        bob = tuple(tuple(row) for row in self.bob_measurements)
        if len(eve) != n:
            raise ValueError(f"expected {n} interception bases, got {len(eve)}")
        if len(bob) != n or any(len(row) != n for row in bob):
            raise ValueError(f"receiver measurements must form an {n}x{n} grid")
        object.__setattr__(self, "eve_measurements", eve)
        object.__setattr__(self, "bob_measurements", bob)

    @property
    def n(self) -> int:
        return len(self.eve_measurements)


@dataclass(frozen=True, eq=False)
class DmAttack:
    """Delayed-measurement strategy.

    unitaries[e] acts on (flying qubit, memory qubit); the flying qubit
    is the first tensor factor and is forwarded to the receiver.
    eve_measurements[e][b] acts on the memory qubit alone, after b is
    announced.
    """

    unitaries: tuple[np.ndarray, ...]
    eve_measurements: tuple[tuple[ProjectorPair, ...], ...]
    bob_measurements: tuple[tuple[ProjectorPair, ...], ...]
    blank: DensityOperator
    encoding: EncodingParams

    def __post_init__(self) -> None:
        n = n_bits(self.encoding)
        unitaries = []
        for u in self.unitaries:
            m = np.asarray(u, dtype=complex)
            if m.shape != (4, 4):
                raise ValueError("attack unitaries act on two qubits")
            if np.max(np.abs(m.conj().T @ m - np.eye(4))) > UNITARY_TOL:
                raise ValueError("attack unitary fails U^dag U = I within 1e-10")
            m = m.copy()
            m.setflags(write=False)
            unitaries.append(m)
        if len(unitaries) != n:
            raise ValueError(f"expected {n} unitaries, got {len(unitaries)}")
        eve = tuple(tuple(row) for row in self.eve_measurements)
        bob = tuple(tuple(row) for row in self.bob_measurements)
        for name, grid in (("eve", eve), ("bob", bob)):
            if len(grid) != n or any(len(row) != n for row in grid):
                raise ValueError(f"{name} measurements must form an {n}x{n} grid")
        if self.blank.dim != 2:
            raise ValueError("memory blank must be a qubit state")
        object.__setattr__(self, "unitaries", tuple(unitaries))
        object.__setattr__(self, "eve_measurements", eve)
        object.__setattr__(self, "bob_measurements", bob)

    @property
    def n(self) -> int:
        return len(self.unitaries)


def ir_conditional_eve(attack: IrAttack, e: int, b: int) -> float:
    """Probability the intercept outcome equals bit b, inputs uniform."""
    states = build_states(attack.encoding)
    pair = attack.eve_measurements[e]
    terms = [born_probability(pair.effect(x[b]), rho) for x, rho in sorted(states.items())]
    return math.fsum(terms) / len(terms)


def ir_conditional_bob(attack: IrAttack, e: int, b: int) -> float:
    """Probability the receiver's outcome equals bit b in cell (e, b).

    The intercept outcome j occurs with its Born probability and the
    receiver then measures the forwarded projector state itself.
    """
    states = build_states(attack.encoding)
    eve_pair = attack.eve_measurements[e]
    bob_pair = attack.bob_measurements[e][b]
    terms = []
    for x, rho in sorted(states.items()):
        for j in (0, 1):
            resent = eve_pair.effect(j)  # rank-1, unit trace: a valid state
            terms.append(
                born_probability(eve_pair.effect(j), rho)
                * born_probability(bob_pair.effect(x[b]), resent)
            )
    return math.fsum(terms) / len(states)


def postselected_stats_ir(attack: IrAttack, model: EfficiencyModel) -> ObservedStats:
    """Click-conditioned success probabilities of an intercept/resend attack."""
    if attack.n != model.n:
        raise ValueError(f"attack is {attack.n}-bit but efficiency model is {model.n}-bit")
    weights = postselection_weights(model.n, model.eta)
    p_e = math.fsum(
        weights[e, b] * ir_conditional_eve(attack, e, b)
        for e in range(model.n)
        for b in range(model.n)
    )
    p_b = math.fsum(
        weights[e, b] * ir_conditional_bob(attack, e, b)
        for e in range(model.n)
        for b in range(model.n)
    )
    return ObservedStats(p_b=p_b, p_e=p_e, eta_avg=eta_avg(model))


def dm_joint_state(attack: DmAttack, x: tuple[int, ...], e: int) -> DensityOperator:
    """Two-qubit state U_e (rho_x (x) blank) U_e^dag before any measurement."""
    states = build_states(attack.encoding)
    u = attack.unitaries[e]
    joint = u @ tensor(states[x].matrix, attack.blank.matrix) @ u.conj().T
    return DensityOperator(0.5 * (joint + joint.conj().T))


def _dm_conditional_bob(attack: DmAttack, e: int, b: int) -> float:
    states = build_states(attack.encoding)
    pair = attack.bob_measurements[e][b]
    terms = []
    for x in sorted(states):
        reduced = partial_trace(dm_joint_state(attack, x, e).matrix, keep="first")
        terms.append(born_probability(pair.effect(x[b]), reduced))
    return math.fsum(terms) / len(states)


def _dm_conditional_eve(attack: DmAttack, e: int, b: int) -> float:
    states = build_states(attack.encoding)
    pair = attack.eve_measurements[e][b]
    terms = []
    for x in sorted(states):
        joint = dm_joint_state(attack, x, e)
        effect = tensor(I2, pair.effect(x[b]))  # memory qubit is the second factor
        terms.append(born_probability(effect, joint))
    return math.fsum(terms) / len(states)


def postselected_stats_dm(attack: DmAttack, model: EfficiencyModel) -> ObservedStats:
    """Click-conditioned success probabilities of a delayed-measurement attack.

    The receiver's statistics come from his reduced state; the
    eavesdropper's come from measuring her memory qubit alone.  Both are
    folded through the same cell weights as the intercept/resend case.
    """
    if attack.n != model.n:
        raise ValueError(f"attack is {attack.n}-bit but efficiency model is {model.n}-bit")
    weights = postselection_weights(model.n, model.eta)
    p_e = math.fsum(
        weights[e, b] * _dm_conditional_eve(attack, e, b)
        for e in range(model.n)
        for b in range(model.n)
    )
    p_b = math.fsum(
        weights[e, b] * _dm_conditional_bob(attack, e, b)
        for e in range(model.n)
        for b in range(model.n)
    )
    return ObservedStats(p_b=p_b, p_e=p_e, eta_avg=eta_avg(model))


def dm_from_ir(attack: IrAttack) -> DmAttack:
    """Delayed-measurement attack reproducing an intercept/resend attack.

    The unitary copies the interception outcome into the memory qubit
    through a controlled flip in the interception eigenbasis; reading
    the memory in the computational basis then yields exactly the
    intercept statistics, and the receiver's reduced state equals the
    resent mixture.
    """
    n = attack.n
    z_pair = ProjectorPair(np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))
    unitaries = []
    for e in range(n):
        pair = attack.eve_measurements[e]
        unitaries.append(np.kron(pair.p0, I2) + np.kron(pair.p1, PAULI_X))
    eve_grid = tuple(tuple(z_pair for _ in range(n)) for _ in range(n))
    return DmAttack(
        unitaries=tuple(unitaries),
        eve_measurements=eve_grid,
        bob_measurements=attack.bob_measurements,
        blank=state_from_bloch(BlochAngles(0.0, 0.0)),
        encoding=attack.encoding,
    )


def security_margin(stats: ObservedStats) -> float:
    """P_B - P_E; a key is extractable only when this is positive."""
    return stats.p_b - stats.p_e
