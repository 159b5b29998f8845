"""Round-by-round Monte Carlo simulation of the protocol under attack.

Each round samples the input bits and the receiver's index uniformly,
plays out the chosen channel (honest, intercept/resend, or delayed
measurement), applies the detector-click rule, and discards outcomes of
rounds without a click.  The empirical post-selected statistics serve
as an independent check on the closed-form and optimizer paths.

Randomness is counter-based: rounds are processed in fixed-size chunks
and every chunk draws its uniforms from a generator keyed by the root
seed and the chunk index, with one fixed row of draws per round.
Reports are therefore bit-for-bit reproducible for a fixed seed, no
matter how the chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._seeds import generator_for
from .attack import (
    DmAttack,
    EfficiencyModel,
    IrAttack,
    ObservedStats,
    dm_joint_state,
    postselected_stats_dm,
    postselected_stats_ir,
)
from .protocol import RacProtocol, build_states, input_tuples, success_probability
from .qmath import born_probability, partial_trace, tensor, I2

__all__ = [
    "SimConfig",
    "StandardErrors",
    "SimReport",
    "ChiSquareResult",
    "run",
    "predicted_stats",
    "chi_square_consistency",
]

_CHUNK = 1 << 15
_DRAWS_PER_ROUND = 8  # fixed layout: x bits (3), b, e, adversary outcome, click, receiver outcome


@dataclass(frozen=True)
class SimConfig:
    """One simulation: protocol, optional attack, round count, seed, efficiency.

    eta is the detector efficiency itself in honest runs and the
    click probability on mismatched indices under attack.
    """

    protocol: RacProtocol
    attack: IrAttack | DmAttack | None
    rounds: int
    seed: int
    eta: float

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta {self.eta} outside [0, 1]")
        if self.attack is not None and self.attack.n != self.protocol.n:
            raise ValueError("attack and protocol disagree on the number of bits")


@dataclass(frozen=True)
class StandardErrors:
    """Binomial standard errors of the empirical statistics."""

    p_b: float
    p_e: float
    eta_avg: float


@dataclass(frozen=True)
class SimReport:
    """Aggregated outcome of a simulation.

    matched_setting_fraction is the post-selected frequency of rounds
    where the adversary's index guess equals the announced index; it is
    None for honest runs, which have no adversary index.
    """

    emitted_rounds: int
    clicked_rounds: int
    empirical: ObservedStats
    standard_errors: StandardErrors
    sifted_key_agreement: float
    eve_key_agreement: float
    matched_setting_fraction: float | None


@dataclass(frozen=True)
class ChiSquareResult:
    """Goodness-of-fit verdict: each statistic within 4 standard errors."""

    statistic: float
    passed: bool
    z_scores: dict[str, float]


def _state_order(protocol: RacProtocol) -> list[tuple[int, ...]]:
    return list(input_tuples(protocol.n))


def _honest_tables(config: SimConfig) -> np.ndarray:
    """p(receiver outcome 1) indexed by (input, b)."""
    proto = config.protocol
    table = np.empty((2**proto.n, proto.n))
    for xi, x in enumerate(_state_order(proto)):
        for b, pair in enumerate(proto.bob_measurements):
            table[xi, b] = born_probability(pair.effect(1), proto.encoder[x])
    return table


def _ir_tables(attack: IrAttack) -> tuple[np.ndarray, np.ndarray]:
    """p(intercept outcome 1) by (input, e); p(receiver outcome 1) by (e, E, b)."""
    states = build_states(attack.encoding)
    n = attack.n
    xs = list(input_tuples(n))
    eve1 = np.empty((len(xs), n))
    for xi, x in enumerate(xs):
        for e in range(n):
            eve1[xi, e] = born_probability(attack.eve_measurements[e].effect(1), states[x])
    bob1 = np.empty((n, 2, n))
    for e in range(n):
        for outcome in (0, 1):
            resent = attack.eve_measurements[e].effect(outcome)
            for b in range(n):
                bob1[e, outcome, b] = born_probability(
                    attack.bob_measurements[e][b].effect(1), resent
                )
    return eve1, bob1


def _dm_tables(attack: DmAttack) -> tuple[np.ndarray, np.ndarray]:
    """p(receiver outcome 1) by (input, e, b); p(memory outcome 1 | receiver
    outcome) by (input, e, b, receiver outcome)."""
    n = attack.n
    xs = list(input_tuples(n))
    bob1 = np.empty((len(xs), n, n))
    eve1_given = np.full((len(xs), n, n, 2), 0.5)
    for xi, x in enumerate(xs):
        for e in range(n):
            joint = dm_joint_state(attack, x, e)
            reduced = partial_trace(joint.matrix, keep="first")
            for b in range(n):
                bob_pair = attack.bob_measurements[e][b]
                eve_pair = attack.eve_measurements[e][b]
                bob1[xi, e, b] = born_probability(bob_pair.effect(1), reduced)
                for i in (0, 1):
                    # Joint Born rule for commuting effects on the two factors.
                    p_joint1 = born_probability(
                        tensor(bob_pair.effect(i), eve_pair.effect(1)), joint
                    )
                    p_marginal = born_probability(tensor(bob_pair.effect(i), I2), joint)
                    if p_marginal > 1e-15:
                        eve1_given[xi, e, b, i] = p_joint1 / p_marginal
    return bob1, eve1_given


def predicted_stats(config: SimConfig) -> ObservedStats:
    """Closed-form statistics the simulation should reproduce.

    Honest runs predict the protocol success for the receiver, 1/2 for
    the blind adversary column, and eta itself for the efficiency.
    """
    if config.attack is None:
        return ObservedStats(
            p_b=success_probability(config.protocol), p_e=0.5, eta_avg=config.eta
        )
    model = EfficiencyModel(n=config.protocol.n, eta=config.eta)
    if isinstance(config.attack, IrAttack):
        return postselected_stats_ir(config.attack, model)
    return postselected_stats_dm(config.attack, model)


def run(config: SimConfig) -> SimReport:
    """Simulate every round and aggregate the post-selected statistics."""
    n = config.protocol.n
    mode = "honest" if config.attack is None else ("ir" if isinstance(config.attack, IrAttack) else "dm")
    if mode == "honest":
        honest1 = _honest_tables(config)
    elif mode == "ir":
        eve1, ir_bob1 = _ir_tables(config.attack)
    else:
        dm_bob1, dm_eve1_given = _dm_tables(config.attack)

    clicked = 0
    hits_bob = 0
    hits_eve = 0
    matched = 0

    n_chunks = (config.rounds + _CHUNK - 1) // _CHUNK
    for chunk in range(n_chunks):
        start = chunk * _CHUNK
        rows = min(_CHUNK, config.rounds - start)
        u = generator_for(config.seed, chunk).random((rows, _DRAWS_PER_ROUND))

        bits = (u[:, :3] < 0.5).astype(np.int64)[:, :n]
        x_idx = np.zeros(rows, dtype=np.int64)
        for k in range(n):
            x_idx = (x_idx << 1) | bits[:, k]
        b = np.minimum((u[:, 3] * n).astype(np.int64), n - 1)
        a_b = np.take_along_axis(bits, b[:, None], axis=1)[:, 0]

        if mode == "honest":
            click = u[:, 6] < config.eta
            bob_out = (u[:, 7] < honest1[x_idx, b]).astype(np.int64)
            eve_out = (u[:, 5] < 0.5).astype(np.int64)  # uninformed guess
            e_match = None
        else:
            e = np.minimum((u[:, 4] * n).astype(np.int64), n - 1)
            e_match = e == b
            click = e_match | (u[:, 6] < config.eta)
            if mode == "ir":
                eve_out = (u[:, 5] < eve1[x_idx, e]).astype(np.int64)
                bob_out = (u[:, 7] < ir_bob1[e, eve_out, b]).astype(np.int64)
            else:
                bob_out = (u[:, 7] < dm_bob1[x_idx, e, b]).astype(np.int64)
                eve_out = (u[:, 5] < dm_eve1_given[x_idx, e, b, bob_out]).astype(np.int64)

        clicked += int(np.count_nonzero(click))
        hits_bob += int(np.count_nonzero(click & (bob_out == a_b)))
        hits_eve += int(np.count_nonzero(click & (eve_out == a_b)))
        if e_match is not None:
            matched += int(np.count_nonzero(click & e_match))

    p_b = hits_bob / clicked if clicked else 0.0
    p_e = hits_eve / clicked if clicked else 0.0
    observed_eta = clicked / config.rounds
    return SimReport(
        emitted_rounds=config.rounds,
        clicked_rounds=clicked,
        empirical=ObservedStats(p_b=p_b, p_e=p_e, eta_avg=observed_eta),
        standard_errors=StandardErrors(
            p_b=_binomial_se(p_b, clicked),
            p_e=_binomial_se(p_e, clicked),
            eta_avg=_binomial_se(observed_eta, config.rounds),
        ),
        sifted_key_agreement=p_b,
        eve_key_agreement=p_e,
        matched_setting_fraction=(matched / clicked if clicked else 0.0) if mode != "honest" else None,
    )


def _binomial_se(p: float, trials: int) -> float:
    if trials <= 0:
        return 0.0
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def chi_square_consistency(report: SimReport, predicted: ObservedStats) -> ChiSquareResult:
    """Compare empirical statistics against closed-form predictions.

    Passes when every statistic sits within 4 binomial standard errors
    of its prediction; the statistic is the sum of squared z-scores.
    """
    pairs = {
        "p_b": (report.empirical.p_b, predicted.p_b, report.standard_errors.p_b),
        "p_e": (report.empirical.p_e, predicted.p_e, report.standard_errors.p_e),
        "eta_avg": (report.empirical.eta_avg, predicted.eta_avg, report.standard_errors.eta_avg),
    }
    z_scores = {}
    for name, (emp, pred, se) in pairs.items():
        if se > 0.0:
            z_scores[name] = (emp - pred) / se
        else:
            z_scores[name] = 0.0 if abs(emp - pred) <= 1e-15 else math.inf
    statistic = float(sum(z * z for z in z_scores.values()))
    passed = all(abs(z) <= 4.0 for z in z_scores.values())
    return ChiSquareResult(statistic=statistic, passed=passed, z_scores=z_scores)
