"""Simulator behavior: determinism, click accounting, convergence to the
closed-form statistics, and the goodness-of-fit verdict."""

import numpy as np
import pytest

from sdiqkd.attack import (
    EfficiencyModel,
    IrAttack,
    dm_from_ir,
    postselected_stats_ir,
)
from sdiqkd.protocol import Fixed2to1, Fixed3to1, honest_protocol
from sdiqkd.qmath import BlochAngles, projector_pair_from_bloch
from sdiqkd.sim import (
    ChiSquareResult,
    SimConfig,
    chi_square_consistency,
    predicted_stats,
    run,
)

Z_PAIR = projector_pair_from_bloch(BlochAngles(0.0, 0.0))
X_PAIR = projector_pair_from_bloch(BlochAngles(np.pi / 2, 0.0))


def _echo_attack(n: int) -> IrAttack:
    """Interception in fixed bases, receiver re-measuring the resent state."""
    pairs = tuple(Z_PAIR if e % 2 == 0 else X_PAIR for e in range(n))
    grid = tuple(tuple(pairs[e] for _ in range(n)) for e in range(n))
    encoding = Fixed2to1() if n == 2 else Fixed3to1()
    return IrAttack(eve_measurements=pairs, bob_measurements=grid, encoding=encoding)


def _honest_config(n: int, rounds: int, seed: int, eta: float) -> SimConfig:
    encoding = Fixed2to1() if n == 2 else Fixed3to1()
    return SimConfig(
        protocol=honest_protocol(encoding), attack=None, rounds=rounds, seed=seed, eta=eta
    )


class TestValidation:
    def test_rounds_must_be_positive(self):
        with pytest.raises(ValueError):
            _honest_config(2, 0, 1, 0.5)

    def test_eta_range(self):
        with pytest.raises(ValueError):
            _honest_config(2, 10, 1, 1.2)
        with pytest.raises(ValueError):
            _honest_config(2, 10, 1, -0.1)

    def test_attack_protocol_agreement(self):
        with pytest.raises(ValueError):
            SimConfig(
                protocol=honest_protocol(Fixed3to1()),
                attack=_echo_attack(2),
                rounds=10,
                seed=1,
                eta=0.5,
            )


class TestDeterminism:
    def test_bit_identical_reports(self):
        config = SimConfig(
            protocol=honest_protocol(Fixed2to1()),
            attack=_echo_attack(2),
            rounds=40_000,
            seed=123,
            eta=0.6,
        )
        assert run(config) == run(config)

    def test_seed_changes_outcome(self):
        a = run(_honest_config(2, 20_000, seed=1, eta=0.7))
        b = run(_honest_config(2, 20_000, seed=2, eta=0.7))
        assert a != b

    def test_chunk_boundary_rounds(self):
        # One row beyond a chunk boundary must still produce a full report.
        report = run(_honest_config(2, (1 << 15) + 1, seed=5, eta=0.9))
        assert report.emitted_rounds == (1 << 15) + 1
        assert report.clicked_rounds <= report.emitted_rounds


class TestClickAccounting:
    def test_perfect_efficiency_clicks_every_round(self):
        report = run(_honest_config(2, 5_000, seed=3, eta=1.0))
        assert report.clicked_rounds == report.emitted_rounds
        assert report.empirical.eta_avg == 1.0

    def test_zero_efficiency_honest_never_clicks(self):
        report = run(_honest_config(3, 5_000, seed=3, eta=0.0))
        assert report.clicked_rounds == 0
        assert report.empirical.p_b == 0.0
        assert report.matched_setting_fraction is None

    def test_zero_mismatch_efficiency_keeps_only_matched_rounds(self):
        config = SimConfig(
            protocol=honest_protocol(Fixed2to1()),
            attack=_echo_attack(2),
            rounds=30_000,
            seed=9,
            eta=0.0,
        )
        report = run(config)
        assert report.matched_setting_fraction == 1.0
        # Half the rounds match on average when e and b are uniform.
        assert np.isclose(report.clicked_rounds / report.emitted_rounds, 0.5, atol=0.02)

    @pytest.mark.parametrize("n", [2, 3])
    def test_matched_fraction_enriched_by_blinding(self, n):
        # Post-selection keeps every matched round but only eta of the rest.
        config = SimConfig(
            protocol=honest_protocol(Fixed2to1() if n == 2 else Fixed3to1()),
            attack=_echo_attack(n),
            rounds=60_000,
            seed=11,
            eta=0.4,
        )
        report = run(config)
        expected = 1.0 / (1.0 + (n - 1) * 0.4)
        assert report.matched_setting_fraction > 1.0 / n
        assert np.isclose(report.matched_setting_fraction, expected, atol=0.02)

    def test_uniform_clicks_leave_matching_at_chance(self):
        config = SimConfig(
            protocol=honest_protocol(Fixed2to1()),
            attack=_echo_attack(2),
            rounds=60_000,
            seed=13,
            eta=1.0,
        )
        report = run(config)
        assert np.isclose(report.matched_setting_fraction, 0.5, atol=0.02)


class TestConvergence:
    def test_honest_2to1_hits_protocol_success(self):
        config = _honest_config(2, 200_000, seed=21, eta=0.8)
        report = run(config)
        verdict = chi_square_consistency(report, predicted_stats(config))
        assert verdict.passed, verdict.z_scores
        assert np.isclose(report.empirical.p_e, 0.5, atol=0.01)

    def test_honest_3to1_hits_protocol_success(self):
        config = _honest_config(3, 200_000, seed=22, eta=0.65)
        report = run(config)
        verdict = chi_square_consistency(report, predicted_stats(config))
        assert verdict.passed, verdict.z_scores

    @pytest.mark.parametrize("eta", [0.3, 0.7, 1.0])
    def test_interception_matches_weighted_average(self, eta):
        config = SimConfig(
            protocol=honest_protocol(Fixed2to1()),
            attack=_echo_attack(2),
            rounds=200_000,
            seed=31,
            eta=eta,
        )
        report = run(config)
        verdict = chi_square_consistency(report, predicted_stats(config))
        assert verdict.passed, verdict.z_scores

    def test_interception_3to1(self):
        config = SimConfig(
            protocol=honest_protocol(Fixed3to1()),
            attack=_echo_attack(3),
            rounds=200_000,
            seed=32,
            eta=0.5,
        )
        report = run(config)
        verdict = chi_square_consistency(report, predicted_stats(config))
        assert verdict.passed, verdict.z_scores

    def test_delayed_measurement_matches_embedded_interception(self):
        # The embedding must be statistically indistinguishable from the
        # interception attack it copies.
        ir = _echo_attack(2)
        config = SimConfig(
            protocol=honest_protocol(Fixed2to1()),
            attack=dm_from_ir(ir),
            rounds=200_000,
            seed=33,
            eta=0.6,
        )
        report = run(config)
        verdict = chi_square_consistency(report, predicted_stats(config))
        assert verdict.passed, verdict.z_scores
        ir_stats = postselected_stats_ir(ir, EfficiencyModel(n=2, eta=0.6))
        assert np.isclose(report.empirical.p_b, ir_stats.p_b, atol=0.01)
        assert np.isclose(report.empirical.p_e, ir_stats.p_e, atol=0.01)

    def test_report_key_agreement_mirrors_statistics(self):
        config = _honest_config(2, 50_000, seed=41, eta=0.9)
        report = run(config)
        assert report.sifted_key_agreement == report.empirical.p_b
        assert report.eve_key_agreement == report.empirical.p_e


class TestChiSquare:
    def test_detects_wrong_prediction(self):
        config = _honest_config(2, 100_000, seed=51, eta=0.8)
        report = run(config)
        wrong = predicted_stats(_honest_config(2, 100_000, seed=51, eta=0.3))
        verdict = chi_square_consistency(report, wrong)
        assert not verdict.passed
        assert abs(verdict.z_scores["eta_avg"]) > 4.0

    def test_no_data_cannot_confirm(self):
        config = _honest_config(2, 1_000, seed=52, eta=0.0)
        report = run(config)
        verdict = chi_square_consistency(report, predicted_stats(config))
        # eta matches exactly, but the success rates have no support.
        assert verdict.z_scores["eta_avg"] == 0.0
        assert not verdict.passed

    def test_statistic_is_sum_of_squares(self):
        verdict = ChiSquareResult(statistic=0.0, passed=True, z_scores={})
        assert verdict.statistic == 0.0
        config = _honest_config(2, 50_000, seed=53, eta=0.75)
        report = run(config)
        result = chi_square_consistency(report, predicted_stats(config))
        assert np.isclose(
            result.statistic, sum(z * z for z in result.z_scores.values()), atol=1e-12
        )
