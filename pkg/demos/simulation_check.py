"""Round-by-round simulations against their closed-form predictions.

Plays an honest lossy channel and a blinding interception attack for a
configurable number of rounds, then checks every observed statistic
against its prediction with a four-standard-error gate.  The attack is
built from the optimizer's own parameters, so this also exercises the
replay path from search results to concrete strategies.
"""

import argparse
import sys

import numpy as np

from sdiqkd.bounds import CurveSpec, OptimizerConfig, ir_attack_from_params, optimize_ir
from sdiqkd.protocol import Fixed2to1, honest_protocol
from sdiqkd.sim import SimConfig, chi_square_consistency, predicted_stats, run


def report_block(title: str, config: SimConfig) -> bool:
    predicted = predicted_stats(config)
    outcome = run(config)
    verdict = chi_square_consistency(outcome, predicted)
    print(f"\n{title}")
    print(f"  rounds {config.rounds}, clicks {outcome.clicked_rounds}, seed {config.seed}")
    print(f"  {'statistic':>9}  {'predicted':>10}  {'observed':>10}  {'z':>6}")
    for name, want, got in (
        ("p_b", predicted.p_b, outcome.empirical.p_b),
        ("p_e", predicted.p_e, outcome.empirical.p_e),
        ("eta_avg", predicted.eta_avg, outcome.empirical.eta_avg),
    ):
        print(f"  {name:>9}  {want:10.6f}  {got:10.6f}  {verdict.z_scores[name]:6.2f}")
    print(f"  within four standard errors: {'yes' if verdict.passed else 'NO'}")
    return verdict.passed


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rounds", type=int, default=10**6)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--eta", type=float, default=0.4, help="mismatched-index click probability")
    args = parser.parse_args(argv)

    protocol = honest_protocol(Fixed2to1())
    all_passed = report_block(
        "honest channel, detector efficiency 0.85",
        SimConfig(protocol=protocol, attack=None, rounds=args.rounds, seed=args.seed, eta=0.85),
    )

    avg = (1.0 + args.eta) / 2.0
    spec = CurveSpec(n=2, attack_kind="ir", tamper="fixed", grid=(avg,))
    point = optimize_ir(spec, OptimizerConfig(seed=args.seed))[0]
    attack = ir_attack_from_params(2, "fixed", np.asarray(point.optimizer_meta.best_params))
    all_passed &= report_block(
        f"interception attack tuned for eta_avg {avg:.3f}",
        SimConfig(protocol=protocol, attack=attack, rounds=args.rounds, seed=args.seed + 1, eta=args.eta),
    )

    print("\nEvery simulated estimate converges at the usual square-root rate;")
    print("rerunning with the same seed reproduces the reports bit for bit.")
    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
