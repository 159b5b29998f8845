"""Compare immediate interception against a one-qubit quantum memory.

A memory attack entangles each intercepted qubit with a stored one and
defers the measurement until the receiver announces his index.  For the
two-bit protocol and for the three-bit protocol with adversarial
encodings the deferral buys nothing: the optimizer lands back on the
interception curve.  Against the fixed three-bit encoding it buys a
real advantage, strictly above the closed form everywhere between the
domain edge and perfect efficiency.

Expect a few minutes of optimizer time with the default settings.
"""

import argparse
import sys
import time

from sdiqkd.bounds import CurveSpec, OptimizerConfig, optimize_dm, pe_max_at_eta_avg


def compare(n: int, tamper: str, grid, restarts: int, seed: int) -> tuple[bool, float]:
    spec = CurveSpec(n=n, attack_kind="dm", tamper=tamper, grid=grid)
    start = time.perf_counter()
    points = optimize_dm(spec, OptimizerConfig(restarts=restarts, seed=seed))
    elapsed = time.perf_counter() - start
    label = "fixed" if tamper == "fixed" else "adversarial"
    print(f"\n{n}->1, {label} encoding ({elapsed:.1f}s)")
    print(f"  {'eta_avg':>8}  {'intercept':>10}  {'memory':>10}  {'gain':>9}")
    capped = False
    best_gain = 0.0
    for point in points:
        closed = pe_max_at_eta_avg(n, tamper, point.eta_avg)
        gain = point.pe_max - closed
        best_gain = max(best_gain, gain)
        flag = "" if point.optimizer_meta.converged else " *"
        capped |= not point.optimizer_meta.converged
        print(f"  {point.eta_avg:8.4f}  {closed:10.6f}  {point.pe_max:10.6f}  {gain:+9.6f}{flag}")
    return capped, best_gain


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--restarts", type=int, default=2, help="optimizer restarts per point")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    # Restart 0 always embeds the best interception strategy, so every
    # reported value is at least the interception curve.
    capped, _ = compare(2, "fixed", (0.6, 0.8, 1.0), args.restarts, args.seed)
    more, _ = compare(3, "eve", (0.5, 0.75, 1.0), args.restarts, args.seed)
    capped |= more
    more, fixed_gain = compare(3, "fixed", (0.5, 0.75, 1.0), args.restarts, args.seed)
    capped |= more

    if capped:
        print("\n* the simplex search stopped at its iteration cap.  Every value")
        print("  is still attained by a concrete strategy, so it lower-bounds the")
        print("  memory optimum; the true gains can only be larger.")
    if fixed_gain > 5e-3:
        print("\nThe positive gains in the last block are genuine: the fixed")
        print("tetrahedral ensemble spans the full sphere, so a stored qubit")
        print("retains information no immediate measurement can capture.  The")
        print("planar two-bit ensemble and the adversarial three-bit optimum")
        print("leave nothing for the memory to add.")
    else:
        print("\nThe last block normally shows a real memory advantage; with so")
        print("few restarts the search never left the embedded interception")
        print("seed.  Rerun with --restarts 2 or more.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
