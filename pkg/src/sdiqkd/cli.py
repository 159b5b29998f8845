"""Command-line front end.

Subcommands: curve (bound curves, analytic or optimized), critical
(critical detection efficiency), simulate (Monte Carlo run from an
attack spec file), keyrate (security margin and key rates).

Every output file embeds a run manifest holding the command, the
resolved parameters, the root seed, and the tool version; re-running
those parameters reproduces the file byte for byte.  Wall-clock
duration is never embedded in the data file for that reason; it lives
in a sidecar <out>.manifest.json written next to the output.

Exit codes: 0 success, 2 usage or parse failure, 3 optimizer
convergence warning (output still written, rows flagged), 4 target
unreachable.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .attack import DmAttack, IrAttack
from .bounds import (
    CurvePoint,
    CurveSpec,
    OptimizerConfig,
    TAMPERED_PLATEAU_EDGE,
    TargetUnreachableError,
    analytic_curve,
    critical_efficiency,
    default_grid,
    optimize_dm,
    optimize_ir,
    sits_on_plateau,
)
from .protocol import (
    EncodingParams,
    Fixed2to1,
    Fixed3to1,
    GeneralEncoding,
    Tampered3to1Symmetric,
    honest_protocol,
    key_rate,
    n_bits,
)
from .qmath import BlochAngles, projector_pair_from_bloch, state_from_bloch, unitary_from_generator
from .sim import SimConfig, chi_square_consistency, predicted_stats, run

__all__ = ["RunManifest", "main"]


class _SpecError(ValueError):
    """Attack spec file or argument combination that cannot be used."""


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record written into and alongside every output."""

    command: str
    parameters: dict[str, Any]
    seed: int | None
    version: str

    def as_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "version": self.version,
        }

    def compact_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))


def _round6(value: float) -> float:
    return round(float(value), 6)


def _write_output(out: str | None, text: str, manifest: RunManifest, started: float) -> None:
    """Write the payload to --out or stdout, plus the duration sidecar."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text, encoding="utf-8")
    sidecar = dict(manifest.as_dict(), duration_seconds=time.perf_counter() - started)
    Path(str(path) + ".manifest.json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _curve_rows_csv(points: list[CurvePoint], manifest: RunManifest) -> str:
    lines = [f"# manifest: {manifest.compact_json()}", "eta_avg,pe_max,source,converged,restarts_used"]
    for p in points:
        if p.optimizer_meta is None:
            converged, restarts = "", ""
        else:
            converged = "true" if p.optimizer_meta.converged else "false"
            restarts = str(p.optimizer_meta.restarts_used)
        lines.append(f"{p.eta_avg:.6f},{p.pe_max:.6f},{p.source},{converged},{restarts}")
    return "\n".join(lines) + "\n"


def _curve_rows_json(points: list[CurvePoint], manifest: RunManifest) -> str:
    records = []
    for p in points:
        meta = p.optimizer_meta
        records.append(
            {
                "eta_avg": _round6(p.eta_avg),
                "pe_max": _round6(p.pe_max),
                "source": p.source,
                "converged": None if meta is None else meta.converged,
                "restarts_used": None if meta is None else meta.restarts_used,
            }
        )
    doc = {"manifest": manifest.as_dict(), "points": records}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _cmd_curve(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        grid = default_grid(args.n, args.grid)
        spec = CurveSpec(n=args.n, attack_kind=args.attack, tamper=args.tamper, grid=grid)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest = RunManifest(
        command="curve",
        parameters={
            "n": args.n,
            "attack": args.attack,
            "tamper": args.tamper,
            "grid": args.grid,
            "mode": args.mode,
            "format": args.format,
            "restarts": args.restarts,
            "max_iterations": args.max_iterations,
            "out": args.out,
        },
        seed=args.seed,
        version=__version__,
    )
    if args.mode == "analytic":
        points = analytic_curve(spec)
    else:
        config = OptimizerConfig(
            restarts=args.restarts, max_iterations=args.max_iterations, seed=args.seed
        )
        points = optimize_ir(spec, config) if args.attack == "ir" else optimize_dm(spec, config)
    text = _curve_rows_csv(points, manifest) if args.format == "csv" else _curve_rows_json(points, manifest)
    try:
        _write_output(args.out, text, manifest, started)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 2
    if any(p.optimizer_meta is not None and not p.optimizer_meta.converged for p in points):
        print("warning: local search did not converge at every grid point", file=sys.stderr)
        return 3
    return 0


def _cmd_critical(args: argparse.Namespace) -> int:
    try:
        star = critical_efficiency(args.n, args.tamper, args.pb_target, attack_kind=args.attack)
    except TargetUnreachableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{star:.6f}")
    if sits_on_plateau(args.n, args.tamper, star, args.pb_target):
        print(
            "note: the bound curve equals the target on a plateau; the value above "
            "is the plateau's left edge (an infimum), not a strict crossing."
        )
        if args.n == 3 and args.tamper == "eve" and abs(star - TAMPERED_PLATEAU_EDGE) <= 1e-5:
            print(
                "note: the exact edge is sqrt(2)-1 = 0.414214; the commonly quoted "
                "41.2% understates it by 0.2 percentage points."
            )
    return 0


def _angle_pair(raw: Any, context: str) -> BlochAngles:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise _SpecError(f"{context} must be an [alpha, beta] pair, got {raw!r}")
    try:
        return BlochAngles(float(raw[0]), float(raw[1]))
    except (TypeError, ValueError) as exc:
        raise _SpecError(f"{context}: {exc}") from exc


def _encoding_from_json(raw: Any) -> EncodingParams:
    if not isinstance(raw, dict) or "variant" not in raw:
        raise _SpecError("encoding must be an object with a 'variant' key")
    variant = raw["variant"]
    if variant == "fixed2to1":
        return Fixed2to1()
    if variant == "fixed3to1":
        return Fixed3to1()
    if variant == "tampered3to1":
        try:
            return Tampered3to1Symmetric(float(raw["alpha"]), float(raw["beta"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise _SpecError(f"tampered3to1 encoding needs numeric alpha and beta: {exc}") from exc
    if variant == "general":
        angles = raw.get("angles")
        if not isinstance(angles, list):
            raise _SpecError("general encoding needs an 'angles' list")
        return GeneralEncoding(
            tuple(_angle_pair(a, f"encoding angles[{i}]") for i, a in enumerate(angles))
        )
    raise _SpecError(f"unknown encoding variant {variant!r}")


def _pair_grid(raw: Any, n: int, context: str) -> tuple[tuple, ...]:
    if not isinstance(raw, list) or len(raw) != n or any(
        not isinstance(row, list) or len(row) != n for row in raw
    ):
        raise _SpecError(f"{context} must be an {n}x{n} grid of [alpha, beta] pairs")
    return tuple(
        tuple(
            projector_pair_from_bloch(_angle_pair(cell, f"{context}[{e}][{b}]"))
            for b, cell in enumerate(row)
        )
        for e, row in enumerate(raw)
    )


def _attack_from_json(doc: dict[str, Any]) -> tuple[EncodingParams, IrAttack | DmAttack | None, float]:
    mode = doc.get("mode")
    if mode not in ("honest", "ir", "dm"):
        raise _SpecError("attack spec 'mode' must be 'honest', 'ir', or 'dm'")
    encoding = _encoding_from_json(doc.get("encoding"))
    n = n_bits(encoding)
    try:
        eta = float(doc["eta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise _SpecError(f"attack spec needs a numeric 'eta': {exc}") from exc

    if mode == "honest":
        return encoding, None, eta

    if mode == "ir":
        raw_eve = doc.get("eve_measurements")
        if not isinstance(raw_eve, list) or len(raw_eve) != n:
            raise _SpecError(f"ir spec needs {n} eve_measurements [alpha, beta] pairs")
        eve = tuple(
            projector_pair_from_bloch(_angle_pair(p, f"eve_measurements[{e}]"))
            for e, p in enumerate(raw_eve)
        )
        if "bob_measurements" in doc:
            bob = _pair_grid(doc["bob_measurements"], n, "bob_measurements")
        else:
            # Default receiver behavior: echo the interception basis.
            bob = tuple(tuple(eve[e] for _ in range(n)) for e in range(n))
        return encoding, IrAttack(eve_measurements=eve, bob_measurements=bob, encoding=encoding), eta

    raw_gens = doc.get("unitary_generators")
    if not isinstance(raw_gens, list) or len(raw_gens) != n or any(
        not isinstance(g, list) or len(g) != 16 for g in raw_gens
    ):
        raise _SpecError(f"dm spec needs {n} unitary_generators of 16 numbers each")
    try:
        unitaries = tuple(
            unitary_from_generator([float(v) for v in gen]) for gen in raw_gens
        )
    except (TypeError, ValueError) as exc:
        raise _SpecError(f"unitary_generators: {exc}") from exc
    eve_grid = _pair_grid(doc.get("eve_measurements"), n, "eve_measurements")
    bob_grid = _pair_grid(doc.get("bob_measurements"), n, "bob_measurements")
    blank_angles = _angle_pair(doc["blank"], "blank") if "blank" in doc else BlochAngles(0.0, 0.0)
    attack = DmAttack(
        unitaries=unitaries,
        eve_measurements=eve_grid,
        bob_measurements=bob_grid,
        blank=state_from_bloch(blank_angles),
        encoding=encoding,
    )
    return encoding, attack, eta


def _cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise _SpecError("attack spec must be a JSON object")
        encoding, attack, eta = _attack_from_json(doc)
        n = n_bits(encoding)
        if args.n is not None and args.n != n:
            raise _SpecError(f"--n {args.n} contradicts the {n}-bit spec file")
        protocol = honest_protocol(encoding if attack is None else (Fixed2to1() if n == 2 else Fixed3to1()))
        config = SimConfig(protocol=protocol, attack=attack, rounds=args.rounds, seed=args.seed, eta=eta)
    except (OSError, json.JSONDecodeError, _SpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run(config)
    predicted = predicted_stats(config)
    verdict = chi_square_consistency(report, predicted)
    mode = doc["mode"]
    manifest = RunManifest(
        command="simulate",
        parameters={"spec": args.spec, "n": n, "mode": mode, "eta": eta, "rounds": args.rounds, "out": args.out},
        seed=args.seed,
        version=__version__,
    )
    body = {
        "n": n,
        "mode": mode,
        "eta": eta,
        "emitted_rounds": report.emitted_rounds,
        "clicked_rounds": report.clicked_rounds,
        "empirical": {
            "p_b": _round6(report.empirical.p_b),
            "p_e": _round6(report.empirical.p_e),
            "eta_avg": _round6(report.empirical.eta_avg),
        },
        "predicted": {
            "p_b": _round6(predicted.p_b),
            "p_e": _round6(predicted.p_e),
            "eta_avg": _round6(predicted.eta_avg),
        },
        "deltas": {
            "p_b": _round6(report.empirical.p_b - predicted.p_b),
            "p_e": _round6(report.empirical.p_e - predicted.p_e),
            "eta_avg": _round6(report.empirical.eta_avg - predicted.eta_avg),
        },
        "standard_errors": {
            "p_b": _round6(report.standard_errors.p_b),
            "p_e": _round6(report.standard_errors.p_e),
            "eta_avg": _round6(report.standard_errors.eta_avg),
        },
        "sifted_key_agreement": _round6(report.sifted_key_agreement),
        "eve_key_agreement": _round6(report.eve_key_agreement),
        "matched_setting_fraction": (
            None
            if report.matched_setting_fraction is None
            else _round6(report.matched_setting_fraction)
        ),
        "chi_square": {
            "statistic": _round6(verdict.statistic) if math.isfinite(verdict.statistic) else None,
            "passed": verdict.passed,
            "z_scores": {k: _round6(z) if math.isfinite(z) else None for k, z in verdict.z_scores.items()},
        },
    }
    text = json.dumps({"manifest": manifest.as_dict(), "report": body}, sort_keys=True, indent=2) + "\n"
    try:
        _write_output(args.out, text, manifest, started)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_keyrate(args: argparse.Namespace) -> int:
    try:
        rate_bob = key_rate(args.pb)
        rate_eve = key_rate(args.pe)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    margin = args.pb - args.pe
    print(f"margin {margin:.6f}")
    print(f"rate_bob {rate_bob:.6f}")
    print(f"rate_eve {rate_eve:.6f}")
    print("SECURE" if margin > 0.0 else "INSECURE")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdiqkd",
        description="Security bounds for random-access-code QKD under detector blinding.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    curve = sub.add_parser("curve", help="write a bound curve sampled on an efficiency grid")
    curve.add_argument("--n", type=int, choices=(2, 3), required=True)
    curve.add_argument("--attack", choices=("ir", "dm"), default="ir")
    curve.add_argument("--tamper", choices=("fixed", "eve"), default="fixed")
    curve.add_argument("--grid", type=int, default=101, help="number of eta_avg samples")
    curve.add_argument("--mode", choices=("analytic", "optimize"), default="analytic")
    curve.add_argument("--format", choices=("csv", "json"), default="csv")
    curve.add_argument("--out", default=None, help="output path (stdout when omitted)")
    curve.add_argument("--seed", type=int, default=0)
    curve.add_argument("--restarts", type=int, default=None)
    curve.add_argument("--max-iterations", type=int, default=None)
    curve.set_defaults(handler=_cmd_curve)

    critical = sub.add_parser("critical", help="solve for the critical observed efficiency")
    critical.add_argument("--n", type=int, choices=(2, 3), required=True)
    critical.add_argument("--attack", choices=("ir", "dm"), default="ir")
    critical.add_argument("--tamper", choices=("fixed", "eve"), default="fixed")
    critical.add_argument("--pb-target", type=float, required=True)
    critical.set_defaults(handler=_cmd_critical)

    simulate = sub.add_parser("simulate", help="Monte Carlo run from a JSON attack spec")
    simulate.add_argument("--spec", required=True, help="attack spec JSON file")
    simulate.add_argument("--n", type=int, choices=(2, 3), default=None)
    simulate.add_argument("--rounds", type=int, default=1_000_000)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--out", default=None, help="output path (stdout when omitted)")
    simulate.set_defaults(handler=_cmd_simulate)

    keyrate = sub.add_parser("keyrate", help="security margin and key rates from observed statistics")
    keyrate.add_argument("--pb", type=float, required=True)
    keyrate.add_argument("--pe", type=float, required=True)
    keyrate.set_defaults(handler=_cmd_keyrate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return int(args.handler(args))


if __name__ == "__main__":
    sys.exit(main())
