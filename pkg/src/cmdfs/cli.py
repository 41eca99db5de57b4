"""Command-line entry point: ``cmdfs {simulate,profile,ode,compare}``.

Exit codes: 0 when everything ran (and, for ``compare``, every criterion
passed), 2 when some criterion failed, 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .degrees import sample_degree_sequence
from .errors import CmdfsError
from .exploration import explore_and_build, ladder_times, longest_path_lower_bound, write_histograms_json
from .fluid import TruncationSpec, solve_system, solve_system_prime
from .genfun import GenFun, alpha_c, limit_profile
from .harness import ExperimentConfig, run_experiment

log = logging.getLogger("cmdfs")

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _alphas(text: str) -> list[float]:
    return [float(a) for a in text.split(",") if a.strip()]


class _Parser(argparse.ArgumentParser):
    # usage errors are errors (exit 1); exit 2 is reserved for failed criteria
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override its fields")
    p.add_argument("--dist", help="degree law, e.g. poisson:3, dirac:5, binomial:5,0.6, geometric:0.4")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="json",
                   help="with --out, csv only writes files; json also prints a summary")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cmdfs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="build one graph, explore it and export the trace")
    _common(p)
    p.add_argument("--N", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=_alphas, help="comma-separated snapshot fractions")

    p = sub.add_parser("profile", help="limit contour profile and its scalars")
    _common(p)
    p.add_argument("--grid", type=int)

    p = sub.add_parser("ode", help="solve the fluid-limit system")
    _common(p)
    p.add_argument("--system", choices=("S", "S'"), default="S")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float, help="default: until critical (S) or 0.99 t'_max (S')")

    p = sub.add_parser("compare", help="replicated simulations against the predictions")
    _common(p)
    p.add_argument("--N", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=_alphas)
    p.add_argument("--grid", type=int)
    p.add_argument("--workers", type=int)
    return parser


_FIELDS = {"dist": "dist", "N": "N", "reps": "reps", "seed": "seed", "delta": "delta",
           "alpha": "alphas", "grid": "grid", "epsilon": "epsilon", "dt": "dt",
           "workers": "workers", "out": "out"}


def config_from_args(args) -> ExperimentConfig:
    data = json.loads(args.config.read_text()) if getattr(args, "config", None) else {}
    for flag, key in _FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = str(value) if key == "out" else value
    return ExperimentConfig.from_dict(data)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_simulate(args, config: ExperimentConfig) -> int:
    dist = config.distribution
    seq = sample_degree_sequence(dist, config.N, config.seed)
    trace, hists = explore_and_build(seq, config.seed, config.alphas)
    times = ladder_times(trace, config.delta)
    summary = {
        "dist": config.dist,
        "N": config.N,
        "seed": config.seed,
        "parity_fixed": seq.parity_fixed,
        "edges": int(trace.edges.shape[0]),
        "components": int(trace.excursions().shape[0]),
        "giant_fraction": trace.giant_fraction(),
        "path_bound": longest_path_lower_bound(trace),
        "ladder_count": int(times.size - 1),
        "snapshots": [h.to_dict() for h in hists],
    }
    if config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        trace.write_contour_csv(out / "contour.csv")
        trace.write_edges_csv(out / "edges.csv")
        write_histograms_json(hists, out / "snapshots.json")
        seq.save(out / "degrees.txt")
        np.savetxt(out / "ladder_times.csv", times, fmt="%d", header="T", comments="")
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if args.format == "json" or not config.out:
        _emit(summary)
    return EXIT_OK


def cmd_profile(args, config: ExperimentConfig) -> int:
    prof = limit_profile(GenFun(config.distribution), config.grid)
    if config.out:
        prof.write_csv(config.out)
    if args.format == "json" or not config.out:
        _emit({"dist": config.dist, **prof.summary(), "peak_time": prof.peak_time})
    return EXIT_OK


def cmd_ode(args, config: ExperimentConfig) -> int:
    dist = config.distribution
    trunc = TruncationSpec.for_distribution(dist, config.epsilon)
    if args.system == "S":
        traj = solve_system(dist, trunc, args.t_end or 2.0, config.dt)
    else:
        t_end = args.t_end or 0.99 * alpha_c(GenFun(dist))
        traj = solve_system_prime(dist, trunc, t_end, config.dt)
    if config.out:
        Path(config.out).mkdir(parents=True, exist_ok=True)
        traj.write_csv(Path(config.out) / "trajectory.csv")
    if args.format == "json" or not config.out:
        _emit({
            "dist": config.dist,
            "system": traj.system,
            "delta": int(trunc.width(dist)),
            "t_max": traj.t_max,
            "stop_reason": traj.stop_reason,
            "steps": int(traj.t.size - 1),
            "final_mass": float(traj.states[-1].sum()),
            "companion_end": None if traj.companion is None else float(traj.companion[-1]),
        })
    return EXIT_OK


def cmd_compare(args, config: ExperimentConfig) -> int:
    report = run_experiment(config)
    if args.format == "json" or not config.out:
        sys.stdout.write(report.to_json())
    for name, c in sorted(report.criteria.items()):
        log.info("%s %s value=%.6g threshold=%g", "PASS" if c["passed"] else "FAIL", name, c["value"], c["threshold"])
    return EXIT_OK if report.all_passed else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "profile": cmd_profile, "ode": cmd_ode, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        config = config_from_args(args)
        return COMMANDS[args.command](args, config)
    except (CmdfsError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"cmdfs: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
