"""Command-line entry point: ``hermlab run`` and ``hermlab suite``.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage error,
3 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run, suite

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3
OUT_ENV = "HERMLAB_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _param(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser():
    p = _Parser(prog="hermlab", description="Harmonic-oscillator spectral experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    r.add_argument("--config", help="JSON file with experiment settings (flags override it)")
    r.add_argument("--dim", type=int)
    r.add_argument("--cutoff", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--samples", type=int)
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./runs/<experiment>)")
    r.add_argument("--threads", type=int)
    r.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")

    s = sub.add_parser("suite", help="run every experiment")
    s.add_argument("name", choices=("quick", "full"))
    s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./runs)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int)
    s.add_argument("--tamper-eta", action="store_true", help="replace eta by a plateau-free bump (negative control)")
    return p


def _load_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {"experiment", "dimension", "cutoff", "seed", "sample_count", "output_dir", "params"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
    params = dict(data.get("params", {}))
    params.update(dict(args.param))
    experiment = args.experiment or data.get("experiment")
    if not experiment:
        raise ConfigError("no experiment given (--experiment or config file)")
    out = args.out or data.get("output_dir") or os.environ.get(OUT_ENV)
    if out is None:
        out = os.path.join("runs", experiment)
    pick = lambda flag, key: flag if flag is not None else data.get(key)  # noqa: E731
    return ExperimentConfig(
        experiment=experiment,
        dimension=pick(args.dim, "dimension"),
        cutoff=pick(args.cutoff, "cutoff"),
        seed=pick(args.seed, "seed") or 0,
        sample_count=pick(args.samples, "sample_count"),
        output_dir=out,
        params=params,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run(_load_config(args), threads=args.threads)
            for name, ok in report.verdicts.items():
                print(f"{name:32s} {'PASS' if ok else 'FAIL'}")
            if report.error:
                print(report.error, file=sys.stderr)
                return EXIT_DIVERGED
            return EXIT_PASS if report.passed else EXIT_FAIL
        out = args.out or os.environ.get(OUT_ENV) or "runs"
        ok, _ = suite(args.name, os.path.join(out, "suite"), args.seed, args.threads, args.tamper_eta)
        return EXIT_PASS if ok else EXIT_FAIL
    except ConfigError as exc:
        print(f"hermlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
