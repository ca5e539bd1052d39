"""Command-line entry point.

    alttrain train --config experiment.cfg [--out DIR] [--seeds 1,2,3]
                   [--optimizer sg,ate_sg_implemented]

Flags override the corresponding config keys.  The exit code is 0 only
when every run completed without divergence.
"""

import argparse
import sys

from .config import load_config, with_overrides
from .harness import emit_outputs, run_experiment


def _parse_seed_list(text):
    try:
        return tuple(int(s.strip()) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _parse_kind_list(text):
    return tuple(s.strip() for s in text.split(","))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="alttrain",
        description="Train multi-task networks with alternating stochastic gradients.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    train = commands.add_parser("train", help="run a configured experiment sweep")
    train.add_argument("--config", required=True, help="path to a key = value config file")
    train.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    train.add_argument("--seeds", type=_parse_seed_list, default=None, help="seed list override")
    train.add_argument(
        "--optimizer", type=_parse_kind_list, default=None, help="optimizer kind list override"
    )
    return parser


def run_train(args, out=None):
    out = sys.stdout if out is None else out
    config = load_config(args.config)
    config = with_overrides(
        config, seeds=args.seeds, optimizer_kinds=args.optimizer, output_dir=args.out
    )
    histories, summary = run_experiment(config, progress=lambda line: print(line, file=out))
    paths = emit_outputs(histories, summary, config.output_dir)
    print(f"wrote {len(paths)} files to {config.output_dir}", file=out)
    failed = [h for h in histories if h.stop_reason == "non_finite"]
    for history in failed:
        print(
            f"FAILED {history.optimizer} seed {history.seed}: {history.diagnostic}",
            file=out,
        )
    return 1 if failed else 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run_train(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
