"""Command-line entry point: ``blindeq {closed-form,gaussianity,compare,sweep}``."""

import argparse
import json
import logging
import sys

from .errors import BlindEqError, ConfigError
from .harness import config as cfgmod
from .harness import experiments


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _tap_list(text):
    out = []
    for v in text.split(","):
        c = complex(v.strip().replace(" ", ""))
        out.append(c.real if c.imag == 0 else c)
    return out


def _nu(text):
    return text if text == "auto" else int(text)


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


COMMANDS = {
    "closed-form": (experiments.run_closed_form_report, "per-delay closed-form theory tables"),
    "gaussianity": (experiments.run_gaussianity, "residual-ISI normality diagnostics"),
    "compare": (experiments.run_comparison, "LMS vs blind receiver tap comparison"),
    "sweep": (experiments.run_sweep, "grid sweep of the configured algorithm"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--seed", type=_u64)
    common.add_argument("--out")
    common.add_argument("--channel", type=_tap_list, help="comma-separated taps, e.g. 1,0.5-0.2j")
    common.add_argument("--M", type=_int_list, help="comma-separated equalizer lengths")
    common.add_argument("--snr_db", type=_float_list, help="comma-separated SNRs in dB")
    common.add_argument("--n_symbols", type=int)
    common.add_argument("--algorithm", choices=cfgmod.ALGORITHMS)
    common.add_argument("--mu", type=float)
    common.add_argument("--lam", type=float)
    common.add_argument("--theta", type=float)
    common.add_argument("--nu", type=_nu, help="'auto' or an explicit delay")
    common.add_argument("--kp", type=float)
    common.add_argument("--ki", type=float)
    common.add_argument("--bins", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="blindeq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def resolve_config(args):
    base = cfgmod.comparison_defaults() if args.command == "compare" else cfgmod.ExperimentConfig()
    if args.config:
        base = cfgmod.load_config(args.config, base)
    overrides = {
        name: getattr(args, name)
        for name in ("seed", "out", "channel", "M", "snr_db", "n_symbols", "algorithm", "mu",
                     "lam", "theta", "nu", "kp", "ki", "bins", "jobs")
    }
    return base.merged(overrides).validate()


def _fail(kind, message, problems=None, code=1):
    payload = {"error": kind, "message": message}
    if problems:
        payload["fields"] = [{"field": f, "problem": p} for f, p in problems]
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        run, _ = COMMANDS[args.command]
        rows = run(cfg)
    except ConfigError as exc:
        return _fail("config", str(exc), exc.problems, code=2)
    except OSError as exc:
        return _fail("io", str(exc))
    except BlindEqError as exc:
        return _fail(type(exc).__name__, str(exc))
    for row in rows:
        print(json.dumps({k: (v if not hasattr(v, "item") else v.item()) for k, v in row.items()}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
