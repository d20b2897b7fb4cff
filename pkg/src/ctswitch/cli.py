"""Command-line interface.

Symbol files are plain text: integers separated by whitespace or commas.  A
file holding a single run of digits (``0110100``) is read one symbol per
digit.  Failures print one JSON line ``{"error": ..., "message": ...}`` on
stderr and exit with status 1.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path
from typing import Sequence

from . import codec
from .experiments import (
    DEFAULT_ALPHAS,
    ExperimentConfig,
    run_bench,
    run_experiment_a,
    run_experiment_b,
    run_oracle_check,
    write_csv,
)
from .simgen import generate, load_spec
from .switcher import SwitchConfig, make_switcher


def read_symbols(text: str) -> list[int]:
    body = text.strip()
    if re.fullmatch(r"[0-9]+", body):
        return [int(c) for c in body]
    return [int(tok) for tok in re.split(r"[\s,]+", body) if tok]


def format_symbols(xs: Sequence[int]) -> str:
    if all(0 <= x < 10 for x in xs):
        return "".join(str(int(x)) for x in xs) + "\n"
    return " ".join(str(int(x)) for x in xs) + "\n"


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _alphas(text: str) -> tuple[float, ...]:
    return tuple(float(a) for a in text.split(",") if a.strip())


def _switch_config(args, alphabet_size: int, alpha: float | None = None) -> SwitchConfig:
    return SwitchConfig(
        alphabet_size=alphabet_size,
        depth=args.depth,
        alpha=args.alpha if alpha is None else alpha,
        g=args.g,
        beta=args.beta,
        pad_symbol=args.pad_symbol,
        prune_epsilon=getattr(args, "prune_epsilon", 0.0),
    )


def _load_input(args) -> tuple[list[int], int]:
    path = Path(args.input)
    if args.input_format == "bytes":
        return list(path.read_bytes()), 256
    xs = read_symbols(path.read_text())
    size = args.alphabet_size or max(2, max(xs, default=0) + 1)
    return xs, size


# subcommands -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    spec = load_spec(args.spec)
    _write_text(args.out, format_symbols(generate(spec, args.seed)))
    return 0


def cmd_compress(args) -> int:
    xs, size = _load_input(args)
    config = _switch_config(args, size)
    report = codec.encode_report(xs, config)
    out = args.out or f"{args.input}.ctsw"
    Path(out).write_bytes(report.data)
    summary = {
        "symbols": len(xs),
        "bytes": len(report.data),
        "payload_bits": report.payload_bits,
        "ideal_bits": round(report.ideal_bits, 3),
        "out": out,
    }
    print(json.dumps(summary), file=sys.stderr)
    return 0


def cmd_decompress(args) -> int:
    data = Path(args.input).read_bytes()
    xs = codec.decode(data)
    config, _ = codec.unpack_header(data)
    fmt = args.output_format
    if fmt == "auto":
        fmt = "bytes" if config.alphabet_size == 256 else "symbols"
    if fmt == "bytes":
        if config.alphabet_size > 256:
            raise ValueError("alphabet too large for byte output")
        payload = bytes(xs)
        if args.out is None or args.out == "-":
            sys.stdout.buffer.write(payload)
        else:
            Path(args.out).write_bytes(payload)
    else:
        _write_text(args.out, format_symbols(xs))
    return 0


def cmd_predict(args) -> int:
    xs, size = _load_input(args)
    sw = make_switcher(_switch_config(args, size))
    rows = []
    for t, x in enumerate(xs, start=1):
        tau = sw.last_changepoint_estimate()
        p = sw.advance(x)
        rows.append((t, x, p, -math.log2(p), tau))
    write_csv(args.out, ("t", "symbol", "prob", "code_length_bits", "tau_hat"), rows, sys.stdout)
    return 0


def cmd_oracle_check(args) -> int:
    report = run_oracle_check(args.n_max, args.instances, args.seed, alpha=args.alpha, perturb=args.perturb)
    print(report.summary())
    if not report.passed:
        raise OracleMismatch(report.summary())
    return 0


class OracleMismatch(RuntimeError):
    pass


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        spec_path=args.spec,
        alphas=_alphas(args.alpha),
        trials=args.trials,
        seed=args.seed,
        g=args.g,
        beta=args.beta,
        depth=args.depth,
        threads=args.threads,
        out=None if args.out in (None, "-") else args.out,
    )


def cmd_exp_a(args) -> int:
    run_experiment_a(_experiment_config(args), stream=sys.stdout)
    return 0


def cmd_exp_b(args) -> int:
    run_experiment_b(_experiment_config(args), stream=sys.stdout)
    return 0


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    config = SwitchConfig(2, args.depth, args.alpha, args.g, args.beta, args.pad_symbol, args.prune_epsilon)
    rows = run_bench(sizes, config, args.seed, args.repeats)
    write_csv(None if args.out in (None, "-") else args.out, ("N", "seconds", "mode"), rows, sys.stdout)
    return 0


# parser --------------------------------------------------------------------------

def _model_flags(p: argparse.ArgumentParser, alpha_default: float | str = 0.01, list_alpha: bool = False) -> None:
    if list_alpha:
        p.add_argument("--alpha", default=alpha_default, help="comma-separated change rates")
    else:
        p.add_argument("--alpha", type=float, default=alpha_default, help="change-point rate")
    p.add_argument("--depth", type=int, default=2, help="maximum context depth d")
    p.add_argument("--g", type=float, default=0.5, help="default node split probability")
    p.add_argument("--beta", type=float, default=0.5, help="symmetric Dirichlet parameter")


def _pad_flag(p):
    p.add_argument("--pad-symbol", type=int, default=0, help="symbol used to pad segment-initial contexts")


def _input_flags(p):
    p.add_argument("input")
    p.add_argument("--input-format", choices=("symbols", "bytes"), default="symbols")
    p.add_argument("--alphabet-size", type=int, default=None, help="default: max symbol + 1 (at least 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctswitch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a sequence from a piecewise source spec")
    p.add_argument("--spec", default=None, help="JSON spec (default: bundled 3x100 source)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compress", help="compress a symbol or byte file")
    _input_flags(p)
    _model_flags(p)
    _pad_flag(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compress, prune_epsilon=0.0)

    p = sub.add_parser("decompress", help="restore a compressed file")
    p.add_argument("input")
    p.add_argument("--out", default=None)
    p.add_argument("--output-format", choices=("auto", "symbols", "bytes"), default="auto")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("predict", help="per-symbol coding probabilities and change-point estimates as CSV")
    _input_flags(p)
    _model_flags(p)
    _pad_flag(p)
    p.add_argument("--prune-epsilon", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("oracle-check", help="compare the switcher with the brute-force mixture")
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=None, help="fix alpha instead of drawing it")
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_oracle_check)

    for name, func, help_text in (
        ("exp-a", cmd_exp_a, "average redundancy per time step"),
        ("exp-b", cmd_exp_b, "average last-change-point estimate per time step"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--spec", default=None)
        _model_flags(p, ",".join(str(a) for a in DEFAULT_ALPHAS), list_alpha=True)
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("bench", help="time the switcher over input lengths (single-threaded)")
    p.add_argument("--sizes", default="1000,2000")
    _model_flags(p)
    _pad_flag(p)
    p.add_argument("--prune-epsilon", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one error line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
