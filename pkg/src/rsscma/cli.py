"""Command line entry point: ``rsscma run | analyze | validate-codebook``.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from rsscma.config import ConfigError, load_config
from rsscma.ldpc import AlistError
from rsscma.rate_split import complexity_ratio, overloading_factor
from rsscma.scma import CodebookError, load_codebook_set
from rsscma.sim import emit_csv, format_csv, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
DEFAULT_ALPHAS = "0,0.1,0.25,0.5,0.75,0.9,1"

log = logging.getLogger("rsscma")


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)

    def progress(p):
        log.info(
            "Eb/N0 %6.2f dB  trials %d  SER %.4e  BER %.4e  BLER %.4e  (%.1f s)",
            p.ebn0_db, p.trials, p.ser, p.ber, p.bler, p.wall_time,
        )

    try:
        report = run_sweep(cfg, threads=args.threads, progress=progress)
    except OSError as exc:
        log.error("cannot load input: %s", exc)
        return EXIT_IO
    if args.out:
        try:
            emit_csv(report, args.out)
        except OSError as exc:
            log.error("cannot write %s: %s", args.out, exc)
            return EXIT_IO
    else:
        sys.stdout.write(format_csv(report))
    return EXIT_OK


def _parse_alphas(text: str) -> list[float]:
    try:
        return [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise ConfigError(f"bad --alpha-list {text!r}") from None


def _cmd_analyze(args) -> int:
    J, K, M = args.users, args.resources, args.alphabet
    if J < K or K < 1:
        raise ConfigError("need users >= resources >= 1")
    degree = args.resource_degree
    if degree is None:
        # every user on two resources
        if (2 * J) % K:
            raise ConfigError("give --resource-degree; 2*users/resources is not an integer")
        degree = 2 * J // K
    print(f"# users={J} resources={K} alphabet={M} resource_degree={degree}")
    print("alpha,lambda,lambda_percent")
    for a in _parse_alphas(args.alpha_list):
        lam = overloading_factor(a, J, K)
        print(f"{a!r},{lam!r},{100 * lam:.2f}")
    print(f"# complexity_ratio={complexity_ratio(M, degree)!r}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cb = load_codebook_set(args.path)
    except OSError as exc:
        log.error("cannot read %s: %s", args.path, exc)
        return EXIT_IO
    print(f"ok: K={cb.K} J={cb.J} M={cb.M}")
    print(f"user degrees: {cb.indicator.user_degree.tolist()}")
    print(f"resource degrees: {cb.indicator.resource_degree.tolist()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsscma", description="Rate-splitting SCMA link simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a Monte-Carlo sweep")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="CSV output path (default: stdout)")
    r.add_argument("--threads", type=int, default=1)
    r.set_defaults(func=_cmd_run)

    a = sub.add_parser("analyze", help="overloading factor and complexity tables")
    a.add_argument("--users", type=int, default=6)
    a.add_argument("--resources", type=int, default=4)
    a.add_argument("--alphabet", type=int, default=4)
    a.add_argument("--alpha-list", default=DEFAULT_ALPHAS)
    a.add_argument("--resource-degree", type=int)
    a.set_defaults(func=_cmd_analyze)

    v = sub.add_parser("validate-codebook", help="check a codebook file")
    v.add_argument("--path", required=True)
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, CodebookError, AlistError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
