"""Command-line front end.

::

    bose1d scan    --config configs/harmonic_n5.ini --out results
    bose1d vmc     --config ... [--seed S] [--workers W] [--format csv,json]
    bose1d dmc     --config ...
    bose1d density --config ...
    bose1d oracle  busch --g 2.0921
    bose1d oracle  fd --trap double-well
    bose1d oracle  quad --g 2.0921 --n 3
    bose1d selftest [--full]

Exit codes: 0 success, 1 failed self-test, 2 configuration error,
3 sampler abort (diagnostics written next to the results).
"""
import argparse
import dataclasses
import json
import logging
import math
import sys

from . import __version__
from .config import load, parse_g
from .errors import ConfigError, DomainError, SamplerAbort
from .experiment import emit_outputs, run_experiment, write_diagnostics
from .model import HarmonicTrap, preset

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3

log = logging.getLogger("bose1d")


def _formats(text):
    return tuple(f.strip() for f in text.split(",") if f.strip())


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="bose1d", description="Monte Carlo energies and "
                                "densities of 1D bosons with contact interactions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment(name, help_text):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, help="experiment INI file")
        s.add_argument("--out", help="output directory (overrides [output] directory)")
        s.add_argument("--seed", type=_u64, help="override [run] seed")
        s.add_argument("--workers", type=_positive_int, default=1,
                       help="worker processes for VMC (1 = reproducibility mode)")
        s.add_argument("--format", type=_formats, help="comma-separated subset of csv,json")
        return s

    experiment("scan", "run the configured samplers over all g values")
    experiment("vmc", "variational Monte Carlo only")
    experiment("dmc", "diffusion Monte Carlo only")
    experiment("density", "samplers plus one-body and pair histograms")

    o = sub.add_parser("oracle", help="deterministic reference values")
    o.add_argument("kind", choices=("busch", "fd", "quad"))
    o.add_argument("--g", default="2.0921", help="coupling (number or 'inf')")
    o.add_argument("--trap", default="harmonic")
    o.add_argument("--n", type=int, default=2, help="particles for quad (2 or 3)")
    o.add_argument("--beta", type=float, default=1.0)

    t = sub.add_parser("selftest", help="invariant checks; --full adds the acceptance suite")
    t.add_argument("--full", action="store_true")
    return p


def _experiment(args):
    try:
        cfg = load(args.config, seed=args.seed, out_dir=args.out, formats=args.format)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command in ("vmc", "dmc"):
        cfg = dataclasses.replace(cfg, sampler=args.command)
    elif args.command == "density":
        obs = dataclasses.replace(cfg.observables, density=True,
                                  pair=cfg.system.n_particles >= 2)
        cfg = dataclasses.replace(cfg, observables=obs)
    try:
        record = run_experiment(cfg, workers=args.workers)
    except SamplerAbort as exc:
        path = write_diagnostics(cfg.out_dir, cfg.digest(), str(exc), exc.diagnostics)
        print(f"sampler aborted: {exc}; diagnostics in {path}", file=sys.stderr)
        return EXIT_ABORT
    for path in emit_outputs(record, cfg.out_dir, cfg.formats):
        print(path)
    return EXIT_OK


def _oracle(args):
    from . import oracle
    from .trial import build_trial
    try:
        g = parse_g(args.g)[0]
        if args.kind == "busch":
            value = oracle.busch_energy_two_body(g)
        elif args.kind == "fd":
            trap = HarmonicTrap() if args.trap == "harmonic" else preset(args.trap)
            value = oracle.fd_ground_energy(trap)
        else:
            trap = HarmonicTrap()
            value = oracle.quad_energy_cpwf(build_trial("cpwf", trap, g, beta=args.beta),
                                            trap, args.n)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({"oracle": args.kind, "g": args.g, "trap": args.trap,
                      "value": float(format(value, ".12g")) if math.isfinite(value) else None},
                     sort_keys=True))
    return EXIT_OK


def _selftest(args):
    from .selftest import run_checks
    results = run_checks()
    if args.full:
        from .acceptance import run_all
        results += run_all()
    return EXIT_OK if all(c.passed for c in results) else EXIT_FAILED


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    if args.command == "oracle":
        return _oracle(args)
    if args.command == "selftest":
        return _selftest(args)
    return _experiment(args)


if __name__ == "__main__":
    sys.exit(main())
