"""Command-line face: scenario runs plus two direct-computation verbs.

Exit codes: 0 success, 1 validation failure, 2 numerical abort, 3 I/O
failure.  Argument errors count as validation.  The only environment
knob is GRAVTWIN_WORKERS (transform worker threads); it never changes
results, only speed.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._version import __version__
from .config import ConfigError, load_config
from .core import ParticleSpecies, UnitSystem, ValidationError
from .evolve import NumericalAbort
from .interferometer import InterferometerConfig, correction, cow_neutron_preset
from .potential import PairPotential
from .scenarios import csv_bytes, run


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route through the
    # validation path instead so exit codes stay as documented.
    def error(self, message: str):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gravtwin", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a scenario from a config file")
    p_run.add_argument("--config", required=True, help="key = value scenario file")
    p_run.add_argument("--out", required=True, help="output directory (fresh per run)")

    p_pot = sub.add_parser("potential", help="tabulate the pair potential (SI units)")
    p_pot.add_argument("--mass", type=float, required=True, help="sphere mass, kg")
    p_pot.add_argument("--radius", type=float, required=True, help="sphere radius, m")
    p_pot.add_argument("--r-max", type=float, required=True, help="largest separation, m")
    p_pot.add_argument("--samples", type=int, default=1024)
    p_pot.add_argument("--out", required=True, help="CSV path")

    p_cow = sub.add_parser("cow", help="two-arm fringe sweep with the pair correction")
    p_cow.add_argument(
        "--delta-sweep", required=True, metavar="START:STOP:N",
        help="phase-difference action sweep, J s",
    )
    p_cow.add_argument("--preset", choices=["neutron"], help="built-in geometry")
    p_cow.add_argument("--mass", type=float, help="particle mass, kg (custom geometry)")
    p_cow.add_argument("--radius", type=float, help="particle radius, m")
    p_cow.add_argument("--L", type=float, help="arm scale, m")
    p_cow.add_argument("--v", type=float, help="beam speed, m/s")
    p_cow.add_argument("--out", required=True, help="CSV path")

    sub.add_parser("version", help="print version and exit")
    return parser


def _parse_sweep(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--delta-sweep expects START:STOP:N, got {text!r}")
    try:
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--delta-sweep expects numbers START:STOP:N, got {text!r}") from None
    if n < 2:
        raise ConfigError(f"--delta-sweep needs at least 2 points, got {n}")
    if not stop > start:
        raise ConfigError(f"--delta-sweep needs STOP > START, got {text!r}")
    return start, stop, n


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = run(cfg, args.out)
    print(f"{manifest.scenario}: {manifest.status}; outputs in {args.out}")
    return 0


def _cmd_potential(args) -> int:
    species = ParticleSpecies(mass=args.mass, radius=args.radius)
    pair = PairPotential(species=species, units=UnitSystem.si())
    if args.samples < 2:
        raise ConfigError(f"--samples must be >= 2, got {args.samples}")
    if args.r_max <= 0:
        raise ConfigError(f"--r-max must be > 0, got {args.r_max}")
    r = np.linspace(0.0, args.r_max, args.samples)
    Path(args.out).write_bytes(csv_bytes(("r", "V_G"), zip(r, pair.evaluate(r))))
    print(f"wrote {args.samples} samples to {args.out}")
    return 0


def _cmd_cow(args) -> int:
    custom = [args.mass, args.radius, args.L, args.v]
    if args.preset is not None:
        if any(v is not None for v in custom):
            raise ConfigError("--preset conflicts with --mass/--radius/--L/--v")
        base = cow_neutron_preset()
    else:
        if any(v is None for v in custom):
            raise ConfigError("custom geometry needs all of --mass --radius --L --v")
        base = InterferometerConfig(
            species=ParticleSpecies(mass=args.mass, radius=args.radius),
            L=args.L,
            v=args.v,
            delta=0.0,
            units=UnitSystem.si(),
        )
    start, stop, n = _parse_sweep(args.delta_sweep)
    rows = []
    for d in np.linspace(start, stop, n):
        res = correction(replace(base, delta=float(d)))
        rows.append((d, res.prob_zeroth, res.Aa_star.real, res.Aa_star.imag, res.S_G0, res.S_G1))
    Path(args.out).write_bytes(
        csv_bytes(("delta", "prob_zeroth", "re_Aa_star", "im_Aa_star", "S_G0", "S_G1"), rows)
    )
    print(f"wrote {n} sweep points to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb == "version":
            print(f"gravtwin {__version__}")
            return 0
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "potential":
            return _cmd_potential(args)
        if args.verb == "cow":
            return _cmd_cow(args)
        raise AssertionError(args.verb)
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValidationError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
