"""Command-line entry point: ``rabi2q {predict,sweep,converge,spectrum}``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

import numpy as np

from .eigen import converge_cutoff, lowest_eigenpairs
from .errors import ConfigError, TooFewPointsError
from .fock import FockCutoff
from .model import ModelParams, SectorLabel, build_full_hamiltonian, build_sector_hamiltonian
from .sweep import (
    AUTO_ENERGY_TOL,
    AUTO_N_CAP,
    AUTO_N_START,
    detect_transition,
    emit,
    make_config,
    predict,
    read_config_file,
    run_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNCONVERGED = 3

log = logging.getLogger("rabi2q")

# flag -> SweepConfig field
_CONFIG_FLAGS = (
    "scenario", "omega", "gamma_over_omega", "eps_over_gamma", "lambda_ratio", "g_min", "g_max",
    "g_steps", "cutoff", "eta_bias_over_gamma", "format", "out",
)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--config", help="flat key=value file with sweep config fields")
    parser.add_argument("--seed", type=int, default=0, help="seed for random parameter draws")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("-v", "--verbose", action="store_true")


def _sweep_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", choices=("counter-biased", "unbiased"))
    parser.add_argument("--omega")
    parser.add_argument("--gamma-over-omega", help="comma-separated ladder, e.g. 10,100,1000")
    parser.add_argument("--eps-over-gamma")
    parser.add_argument("--lambda-ratio", help="lam1:lam2 for the unbiased scenario")
    parser.add_argument("--g-min")
    parser.add_argument("--g-max")
    parser.add_argument("--g-steps")
    parser.add_argument("--cutoff", help="'auto' or a fixed n_max")
    parser.add_argument("--eta-bias-over-gamma")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rabi2q", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="closed-form limit table")
    _common(p)
    _sweep_flags(p)

    p = sub.add_parser("sweep", help="numerical g sweep over a gamma/omega ladder")
    _common(p)
    _sweep_flags(p)
    p.add_argument("--no-detect", action="store_true", help="skip the transition summary on stderr")

    p = sub.add_parser("converge", help="cutoff-doubling study at a single point")
    _common(p)
    _sweep_flags(p)
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--sector", default="plus", choices=("plus", "minus"))
    p.add_argument("-k", type=int, default=2)
    p.add_argument("--n-start", type=int, default=AUTO_N_START)
    p.add_argument("--n-cap", type=int, default=AUTO_N_CAP)
    p.add_argument("--energy-tol", type=float, help="absolute tolerance (default 1e-8 * gamma)")

    p = sub.add_parser("spectrum", help="lowest-k energies for fixed couplings")
    _common(p)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--eps1", type=float, default=0.0)
    p.add_argument("--eps2", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--lam1", type=float, default=0.0)
    p.add_argument("--lam2", type=float, default=0.0)
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("-k", type=int, default=4)
    p.add_argument("--random", action="store_true", help="draw eps, gamma, lam uniformly in [0, 5] from --seed")
    return parser


def _config_from_args(args: argparse.Namespace):
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {name: getattr(args, name, None) for name in _CONFIG_FLAGS}
    return make_config(file_values, **overrides)


def _write(rows, fmt: str, out: str | None) -> None:
    text = emit(rows, fmt, out)
    if out is None or out == "-":
        sys.stdout.write(text)


def _cmd_predict(args) -> int:
    cfg = _config_from_args(args)
    rows = predict(cfg)
    if rows:
        _write(rows, cfg.format, cfg.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    records = run_sweep(cfg, workers=args.workers)
    _write(records, cfg.format, cfg.out)
    if not args.no_detect:
        for x in cfg.gamma_over_omega:
            subset = [r for r in records if r.gamma_over_omega == x]
            try:
                report = detect_transition(subset)
            except TooFewPointsError as exc:
                log.info("gamma/omega=%g: %s", x, exc)
                continue
            print(
                f"gamma/omega={x:g}: g_c estimates {report.estimates} (+/- {report.uncertainty:.4g}), "
                f"sectors separate at g={report.diagnostics.get('separation_g')}",
                file=sys.stderr,
            )
    return EXIT_UNCONVERGED if any(not r.converged for r in records) else EXIT_OK


def _cmd_converge(args) -> int:
    cfg = _config_from_args(args)
    x = cfg.gamma_over_omega[0]
    p = cfg.params(x, args.g)
    sector = SectorLabel.parse(args.sector)
    tol = args.energy_tol if args.energy_tol is not None else AUTO_ENERGY_TOL * p.gamma
    res = converge_cutoff(
        lambda c: build_sector_hamiltonian(p, sector, c), k=args.k, energy_tol=tol,
        n_start=args.n_start, n_cap=args.n_cap,
    )
    rows = []
    prev = None
    for n, vals in res.history:
        row = {"n_max": n}
        for i, e in enumerate(vals):
            row[f"E{i}"] = float(e)
            row[f"dE{i}"] = float(abs(e - prev[i])) if prev is not None else float("nan")
        rows.append(row)
        prev = vals
    _write(rows, cfg.format, cfg.out)
    print(
        f"cutoff_used={res.cutoff_used.n_max} converged={res.converged} residual={res.max_residual:.2e}",
        file=sys.stderr,
    )
    return EXIT_OK if res.converged else EXIT_UNCONVERGED


def _cmd_spectrum(args) -> int:
    if args.random:
        rng = np.random.default_rng(args.seed)
        eps1, eps2, gamma, lam1, lam2 = rng.uniform(0.0, 5.0, size=5)
        p = ModelParams(args.omega, eps1, eps2, gamma, lam1, lam2)
    else:
        p = ModelParams(args.omega, args.eps1, args.eps2, args.gamma, args.lam1, args.lam2)
    cutoff = FockCutoff(args.n_max)
    rows = []
    for label, op in (
        ("plus", build_sector_hamiltonian(p, SectorLabel.PLUS, cutoff)),
        ("minus", build_sector_hamiltonian(p, SectorLabel.MINUS, cutoff)),
        ("full", build_full_hamiltonian(p, cutoff)),
    ):
        res = lowest_eigenpairs(op, k=min(args.k, op.dim))
        for i, (e, r) in enumerate(zip(res.eigenvalues, res.residual_norms)):
            rows.append({"block": label, "index": i, "energy": float(e), "residual": float(r)})
    _write(rows, args.format or "csv", args.out)
    return EXIT_OK


_COMMANDS = {"predict": _cmd_predict, "sweep": _cmd_sweep, "converge": _cmd_converge, "spectrum": _cmd_spectrum}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"rabi2q: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
