"""Command-line entry point: `sketchopt {density,converge,rates}`.

Examples
--------
sketchopt density --n 8192 --d 1640 --m 1720,3280,4915 --seed 42 --out density.csv
sketchopt converge --n 4096 --d 800 --m 2000 --methods gaussian-opt,srht-opt --trials 20 \
    --iters 30 --seed 42 --out conv.csv
sketchopt rates --n 8192 --d 500,1250,2000 --m-grid 12 --trials 20 --seed 42 --out rates.csv

The SKETCHOPT_THREADS environment variable caps the trial worker pool.
"""

from __future__ import annotations

import argparse

from .harness import ExperimentConfig, run_experiment

_DEFAULT_N = {"density": 8192, "converge": 4096, "rates": 8192}
_FULL_N = 8192


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=None, help="sample size (padded for SRHT)")
    p.add_argument("--d", type=_int_list, required=True, help="column count(s), comma separated")
    p.add_argument("--m", type=_int_list, default=(), help="sketch sizes, comma separated")
    p.add_argument("--seed", type=int, default=42, help="base seed for all randomness")
    p.add_argument("--out", default=None, help="output file path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_solver_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--methods", default="gaussian-opt,srht-opt",
                   help="comma list of gaussian-opt,srht-opt,hb-fixed,hb-refreshed")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--iters", type=int, default=16)
    p.add_argument("--delta", type=float, default=None,
                   help="schedule perturbation; default 0.01 for srht-opt, 0 otherwise")
    p.add_argument("--mu", type=float, default=None, help="Heavy-ball step size")
    p.add_argument("--beta", type=float, default=None, help="Heavy-ball momentum")
    p.add_argument("--decay", type=float, default=0.98,
                   help="geometric singular-value decay of the synthetic data")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchopt",
        description="Benchmarks for randomized pre-conditioned least-squares solvers.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)

    p_density = sub.add_parser("density", help="empirical vs theoretical sketch spectra")
    _add_common(p_density)
    p_density.add_argument("--haar", action="store_true",
                           help="also sketch with a Haar embedding (slow: dense SVD)")
    p_density.add_argument("--grid-step", type=float, default=1e-5,
                           help="support discretization step for the emitted curves")

    p_conv = sub.add_parser("converge", help="error ratio per iteration vs theory")
    _add_common(p_conv)
    _add_solver_opts(p_conv)
    p_conv.add_argument("--full", action="store_true",
                        help=f"use n={_FULL_N} instead of the desk-scale default")

    p_rates = sub.add_parser("rates", help="fitted contraction rate vs sketch size")
    _add_common(p_rates)
    _add_solver_opts(p_rates)
    p_rates.add_argument("--m-grid", type=int, default=12,
                         help="number of sketch sizes when --m is not given")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    n = args.n
    if n is None:
        n = _FULL_N if getattr(args, "full", False) else _DEFAULT_N[args.experiment]
    return ExperimentConfig(
        experiment=args.experiment,
        n=n,
        d=args.d,
        m_list=args.m,
        trials=getattr(args, "trials", 1),
        iters=getattr(args, "iters", 16),
        seed=args.seed,
        methods=tuple(getattr(args, "methods", "gaussian-opt,srht-opt").split(",")),
        out_path=args.out,
        format=args.format,
        delta=getattr(args, "delta", None),
        mu=getattr(args, "mu", None),
        beta=getattr(args, "beta", None),
        haar=getattr(args, "haar", False),
        grid_step=getattr(args, "grid_step", 1e-5),
        m_grid=getattr(args, "m_grid", None),
        singular_decay=getattr(args, "decay", 0.98),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run_experiment(config_from_args(args))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
