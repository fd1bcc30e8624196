"""Benchmark harness: synthetic problems, experiment drivers and file output.

Three experiments are reproduced at desk scale:

* density   -- empirical spectrum of the rescaled sketched Gram matrix vs the
               theoretical limiting densities, with KS distances;
* converge  -- per-iteration mean error ratios for the solver methods vs the
               theoretical rate curves;
* rates     -- fitted empirical contraction rates vs sketch size.

Outputs are CSV (UTF-8, header row, shortest round-trip float formatting) or a
JSON mirror carrying the same rows plus a config/meta block.  Given the same
config (seed included), output files are byte-identical: trials fan out over a
thread pool with per-trial random streams and are reduced in trial order, and
wall-clock timings are printed, never written to files.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .linalg import LsProblem, NotPositiveDefinite
from .orthopoly import rate_report
from .sketching import RngStream, SketchTooThin, haar_sketch, pad_to_power_of_two, srht_apply
from .solvers import SolverConfig, SolverDiverged, edge_heavy_ball_params, solve
from .spectral import DensitySpec, density_eval, empirical_spectrum, ks_distance

# A trial can fail by divergence or by drawing an unusable (rank-deficient)
# sketch; both are flagged per row instead of aborting the sweep.
_TRIAL_FAILURES = (SolverDiverged, SketchTooThin, NotPositiveDefinite)

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SyntheticSpec:
    """Synthetic data model: geometric singular values and a planted solution.

    noise_scale / planted_scale default to 1/sqrt(n) and 1/sqrt(d).
    """

    singular_decay: float = 0.98
    noise_scale: float | None = None
    planted_scale: float | None = None

    def __post_init__(self):
        if not (0.0 < self.singular_decay <= 1.0):
            raise ValueError(f"singular decay must lie in (0, 1], got {self.singular_decay}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run; see the CLI for the command-line surface."""

    experiment: str
    n: int
    d: tuple[int, ...]
    m_list: tuple[int, ...]
    trials: int = 20
    iters: int = 16
    seed: int = 42
    methods: tuple[str, ...] = ("gaussian-opt", "srht-opt")
    out_path: str | None = None
    format: str = "csv"
    delta: float | None = None
    mu: float | None = None
    beta: float | None = None
    haar: bool = False
    grid_step: float = 1e-5
    m_grid: int | None = None
    singular_decay: float = 0.98

    def __post_init__(self):
        if self.experiment not in ("density", "converge", "rates"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.n < 1 or self.trials < 1 or self.iters < 1:
            raise ValueError("n, trials and iters must be positive")
        if not self.d or any(di < 1 for di in self.d):
            raise ValueError("d must hold positive counts")
        if self.experiment != "rates" and len(self.d) != 1:
            raise ValueError(f"experiment {self.experiment!r} takes a single d")
        if self.experiment != "rates" and not self.m_list:
            raise ValueError(f"experiment {self.experiment!r} needs explicit sketch sizes")
        if self.m_list and min(self.m_list) <= max(self.d):
            raise ValueError("every sketch size must exceed d")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")


def _mix_seed(base: int, *parts: int) -> int:
    """Deterministic 64-bit seed combining (splitmix-style)."""
    h = base & _MASK64
    for p in parts:
        h ^= (p + 0x9E3779B97F4A7C15 + ((h << 6) & _MASK64) + (h >> 2)) & _MASK64
        h = (h * 0xBF58476D1CE4E5B9) & _MASK64
        h ^= h >> 31
    return h


def _workers(n_tasks: int) -> int:
    env = os.environ.get("SKETCHOPT_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def _pool_map(fn, tasks):
    """Order-preserving map over a thread pool; order makes reductions deterministic."""
    w = _workers(len(tasks))
    if w == 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, tasks))


def gen_synthetic(n: int, d: int, spec: SyntheticSpec | None = None,
                  rng: RngStream | None = None, return_planted: bool = False):
    """Generate an ill-conditioned least-squares instance with a planted model.

    A = U diag(decay^j) V^T with U, V orthonormal factors of independent
    Gaussian draws (j = 1..d, so cond(A) = decay^(1-d));
    b = A x_planted + noise_scale * N(0, I_n).
    """
    if not (n >= d >= 1):
        raise ValueError(f"need n >= d >= 1, got n={n}, d={d}")
    spec = spec or SyntheticSpec()
    rng = rng or RngStream(0)
    g = rng.generator()
    U = np.linalg.svd(g.standard_normal((n, d)), full_matrices=False)[0]
    V = np.linalg.svd(g.standard_normal((d, d)), full_matrices=False)[0]
    sigma = spec.singular_decay ** np.arange(1, d + 1)
    A = (U * sigma) @ V.T
    planted_scale = spec.planted_scale if spec.planted_scale is not None else 1.0 / math.sqrt(d)
    noise_scale = spec.noise_scale if spec.noise_scale is not None else 1.0 / math.sqrt(n)
    x_pl = planted_scale * g.standard_normal(d)
    b = A @ x_pl + noise_scale * g.standard_normal(n)
    problem = LsProblem.from_data(A, b)
    return (problem, x_pl) if return_planted else problem


def fit_rate(errors_sq, t_min: int = 2, t_max: int | None = None) -> float:
    """Per-iteration contraction rate from the slope of log errors.

    Fits log(errors_sq[t]) over the window [t_min, t_max] (t_max defaults to
    min(15, last index)) by least squares and returns exp(slope).  Trailing
    non-positive entries (converged to machine precision) shrink the window;
    fewer than 4 usable points is an error.
    """
    errors = np.asarray(getattr(errors_sq, "errors_sq", errors_sq), dtype=np.float64)
    last = errors.shape[0] - 1
    hi = min(t_max if t_max is not None else 15, last)
    if hi - t_min < 3:
        raise ValueError(f"window [{t_min}, {hi}] has fewer than 4 points")
    window = errors[t_min:hi + 1]
    bad = ~(np.isfinite(window) & (window > 0.0))
    if bad.any():
        hi = t_min + int(np.argmax(bad)) - 1
        if hi - t_min < 3:
            raise ValueError("fewer than 4 positive error values in the fit window")
        window = errors[t_min:hi + 1]
    t = np.arange(t_min, hi + 1, dtype=np.float64)
    slope = np.polyfit(t, np.log(window), 1)[0]
    return float(np.exp(slope))


def _resolve_hb_params(cfg: ExperimentConfig, gamma: float, xi: float):
    """Heavy-ball (mu, beta): explicit values, else spectral-edge parameters.

    Default edges are conservatively perturbed by delta (0.01 unless
    overridden), which perturbs the eigenvalue estimates rather than the
    resulting parameters.
    """
    if cfg.mu is not None and cfg.beta is not None:
        return cfg.mu, cfg.beta
    delta = cfg.delta if cfg.delta is not None else 0.01
    return edge_heavy_ball_params(gamma, xi, delta)


def _solver_config(cfg: ExperimentConfig, method: str, m: int, seed: int,
                   gamma: float, xi: float) -> SolverConfig:
    mu = beta = None
    delta = cfg.delta
    if method in ("hb-fixed", "hb-refreshed"):
        # Heavy-ball perturbation enters through the edge eigenvalues, not
        # the (constant) schedule, so the schedule delta stays at zero.
        mu, beta = _resolve_hb_params(cfg, gamma, xi)
        delta = 0.0
    return SolverConfig(
        method=method, m=m, iters=cfg.iters, seed=seed,
        delta=delta, mu=mu, beta=beta,
    )


def _theory_rate(method: str, n: int, d: int, m: int) -> float:
    rates = rate_report(d / n, m / n)
    if method == "gaussian-opt":
        return rates.rho
    if method == "hb-refreshed":
        return rates.rho_h_ref
    return rates.rho_h


def _prepare_problem(cfg: ExperimentConfig, n: int, d: int, stream: RngStream) -> LsProblem:
    problem = gen_synthetic(n, d, SyntheticSpec(singular_decay=cfg.singular_decay), stream)
    needs_pow2 = any(mth in ("srht-opt", "hb-fixed", "hb-refreshed") for mth in cfg.methods)
    if needs_pow2 and (n & (n - 1)) != 0:
        A, b, _ = pad_to_power_of_two(problem.A, problem.b)
        problem = LsProblem.from_data(A, b)
    return problem


def run_convergence_experiment(cfg: ExperimentConfig):
    """Mean per-iteration error ratios per method and sketch size.

    Row columns: method, m, t, mean_ratio, std_ratio, theory_ratio,
    n_diverged.  All trials share one (A, b); randomness is split by
    per-(trial, method, m) streams.  Failed trials (divergence, or a sketch
    draw too thin to factor) are counted in n_diverged and excluded from the
    aggregates rather than aborting the sweep.
    """
    if cfg.experiment != "converge":
        raise ValueError("config is not a convergence experiment")
    d = cfg.d[0]
    problem = _prepare_problem(cfg, cfg.n, d, RngStream(cfg.seed, 0))
    n = problem.n
    rows = []
    for m_idx, m in enumerate(cfg.m_list):
        for meth_idx, method in enumerate(cfg.methods):
            def one_trial(trial, _method=method, _m=m, _mi=m_idx, _ei=meth_idx):
                run_seed = _mix_seed(cfg.seed, _ei + 1, _mi + 1, trial + 1)
                sconf = _solver_config(cfg, _method, _m, run_seed, d / n, _m / n)
                try:
                    return solve(problem, sconf).errors_sq
                except _TRIAL_FAILURES:
                    return None

            traces = _pool_map(one_trial, range(cfg.trials))
            ok = [tr for tr in traces if tr is not None]
            n_div = cfg.trials - len(ok)
            theory = _theory_rate(method, n, d, m)
            if ok:
                E = np.stack(ok)
                mean = E.mean(axis=0)
                std = E.std(axis=0)
                mean_ratio = mean / mean[0]
                std_ratio = std / mean[0]
            else:
                mean_ratio = std_ratio = np.full(cfg.iters + 1, np.nan)
            for t in range(cfg.iters + 1):
                rows.append({
                    "method": method, "m": m, "t": t,
                    "mean_ratio": float(mean_ratio[t]),
                    "std_ratio": float(std_ratio[t]),
                    "theory_ratio": theory ** t,
                    "n_diverged": n_div,
                })
    _emit(cfg, rows, ["method", "m", "t", "mean_ratio", "std_ratio",
                      "theory_ratio", "n_diverged"])
    return rows


def run_rates_experiment(cfg: ExperimentConfig):
    """Fitted empirical rate vs sketch size, with the theoretical rate columns.

    Row columns: method, d, m, rate_emp, rate_theory_gaussian,
    rate_theory_srht.  Rates are fitted on the mean error curve across trials.
    """
    if cfg.experiment != "rates":
        raise ValueError("config is not a rates experiment")
    rows = []
    for d_idx, d in enumerate(cfg.d):
        problem = _prepare_problem(cfg, cfg.n, d, RngStream(cfg.seed, d_idx))
        n = problem.n
        m_values = cfg.m_list or _default_m_grid(n, d, cfg.m_grid or 12)
        for m_idx, m in enumerate(m_values):
            for meth_idx, method in enumerate(cfg.methods):
                def one_trial(trial, _method=method, _m=m, _idx=(d_idx, m_idx, meth_idx)):
                    run_seed = _mix_seed(cfg.seed, _idx[0] + 1, _idx[2] + 1, _idx[1] + 1, trial + 1)
                    sconf = _solver_config(cfg, _method, _m, run_seed, d / n, _m / n)
                    try:
                        return solve(problem, sconf).errors_sq
                    except _TRIAL_FAILURES:
                        return None

                traces = [tr for tr in _pool_map(one_trial, range(cfg.trials)) if tr is not None]
                if not traces:
                    rate_emp = float("nan")
                else:
                    rate_emp = fit_rate(np.stack(traces).mean(axis=0))
                rates = rate_report(d / n, m / n)
                rows.append({
                    "method": method, "d": d, "m": m,
                    "rate_emp": rate_emp,
                    "rate_theory_gaussian": rates.rho,
                    "rate_theory_srht": rates.rho_h,
                })
    _emit(cfg, rows, ["method", "d", "m", "rate_emp",
                      "rate_theory_gaussian", "rate_theory_srht"])
    return rows


def _default_m_grid(n: int, d: int, count: int):
    lo, hi = 1.3 * d, 0.7 * n
    if lo >= hi:
        raise ValueError(f"no room for a sketch grid with n={n}, d={d}")
    grid = np.unique(np.linspace(lo, hi, count).round().astype(int))
    return tuple(int(m) for m in grid if m > d)


def run_density_experiment(cfg: ExperimentConfig):
    """Empirical vs theoretical spectral densities of the rescaled Gram matrix.

    For each sketch size, sketches the orthonormal factor U of a synthetic
    data matrix, rescales the d eigenvalues of (SU)^T (SU) by n/m, and
    compares against the rescaled sketch density and the Marchenko-Pastur
    curve on a fine grid.  Writes a curve table (family, m, x, density, cdf)
    plus a summary (m, ks_srht, ks_haar, min_eig, max_eig, edge_lo_theory,
    edge_hi_theory).  Returns (curve_rows, summary_rows).
    """
    if cfg.experiment != "density":
        raise ValueError("config is not a density experiment")
    n, d = cfg.n, cfg.d[0]
    if (n & (n - 1)) != 0:
        raise ValueError(f"density experiment needs n to be a power of two, got {n}")
    gamma = d / n
    for m in cfg.m_list:
        if gamma + m / n >= 1.0:
            raise ValueError(f"gamma + xi >= 1 for m={m}; density undefined")
    g = RngStream(cfg.seed, 0).generator()
    U = np.linalg.svd(g.standard_normal((n, d)), full_matrices=False)[0]

    curve_rows, summary_rows = [], []
    for m_idx, m in enumerate(cfg.m_list):
        xi = m / n
        rescale = n / m
        spec_srht = DensitySpec.srht_rescaled(gamma, xi)
        spec_mp = DensitySpec.mp(d / m)
        sk, _ = srht_apply(U, None, m, RngStream(cfg.seed, 1 + 2 * m_idx))
        es = empirical_spectrum(sk.SA.T @ sk.SA, rescale)
        ks_srht = ks_distance(es, spec_srht)
        ks_haar = float("nan")
        if cfg.haar:
            hk, _ = haar_sketch(U, None, m, RngStream(cfg.seed, 2 + 2 * m_idx))
            ks_haar = ks_distance(empirical_spectrum(hk.SA.T @ hk.SA, rescale), spec_srht)
        summary_rows.append({
            "m": m, "ks_srht": ks_srht, "ks_haar": ks_haar,
            "min_eig": float(es.eigenvalues[0]),
            "max_eig": float(es.eigenvalues[-1]),
            "edge_lo_theory": spec_srht.support_lo,
            "edge_hi_theory": spec_srht.support_hi,
        })
        for family, spec in (("mp", spec_mp), ("srht-rescaled", spec_srht)):
            x, dens = _density_curve(spec, cfg.grid_step)
            cdf = _trapezoid_cdf(x, dens)
            for xi_val, dv, cv in zip(x, dens, cdf):
                curve_rows.append({
                    "family": family, "m": m, "x": float(xi_val),
                    "density": float(dv), "cdf": float(cv),
                })
    _emit(cfg, curve_rows, ["family", "m", "x", "density", "cdf"])
    if cfg.out_path:
        _write_rows(_summary_path(cfg.out_path), summary_rows,
                    ["m", "ks_srht", "ks_haar", "min_eig", "max_eig",
                     "edge_lo_theory", "edge_hi_theory"], cfg)
    return curve_rows, summary_rows


def _density_curve(spec: DensitySpec, step: float):
    lo, hi = spec.support_lo, spec.support_hi
    count = int(math.floor((hi - lo) / step)) + 1
    x = lo + step * np.arange(count)
    return x, density_eval(spec, x)


def _trapezoid_cdf(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    np.cumsum((y[1:] + y[:-1]) * 0.5 * np.diff(x), out=out[1:])
    return out


def _summary_path(out_path: str) -> str:
    root, ext = os.path.splitext(out_path)
    return f"{root}.summary{ext or '.csv'}"


def _meta(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": cfg.experiment, "n": cfg.n, "d": list(cfg.d),
        "m_list": list(cfg.m_list), "trials": cfg.trials, "iters": cfg.iters,
        "seed": cfg.seed, "methods": list(cfg.methods),
        "singular_decay": cfg.singular_decay,
        "rng_policy": "shared data (A, b); independent per-(trial, method, m) streams",
    }


def _write_rows(path: str, rows, columns, cfg: ExperimentConfig) -> None:
    if cfg.format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"meta": _meta(cfg), "rows": rows}, fh, indent=1)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns])


def _emit(cfg: ExperimentConfig, rows, columns) -> None:
    if cfg.out_path:
        _write_rows(cfg.out_path, rows, columns, cfg)


def run_experiment(cfg: ExperimentConfig):
    """Dispatch an ExperimentConfig to its driver, reporting wall-clock time."""
    start = time.perf_counter()
    if cfg.experiment == "density":
        result = run_density_experiment(cfg)
    elif cfg.experiment == "converge":
        result = run_convergence_experiment(cfg)
    else:
        result = run_rates_experiment(cfg)
    elapsed = time.perf_counter() - start
    print(f"{cfg.experiment}: {elapsed:.1f}s" + (f" -> {cfg.out_path}" if cfg.out_path else ""))
    return result
