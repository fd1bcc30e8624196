"""Pre-conditioned first-order least-squares solvers with sketched Hessians.

All methods share one update skeleton driven by a coefficient schedule:

    x_1 = x_0 + b_1 * H_S^-1 grad f(x_0)
    x_t = x_{t-1} + b_t * H_S^-1 grad f(x_{t-1}) + (1 - a_t) (x_{t-2} - x_{t-1})

where H_S = (SA)^T (SA) is the sketched Hessian, factored once (or once per
iteration for the refreshed variant).  The gradient is always recomputed from
the full data as A^T (A x - b); there is no residual-update shortcut, so the
numerical behavior stays transparent.  Each run records the squared
prediction-seminorm error at every iteration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import CholeskyFactor, LsProblem, cholesky, cholesky_solve, prediction_error_sq
from .orthopoly import (
    CoefficientSchedule,
    gaussian_coefficients,
    heavy_ball_coefficients,
    srht_coefficients,
    srht_params,
)
from .sketching import RngStream, make_sketch
from .spectral import srht_support_edges

METHODS = ("gaussian-opt", "srht-opt", "hb-fixed", "hb-refreshed")

_DEFAULT_EMBEDDING = {
    "gaussian-opt": "gaussian",
    "srht-opt": "srht",
    "hb-fixed": "srht",
    "hb-refreshed": "srht",
}

DIVERGENCE_FACTOR = 1e12


class SolverDiverged(Exception):
    """Iterates became non-finite or grew past DIVERGENCE_FACTOR * initial error."""

    def __init__(self, message: str, trace: "SolverTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SolverConfig:
    """One solver run: method, sketch size, iteration count and randomness.

    delta is the conservative (1+delta)a / (1-delta)b perturbation of the
    schedule; it defaults to 0.01 for the optimal schedules (finite-sample
    spectra spill slightly past the asymptotic support, where the unperturbed
    optimal polynomials grow without the damping) and 0 for the Heavy-ball
    methods, whose step/momentum inputs carry their own margins.  mu/beta are
    required for the Heavy-ball methods.  x0_policy is 'zero' or 'gaussian'
    (scaled by x0_scale).  embedding overrides the method default (the
    'identity' embedding is a test hook giving the exact Hessian).
    """

    method: str
    m: int
    iters: int
    seed: int = 0
    delta: float | None = None
    embedding: str | None = None
    mu: float | None = None
    beta: float | None = None
    x0_policy: str = "zero"
    x0_scale: float = 1.0
    store_iterates: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.delta is not None and not (0.0 <= self.delta <= 0.1):
            raise ValueError(f"delta must lie in [0, 0.1], got {self.delta}")
        if self.method in ("hb-fixed", "hb-refreshed") and (self.mu is None or self.beta is None):
            raise ValueError(f"method {self.method!r} requires explicit mu and beta")
        if self.x0_policy not in ("zero", "gaussian"):
            raise ValueError(f"unknown x0 policy {self.x0_policy!r}")

    @property
    def effective_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        return 0.01 if self.method in ("gaussian-opt", "srht-opt") else 0.0

    @property
    def effective_embedding(self) -> str:
        return self.embedding or _DEFAULT_EMBEDDING[self.method]


@dataclass
class SolverTrace:
    """Per-iteration squared prediction errors plus run bookkeeping."""

    errors_sq: np.ndarray
    m_effective: int
    wall_clock: dict = field(default_factory=dict)
    iterates: list | None = None


@dataclass(frozen=True)
class Preconditioner:
    """Cholesky factor of the sketched Gram matrix H_S = (SA)^T (SA)."""

    factor: CholeskyFactor
    kind: str
    m_effective: int


def edge_heavy_ball_params(gamma: float, xi: float, delta: float = 0.0):
    """Heavy-ball (step size, momentum) tuned to the SRHT spectral edges.

    With delta > 0 the edges themselves are perturbed conservatively,
    lambda -> (1-delta) lambda and Lambda -> (1+delta) Lambda, before the
    parameters are formed.
    """
    lam, Lam = srht_support_edges(gamma, xi)
    lam *= 1.0 - delta
    Lam *= 1.0 + delta
    sl, sL = math.sqrt(lam), math.sqrt(Lam)
    mu_h = 4.0 / (1.0 / sL + 1.0 / sl) ** 2
    beta_h = ((sL - sl) / (sL + sl)) ** 2
    return mu_h, beta_h


def build_preconditioner(problem: LsProblem, embedding: str, m: int, rng: RngStream) -> Preconditioner:
    """Sketch the data and factor the sketched Gram matrix."""
    if embedding != "identity" and m <= problem.d:
        raise ValueError(f"sketch size m={m} must exceed d={problem.d}")
    result, _ = make_sketch(embedding, problem.A, None, m, rng)
    H = result.SA.T @ result.SA
    return Preconditioner(factor=cholesky(H), kind=result.kind, m_effective=result.m_effective)


def _build_schedule(problem: LsProblem, config: SolverConfig, m_effective: int) -> CoefficientSchedule:
    T, delta = config.iters, config.effective_delta
    if config.method == "gaussian-opt":
        return gaussian_coefficients(problem.d / config.m, T, delta)
    if config.method == "srht-opt":
        # The schedule tracks the sketch actually drawn: for the SRHT the
        # realized row count fluctuates (Binomial), and a schedule built from
        # the nominal m assumes a narrower spectral support than realized,
        # which makes the optimal polynomial blow up in a sizable fraction of
        # trials.  The realized ratio keeps the support aligned.
        params = srht_params(problem.d / problem.n, m_effective / problem.n)
        return srht_coefficients(params, T, delta)
    return heavy_ball_coefficients(config.mu, config.beta, T, delta)


def _initial_point(problem: LsProblem, config: SolverConfig) -> np.ndarray:
    if config.x0_policy == "zero":
        return np.zeros(problem.d)
    g = RngStream(config.seed, 1).generator()
    return config.x0_scale * g.standard_normal(problem.d)


def solve(problem: LsProblem, config: SolverConfig) -> SolverTrace:
    """Run one solver and return its error trace.

    The trace holds ||A (x_t - x_star)||^2 for t = 0..iters, the realized
    sketch size, and per-phase wall-clock timings (sketch, factor, iterate).

    Raises
    ------
    SolverDiverged
        On a non-finite error or growth past DIVERGENCE_FACTOR times the
        initial error; the exception carries the finite partial trace.
    """
    A, b = problem.A, problem.b
    T = config.iters
    refreshed = config.method == "hb-refreshed"
    embedding = config.effective_embedding
    timings = {"sketch": 0.0, "factor": 0.0, "iterate": 0.0}

    if embedding != "identity" and config.m <= problem.d:
        raise ValueError(f"sketch size m={config.m} must exceed d={problem.d}")

    def make_precond(stream: RngStream) -> Preconditioner:
        t0 = time.perf_counter()
        result, _ = make_sketch(embedding, A, None, config.m, stream)
        t1 = time.perf_counter()
        factor = cholesky(result.SA.T @ result.SA)
        timings["sketch"] += t1 - t0
        timings["factor"] += time.perf_counter() - t1
        return Preconditioner(factor=factor, kind=result.kind, m_effective=result.m_effective)

    sketch_stream = RngStream(config.seed, 0)
    precond = make_precond(sketch_stream)
    m_effective = precond.m_effective
    schedule = _build_schedule(problem, config, m_effective)
    a_sched, b_sched = schedule.a_delta, schedule.b_delta

    x_prev = _initial_point(problem, config)
    x_prev2 = x_prev
    errors = np.full(T + 1, np.nan)
    errors[0] = prediction_error_sq(problem, x_prev)
    iterates = [x_prev.copy()] if config.store_iterates else None

    for t in range(1, T + 1):
        if refreshed and t > 1:
            # stream (seed, 0) seeds the first sketch, (seed, 1) the x0 draw;
            # iteration t >= 2 resamples from (seed, t).
            precond = make_precond(sketch_stream.child(t))
        t0 = time.perf_counter()
        grad = A.T @ (A @ x_prev - b)
        step = cholesky_solve(precond.factor, grad)
        x_t = x_prev + b_sched[t] * step
        if t >= 2:
            x_t = x_t + (1.0 - a_sched[t]) * (x_prev2 - x_prev)
        timings["iterate"] += time.perf_counter() - t0
        err = prediction_error_sq(problem, x_t)
        if not np.isfinite(err) or (errors[0] > 0 and err > DIVERGENCE_FACTOR * errors[0]):
            partial = SolverTrace(
                errors_sq=errors[:t].copy(), m_effective=m_effective,
                wall_clock=dict(timings), iterates=iterates,
            )
            raise SolverDiverged(f"diverged at iteration {t}: error {err:.3e}", partial)
        errors[t] = err
        if config.store_iterates:
            iterates.append(x_t.copy())
        x_prev2, x_prev = x_prev, x_t

    return SolverTrace(
        errors_sq=errors, m_effective=m_effective,
        wall_clock=dict(timings), iterates=iterates,
    )
