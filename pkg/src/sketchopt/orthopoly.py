"""Orthogonal-polynomial machinery behind the optimal first-order updates.

Contains the three-term polynomial family orthogonal under the
Marchenko-Pastur law, the shifted Chebyshev family used as a cross-check, the
scaling parameters of the SRHT density, the stable ratio recursion producing
per-iteration update coefficients (a_t, b_t) for both embeddings, and the
theoretical loss / rate formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import srht_support_edges


@dataclass(frozen=True)
class SrhtParams:
    """Scaling parameters derived from the SRHT density support [lambda_h, Lambda_h].

    tau / c rescale the support onto a Marchenko-Pastur-like window
    [alpha, beta]; omega / kappa map the shifted window back onto a
    Marchenko-Pastur family; eta = 1 + kappa + omega * c drives the
    normalization recursion u_{t+1} = eta * u_t - kappa * u_{t-1}.
    """

    gamma: float
    xi: float
    lambda_h: float
    Lambda_h: float
    tau: float
    c: float
    alpha: float
    beta: float
    omega: float
    kappa: float
    eta: float


@dataclass(frozen=True)
class CoefficientSchedule:
    """Per-iteration update coefficients for x_t = x_{t-1} + b_t H^-1 g + (1-a_t)(x_{t-2}-x_{t-1}).

    Arrays are indexed by iteration number: a[t] is valid for t >= 2 and b[t]
    for t >= 1 (unused slots hold NaN so accidental use fails loudly).
    a_delta / b_delta carry the conservative perturbation (1+delta) * a and
    (1-delta) * b used when a schedule drives an actual solver.
    """

    kind: str
    a: np.ndarray
    b: np.ndarray
    delta: float = 0.0

    @property
    def iterations(self) -> int:
        return self.a.shape[0] - 1

    @property
    def a_delta(self) -> np.ndarray:
        return (1.0 + self.delta) * self.a

    @property
    def b_delta(self) -> np.ndarray:
        return (1.0 - self.delta) * self.b


@dataclass(frozen=True)
class RateReport:
    """Asymptotic per-iteration error contraction rates.

    rho: optimal method with a fixed Gaussian sketch; rho_h: optimal method
    with a fixed SRHT/Haar sketch; rho_h_ref: best Heavy-ball method with
    refreshed SRHT sketches (comparison curve only).
    """

    rho: float
    rho_h: float
    rho_h_ref: float


def mp_poly_eval(t: int, rho: float, x):
    """Evaluate the degree-t polynomial of the Marchenko-Pastur orthogonal family.

    P_0 = 1, P_1 = 1 - x, P_t = (1 + rho - x) P_{t-1} - rho P_{t-2}; all
    members satisfy P_t(0) = 1.  x may be a scalar or an array.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not (0.0 < rho < 1.0):
        raise ValueError(f"need rho in (0, 1), got {rho}")
    x = np.asarray(x, dtype=np.float64)
    p_prev = np.ones_like(x)
    if t == 0:
        return float(p_prev) if x.ndim == 0 else p_prev
    p = 1.0 - x
    for _ in range(2, t + 1):
        p_prev, p = p, (1.0 + rho - x) * p - rho * p_prev
    return float(p) if x.ndim == 0 else p


def chebyshev_q_eval(k: int, rho: float, x):
    """Shifted Chebyshev polynomial of the second kind, orthonormal under x*mp(x)dx.

    Q_0 = 1, Q_1 = (x - (1+rho)) / sqrt(rho), Q_{k+1} = Q_1 * Q_k - Q_{k-1}.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    q_prev = np.ones_like(x)
    if k == 0:
        return float(q_prev) if x.ndim == 0 else q_prev
    base = (x - (1.0 + rho)) / math.sqrt(rho)
    q = base.copy()
    for _ in range(2, k + 1):
        q_prev, q = q, base * q - q_prev
    return float(q) if x.ndim == 0 else q


def srht_params(gamma: float, xi: float) -> SrhtParams:
    """Scaling parameters for the SRHT coefficient schedule."""
    lam, Lam = srht_support_edges(gamma, xi)
    sqrt_lam, sqrt_Lam = math.sqrt(lam), math.sqrt(Lam)
    tau = ((sqrt_Lam - sqrt_lam) / (sqrt_Lam + sqrt_lam)) ** 2
    c = 4.0 / (1.0 / sqrt_Lam + 1.0 / sqrt_lam) ** 2
    alpha = (1.0 - math.sqrt(tau)) ** 2
    beta = (1.0 + math.sqrt(tau)) ** 2
    if alpha <= c:
        raise ValueError(f"degenerate parameters: alpha={alpha} <= c={c}")
    sa, sb = math.sqrt(alpha - c), math.sqrt(beta - c)
    omega = 4.0 / (sb + sa) ** 2
    kappa = ((sb - sa) / (sb + sa)) ** 2
    eta = 1.0 + kappa + omega * c
    if eta * eta / 4.0 <= kappa:
        raise ValueError(f"degenerate parameters: eta^2/4={eta * eta / 4.0} <= kappa={kappa}")
    return SrhtParams(
        gamma=gamma, xi=xi, lambda_h=lam, Lambda_h=Lam, tau=tau, c=c,
        alpha=alpha, beta=beta, omega=omega, kappa=kappa, eta=eta,
    )


def u_ratio_roots(params: SrhtParams):
    """Roots x1 > x2 > 0 of x^2 - eta x + kappa, the ratio-recursion fixed points."""
    disc = math.sqrt(params.eta ** 2 / 4.0 - params.kappa)
    return params.eta / 2.0 + disc, params.eta / 2.0 - disc


def u_closed_form(params: SrhtParams, t: int) -> float:
    """Normalization u_t from the explicit solution of its linear recursion."""
    x1, x2 = u_ratio_roots(params)
    return ((x1 - params.kappa) * x1 ** t + (params.kappa - x2) * x2 ** t) / (x1 - x2)


def srht_coefficients(params: SrhtParams, T: int, delta: float = 0.0) -> CoefficientSchedule:
    """SRHT-optimal schedule a_t = eta * u_{t-1}/u_t, b_t = -omega*c * u_{t-1}/u_t.

    Only the bounded ratio v_t = u_t / u_{t-1} is propagated (u_t itself grows
    geometrically); v_1 = eta - kappa and v_t = eta - kappa / v_{t-1}.  The
    t = 1 slot of b extends the t >= 2 formula, matching the degree-1 optimal
    polynomial 1 - (omega*c / (1 + omega*c)) x.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    a = np.full(T + 1, np.nan)
    b = np.full(T + 1, np.nan)
    omega_c = params.omega * params.c
    v = params.eta - params.kappa
    b[1] = -omega_c / v
    for t in range(2, T + 1):
        v = params.eta - params.kappa / v
        a[t] = params.eta / v
        b[t] = -omega_c / v
    return CoefficientSchedule(kind="srht-opt", a=a, b=b, delta=delta)


def gaussian_coefficients(rho: float, T: int, delta: float = 0.0) -> CoefficientSchedule:
    """Gaussian-optimal schedule: constant a_t = 1 + rho, b_t = -(1 - rho)^2."""
    if not (0.0 < rho < 1.0):
        raise ValueError(f"need rho in (0, 1), got {rho}")
    if T < 1:
        raise ValueError("T must be >= 1")
    a = np.full(T + 1, np.nan)
    b = np.full(T + 1, np.nan)
    a[2:] = 1.0 + rho
    b[1:] = -((1.0 - rho) ** 2)
    return CoefficientSchedule(kind="gaussian-opt", a=a, b=b, delta=delta)


def heavy_ball_coefficients(mu: float, beta: float, T: int, delta: float = 0.0) -> CoefficientSchedule:
    """Constant Heavy-ball schedule: a_t = 1 + beta, b_t = -mu."""
    if T < 1:
        raise ValueError("T must be >= 1")
    a = np.full(T + 1, np.nan)
    b = np.full(T + 1, np.nan)
    a[2:] = 1.0 + beta
    b[1:] = -mu
    return CoefficientSchedule(kind="heavy-ball", a=a, b=b, delta=delta)


def srht_poly_eval(t: int, params: SrhtParams, x):
    """Degree-t optimal error polynomial for a fixed SRHT sketch, at x = 1/eigenvalue.

    Evaluates P_t(omega * c * (x - 1)) / P_t(-omega * c) where P is the
    Marchenko-Pastur family with parameter kappa; the value at 0 is 1.
    Intended for moderate t (the normalization grows geometrically).
    """
    omega_c = params.omega * params.c
    num = mp_poly_eval(t, params.kappa, omega_c * (np.asarray(x, dtype=np.float64) - 1.0))
    den = mp_poly_eval(t, params.kappa, -omega_c)
    return num / den


def theoretical_loss_gaussian(t: int, rho: float) -> float:
    """Optimal normalized error after t iterations with a fixed Gaussian sketch."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return float(rho) ** t


def rate_report(gamma: float, xi: float) -> RateReport:
    """Asymptotic convergence rates for aspect ratios gamma = d/n, xi = m/n."""
    if not (0.0 < gamma < xi < 1.0):
        raise ValueError(f"need 0 < gamma < xi < 1, got gamma={gamma}, xi={xi}")
    rho = gamma / xi
    rho_h = rho * (1.0 - xi) / (1.0 - gamma)
    rho_h_ref = rho * xi * (1.0 - xi) / (gamma ** 2 + xi - 2.0 * gamma * xi)
    return RateReport(rho=rho, rho_h=rho_h, rho_h_ref=rho_h_ref)
