"""Limiting spectral densities of sketched Gram matrices.

Implements the Marchenko-Pastur law (Gaussian sketches) and the limiting
density of C_S = U^T S^T S U for SRHT / Haar sketches, in raw and n/m-rescaled
form, together with their complex Stieltjes transform, CDFs, and the
Kolmogorov-Smirnov comparison against empirical eigenvalue distributions.

All densities share the shape sqrt((hi - x)(x - lo)) * smooth(x) on their
support, so integrals use a Gauss-Legendre rule after the substitution
x = lo + (hi - lo) * sin^2(theta), which removes the square-root edge
behavior exactly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import sym_eigenvalues

QUAD_NODES = 2000


def mp_support_edges(rho: float):
    """Support endpoints (1 -+ sqrt(rho))^2 of the Marchenko-Pastur law."""
    if not (0.0 < rho < 1.0):
        raise ValueError(f"need rho in (0, 1), got {rho}")
    s = math.sqrt(rho)
    return (1.0 - s) ** 2, (1.0 + s) ** 2


def srht_support_edges(gamma: float, xi: float):
    """Support endpoints of the SRHT limiting density of C_S."""
    if not (0.0 < gamma < xi < 1.0):
        raise ValueError(f"need 0 < gamma < xi < 1, got gamma={gamma}, xi={xi}")
    u = math.sqrt((1.0 - gamma) * xi)
    v = math.sqrt((1.0 - xi) * gamma)
    return (u - v) ** 2, (u + v) ** 2


def srht_rescaled_edges(gamma: float, xi: float):
    """Support endpoints for the n/m-rescaled SRHT spectrum (edges / xi)."""
    lo, hi = srht_support_edges(gamma, xi)
    return lo / xi, hi / xi


@dataclass(frozen=True)
class DensitySpec:
    """Tagged limiting-density selector with its support endpoints.

    family is one of 'mp', 'srht', 'srht-rescaled'.  For 'mp' only rho is
    meaningful; the SRHT families carry (gamma, xi) and the derived
    rho = gamma / xi.
    """

    family: str
    rho: float
    gamma: float | None
    xi: float | None
    support_lo: float
    support_hi: float

    @classmethod
    def mp(cls, rho: float) -> "DensitySpec":
        lo, hi = mp_support_edges(rho)
        return cls("mp", rho, None, None, lo, hi)

    @classmethod
    def srht(cls, gamma: float, xi: float) -> "DensitySpec":
        lo, hi = srht_support_edges(gamma, xi)
        return cls("srht", gamma / xi, gamma, xi, lo, hi)

    @classmethod
    def srht_rescaled(cls, gamma: float, xi: float) -> "DensitySpec":
        lo, hi = srht_rescaled_edges(gamma, xi)
        return cls("srht-rescaled", gamma / xi, gamma, xi, lo, hi)


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """Sorted (optionally rescaled) eigenvalues of a symmetric matrix."""

    eigenvalues: np.ndarray
    rescale: float


def _check_ac_regime(spec: DensitySpec) -> None:
    # For gamma + xi >= 1 the absolutely continuous part cannot carry total
    # mass one (at xi = 1 the spectrum collapses to a point), so density and
    # CDF evaluation are restricted to gamma + xi < 1.
    if spec.family != "mp" and spec.gamma + spec.xi >= 1.0:
        raise ValueError(
            f"density restricted to gamma + xi < 1, got {spec.gamma} + {spec.xi}"
        )


def _edge_free_factor(spec: DensitySpec, x: np.ndarray) -> np.ndarray:
    """Density divided by sqrt((hi - x)(x - lo)), safe to call inside support."""
    if spec.family == "mp":
        return 1.0 / (2.0 * math.pi * spec.rho * x)
    if spec.family == "srht":
        return 1.0 / (2.0 * spec.gamma * math.pi * x * (1.0 - x))
    if spec.family == "srht-rescaled":
        return 1.0 / (2.0 * spec.rho * math.pi * x * (1.0 - spec.xi * x))
    raise ValueError(f"unknown density family {spec.family!r}")


def density_eval(spec: DensitySpec, x):
    """Evaluate the limiting density at x (scalar or array); zero off support."""
    _check_ac_regime(spec)
    x_arr = np.asarray(x, dtype=np.float64)
    lo, hi = spec.support_lo, spec.support_hi
    inside = (x_arr > lo) & (x_arr < hi)
    out = np.zeros_like(x_arr, dtype=np.float64)
    if np.any(inside):
        xi_in = x_arr[inside]
        out[inside] = np.sqrt((hi - xi_in) * (xi_in - lo)) * _edge_free_factor(spec, xi_in)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def support_edges(spec: DensitySpec):
    return spec.support_lo, spec.support_hi


@lru_cache(maxsize=8)
def _gl_theta(nodes: int):
    # Gauss-Legendre nodes/weights mapped to theta in [0, pi/2].
    t, w = np.polynomial.legendre.leggauss(nodes)
    theta = (t + 1.0) * (math.pi / 4.0)
    return theta, w * (math.pi / 4.0)


def sqrt_edge_rule(lo: float, hi: float, nodes: int = QUAD_NODES):
    """Quadrature rule for integrands sqrt((hi - x)(x - lo)) * g(x) on [lo, hi].

    Returns (x, w) such that sum(w * g(x)) approximates the integral; the
    square-root factor is folded into the weights analytically.
    """
    theta, glw = _gl_theta(nodes)
    s2, c2 = np.sin(theta) ** 2, np.cos(theta) ** 2
    x = lo + (hi - lo) * s2
    w = 2.0 * (hi - lo) ** 2 * glw * s2 * c2
    return x, w


def density_quadrature(spec: DensitySpec, nodes: int = QUAD_NODES):
    """Nodes and weights integrating against the density: sum(w*h(x)) ~ E[h]."""
    _check_ac_regime(spec)
    x, w = sqrt_edge_rule(spec.support_lo, spec.support_hi, nodes)
    return x, w * _edge_free_factor(spec, x)


def cdf_eval(spec: DensitySpec, x, nodes: int = QUAD_NODES):
    """CDF of the limiting density at x (scalar or array), clipped to [0, 1]."""
    _check_ac_regime(spec)
    x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    lo, hi = spec.support_lo, spec.support_hi
    xq = np.clip(x_arr, lo, hi)
    theta, glw = _gl_theta(nodes)
    s2 = np.sin(theta) ** 2
    sin2t = np.sin(2.0 * theta)
    span = xq - lo
    # t = lo + (x - lo) sin^2(theta): the lower edge singular factor becomes
    # smooth in theta; the upper factor sqrt(hi - t) stays bounded away from 0.
    t = lo + span[:, None] * s2[None, :]
    dens = density_eval(spec, t)
    vals = dens * span[:, None] * sin2t[None, :]
    out = np.clip(vals @ glw, 0.0, 1.0)
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def stieltjes_mh(gamma: float, xi: float, z: complex) -> complex:
    """Stieltjes transform of the SRHT limiting density at z off [0, inf).

    The square-root branch is chosen so that the transform maps the upper
    half-plane to itself (and is positive on the negative real axis), which
    makes (1/pi) * Im m(x + i0+) recover the density.
    """
    if not (0.0 < gamma < xi < 1.0):
        raise ValueError(f"need 0 < gamma < xi < 1, got gamma={gamma}, xi={xi}")
    z = complex(z)
    if z.imag == 0.0 and z.real >= 0.0:
        raise ValueError(f"z = {z} lies on the non-negative real axis")
    w = cmath.sqrt(
        (gamma + xi - 2.0 + z) ** 2 + 4.0 * (z - 1.0) * (1.0 - gamma) * (1.0 - xi)
    )

    def candidate(root):
        return (1.0 / (2.0 * gamma)) * (
            (2.0 * gamma - 1.0) / (1.0 - z)
            + (xi - gamma) / (z * (1.0 - z))
            - root / (z * (1.0 - z))
        )

    if z.imag == 0.0:
        # Negative real axis: the principal root is real and the minus sign
        # yields the positive transform.
        return candidate(w)
    m_plus, m_minus = candidate(w), candidate(-w)
    sign = 1.0 if z.imag > 0.0 else -1.0
    if sign * m_plus.imag >= sign * m_minus.imag:
        return m_plus
    return m_minus


def empirical_spectrum(C, rescale: float = 1.0) -> EmpiricalSpectrum:
    """Sorted eigenvalues of a symmetric matrix, multiplied by rescale."""
    eig = sym_eigenvalues(C) * rescale
    return EmpiricalSpectrum(eigenvalues=eig, rescale=rescale)


def ks_distance(es: EmpiricalSpectrum, spec: DensitySpec) -> float:
    """Kolmogorov-Smirnov distance between an empirical spectrum and a density.

    Computed as the exact sup of |F_emp - F| which, for a continuous F, is
    attained at eigenvalue locations from one side or the other of each jump.
    """
    eig = np.sort(np.asarray(es.eigenvalues, dtype=np.float64))
    k = eig.size
    if k == 0:
        raise ValueError("empty spectrum")
    F = np.atleast_1d(cdf_eval(spec, eig))
    steps = np.arange(1, k + 1) / k
    return float(max(np.max(np.abs(steps - F)), np.max(np.abs(steps - 1.0 / k - F))))
