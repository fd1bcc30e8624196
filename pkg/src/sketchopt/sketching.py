"""Subspace embeddings: Gaussian, SRHT and Haar sketches.

The SRHT used here randomly permutes rows, flips signs, applies the
orthonormal Walsh-Hadamard transform, and then keeps each row independently
with probability m/n, so the realized sketch size m_tilde is Binomial(n, m/n).
All randomness flows through counter-based Philox streams so that a
(base_seed, stream_index) pair fully determines a sketch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INV_SQRT2 = 1.0 / math.sqrt(2.0)


class SketchTooThin(Exception):
    """Realized SRHT row count fell below d: the sketched Gram matrix is singular."""


@dataclass(frozen=True)
class RngStream:
    """Splittable counter-based random stream.

    Identical (base_seed, stream_index) pairs reproduce identical draws, and
    distinct stream indices give statistically independent streams, so trials
    can run in parallel in any order.
    """

    base_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        key = ((self.base_seed & 0xFFFFFFFFFFFFFFFF) << 64) | (
            self.stream_index & 0xFFFFFFFFFFFFFFFF
        )
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, offset: int) -> "RngStream":
        return RngStream(self.base_seed, self.stream_index + offset)


@dataclass(frozen=True)
class AspectRatios:
    """Finite-sample dimensions n, d, m and the ratios that control all rates."""

    n: int
    d: int
    m: int

    def __post_init__(self):
        if not (0 < self.d < self.m < self.n):
            raise ValueError(f"need 0 < d < m < n, got n={self.n}, d={self.d}, m={self.m}")

    @property
    def gamma(self) -> float:
        return self.d / self.n

    @property
    def xi(self) -> float:
        return self.m / self.n

    @property
    def rho(self) -> float:
        return self.d / self.m


@dataclass(frozen=True)
class SketchResult:
    """A sketched matrix S @ A together with its provenance.

    m_effective equals the nominal m for Gaussian and Haar sketches; for the
    SRHT it is the realized Binomial row count.
    """

    kind: str
    SA: np.ndarray
    m_effective: int
    stream: RngStream


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def fwht_in_place(a: np.ndarray) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform along axis 0, in place.

    Accepts a 1-d vector or a 2-d array of stacked columns whose leading
    dimension is a power of two.  Each butterfly level is scaled by 1/sqrt(2),
    so the full transform is orthonormal (and involutive).  The input array is
    overwritten and returned.
    """
    if not (isinstance(a, np.ndarray) and a.dtype == np.float64 and a.flags.c_contiguous):
        raise ValueError("fwht_in_place requires a C-contiguous float64 array")
    n = a.shape[0]
    if not _is_power_of_two(n):
        raise ValueError(f"length {n} is not a power of two")
    h = 1
    while h < n:
        view = a.reshape(n // (2 * h), 2, h, -1)
        top, bot = view[:, 0], view[:, 1]
        tmp = top.copy()
        np.add(top, bot, out=top)
        np.subtract(tmp, bot, out=bot)
        a *= INV_SQRT2
        h *= 2
    return a


def pad_to_power_of_two(A, b):
    """Append zero rows to A (and zeros to b) up to the next power of two.

    Zero residual rows leave the objective and its minimizer unchanged.
    Returns (A_padded, b_padded, new_n); inputs are returned as-is when n is
    already a power of two.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = None if b is None else np.ascontiguousarray(b, dtype=np.float64)
    n = A.shape[0]
    if _is_power_of_two(n):
        return A, b, n
    new_n = 1 << (n - 1).bit_length()
    A_pad = np.zeros((new_n, A.shape[1]), dtype=np.float64)
    A_pad[:n] = A
    b_pad = None
    if b is not None:
        b_pad = np.zeros(new_n, dtype=np.float64)
        b_pad[:n] = b
    return A_pad, b_pad, new_n


def _stack(A: np.ndarray, b) -> np.ndarray:
    if b is None:
        return A.copy()
    return np.concatenate([A, np.asarray(b, dtype=np.float64)[:, None]], axis=1)


def _split(W: np.ndarray, had_b: bool):
    if not had_b:
        return np.ascontiguousarray(W), None
    return np.ascontiguousarray(W[:, :-1]), np.ascontiguousarray(W[:, -1])


def _srht_transform(W: np.ndarray, m: int, rng: RngStream) -> np.ndarray:
    """Permute, sign-flip, Hadamard-transform and Bernoulli-subsample the rows of W."""
    n = W.shape[0]
    if not _is_power_of_two(n):
        raise ValueError(f"SRHT needs n to be a power of two, got n={n}")
    if not (0 < m < n):
        raise ValueError(f"need 0 < m < n, got m={m}, n={n}")
    g = rng.generator()
    perm = g.permutation(n)
    signs = g.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
    keep = g.random(n) < (m / n)
    W = W[perm]
    W *= signs[:, None]
    fwht_in_place(W)
    return W[keep]


def srht_apply(A, b, m: int, rng: RngStream):
    """Apply one SRHT draw to A and (optionally) b.

    Per column: uniform row permutation, i.i.d. +-1 sign flips, orthonormal
    Walsh-Hadamard transform, then Bernoulli(m/n) row subsampling with the
    zero rows discarded.  Returns (SketchResult, sketched_b); sketched_b is
    None when b is None.

    Raises
    ------
    SketchTooThin
        If the realized row count m_tilde is below the column count of A, in
        which case the sketched Gram matrix would be singular.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    d = A.shape[1]
    W = _srht_transform(_stack(A, b), m, rng)
    m_eff = int(W.shape[0])
    if m_eff < d:
        raise SketchTooThin(f"realized sketch size {m_eff} < d = {d}")
    SA, Sb = _split(W, b is not None)
    return SketchResult(kind="srht", SA=SA, m_effective=m_eff, stream=rng), Sb


def gaussian_sketch(A, b, m: int, rng: RngStream):
    """Sketch with an m x n matrix of i.i.d. Normal(0, 1/m) entries."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    n, d = A.shape
    if m <= d:
        raise ValueError(f"Gaussian sketch needs m > d, got m={m}, d={d}")
    g = rng.generator()
    S = g.standard_normal((m, n)) / math.sqrt(m)
    SA = S @ A
    Sb = None if b is None else S @ np.asarray(b, dtype=np.float64)
    return SketchResult(kind="gaussian", SA=SA, m_effective=m, stream=rng), Sb


def haar_sketch(A, b, m: int, rng: RngStream):
    """Sketch with the m x n right-singular-vector matrix of a Gaussian draw.

    The rows of S are orthonormal and their span is uniformly distributed.
    A non-converging SVD surfaces as numpy.linalg.LinAlgError.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    n, d = A.shape
    if not (d < m < n):
        raise ValueError(f"Haar sketch needs d < m < n, got n={n}, d={d}, m={m}")
    g = rng.generator()
    G = g.standard_normal((m, n))
    S = np.linalg.svd(G, full_matrices=False)[2]
    Sb = None if b is None else S @ np.asarray(b, dtype=np.float64)
    return SketchResult(kind="haar", SA=S @ A, m_effective=m, stream=rng), Sb


def identity_sketch(A, b, rng: RngStream):
    """Test hook: S = I_n, so the sketched Gram matrix is the exact Hessian."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    Sb = None if b is None else np.asarray(b, dtype=np.float64).copy()
    return SketchResult(kind="identity", SA=A.copy(), m_effective=A.shape[0], stream=rng), Sb


def make_sketch(kind: str, A, b, m: int, rng: RngStream):
    """Dispatch on embedding kind: 'gaussian' | 'srht' | 'haar' | 'identity'."""
    if kind == "gaussian":
        return gaussian_sketch(A, b, m, rng)
    if kind == "srht":
        return srht_apply(A, b, m, rng)
    if kind == "haar":
        return haar_sketch(A, b, m, rng)
    if kind == "identity":
        return identity_sketch(A, b, rng)
    raise ValueError(f"unknown embedding kind: {kind!r}")


def materialize_sketch_matrix(kind: str, n: int, m: int, rng: RngStream) -> np.ndarray:
    """Return the dense sketching matrix S itself (diagnostics and tests).

    Uses exactly the same random draws as sketching data with the same
    stream, so the returned S reproduces what make_sketch applied.  The
    thin-sketch guard does not apply here: S is just materialized.
    """
    if kind == "gaussian":
        g = rng.generator()
        return g.standard_normal((m, n)) / math.sqrt(m)
    if kind == "srht":
        return np.ascontiguousarray(_srht_transform(np.eye(n), m, rng))
    if kind == "haar":
        g = rng.generator()
        return np.linalg.svd(g.standard_normal((m, n)), full_matrices=False)[2]
    if kind == "identity":
        return np.eye(n)
    raise ValueError(f"unknown embedding kind: {kind!r}")
