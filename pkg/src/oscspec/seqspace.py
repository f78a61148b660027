"""Finite-truncation algebra of the weighted sequence spaces: Cauchy products
with the half-integer binomial series, analytic projections of Laurent
products with the inverse-square-root circle kernels, and the leading-term
decomposition of generating sequences."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import InputError
from .specfun import binom_E_seq


def _coeffs(c) -> np.ndarray:
    arr = np.asarray(getattr(c, "coeffs", c), dtype=float)
    if arr.ndim != 1:
        raise InputError("expected a 1-d coefficient sequence")
    return arr


def l2r_norm(c, r: float) -> float:
    """Weighted norm (sum (1+n)^(2r) c_n^2)^(1/2) of a finite sequence."""
    arr = _coeffs(c)
    n = np.arange(arr.size, dtype=float)
    return float(np.sqrt(np.sum((1.0 + n) ** (2.0 * r) * arr * arr)))


def l2r_partial_norms(c, r: float) -> np.ndarray:
    arr = _coeffs(c)
    n = np.arange(arr.size, dtype=float)
    return np.sqrt(np.cumsum((1.0 + n) ** (2.0 * r) * arr * arr))


# ---------------------------------------------------------------------------
# binomial series of (1 -+ z)^(+-1/2)

def sqrt_series(alpha_half: int, nmax: int, plus_z: bool = False) -> np.ndarray:
    """Coefficients of (1 - z)^(alpha_half/2) (or of (1 + z)^... via plus_z)."""
    if alpha_half == -1:
        c = binom_E_seq(nmax)
    elif alpha_half == 1:
        k = np.arange(1, nmax + 1, dtype=float)
        c = np.concatenate([[1.0], np.cumprod((k - 1.5) / k)])
    else:
        raise InputError("only square roots supported")
    if plus_z:
        sgn = np.ones(nmax + 1)
        sgn[1::2] = -1.0
        c = c * sgn
    return c


def cauchy(a, b, n_out: int | None = None) -> np.ndarray:
    a, b = _coeffs(a), _coeffs(b)
    full = np.convolve(a, b)
    if n_out is None:
        n_out = a.size
    return full[:n_out]


def sqrt1mz_mul(c, n_out: int | None = None) -> np.ndarray:
    """Cauchy product with the series of (1 - z)^(1/2)."""
    c = _coeffs(c)
    n_out = n_out or c.size
    return cauchy(c, sqrt_series(1, n_out - 1 + c.size), n_out)


def sqrt1mz_div(c, n_out: int | None = None) -> np.ndarray:
    """Cauchy product with the series of (1 - z)^(-1/2)."""
    c = _coeffs(c)
    n_out = n_out or c.size
    return cauchy(c, sqrt_series(-1, n_out - 1 + c.size), n_out)


# ---------------------------------------------------------------------------
# analytic projections of circle products

def inv_sqrt_kernel(sign: int, smin: int, smax: int) -> np.ndarray:
    """Fourier coefficients of 1/sqrt(zeta) (sign=+1) or 1/sqrt(-zeta)
    (sign=-1) for indices smin..smax: (2/pi) (-+1)^s / (2s+1)."""
    s = np.arange(smin, smax + 1, dtype=float)
    k = (2.0 / math.pi) / (2.0 * s + 1.0)
    if sign > 0:
        par = np.ones(s.size)
        par[(np.arange(smin, smax + 1) % 2) != 0] = -1.0
        k = k * par
    return k


def pp_inv_sqrt(sign: int, c, M: int, n_out: int | None = None) -> tuple[np.ndarray, float]:
    """Analytic part of c(zeta)/sqrt(+-zeta) as a truncated Laurent convolution.

    Kernel indices are limited to |s| <= M; the returned bound covers the
    discarded kernel tail (O(1/M) times the l1 mass of the input).
    """
    c = _coeffs(c)
    if M < c.size:
        raise InputError("Laurent half-width must cover the input length")
    n_out = n_out or c.size
    out = np.zeros(n_out)
    for n in range(n_out):
        j = np.arange(c.size)
        s = n - j
        keep = np.abs(s) <= M
        if not np.all(keep):
            j, s = j[keep], s[keep]
        k = (2.0 / math.pi) / (2.0 * s + 1.0)
        if sign > 0:
            k = k * np.where(s % 2 == 0, 1.0, -1.0)
        out[n] = np.dot(c[j], k)
    bound = (2.0 / math.pi) * float(np.sum(np.abs(c))) / (2.0 * M + 3.0)
    return out, bound


def pp_conj_sqrt_div(c, n_out: int | None = None) -> np.ndarray:
    """Analytic part of c(zeta)/sqrt(1 - conj(zeta)): out_n = sum_k E_k c_{n+k}.

    Exact over the provided coefficients (conjugate factors act by index
    reflection on real sequences).
    """
    c = _coeffs(c)
    n_out = n_out or c.size
    E = binom_E_seq(c.size)
    out = np.empty(n_out)
    for n in range(n_out):
        m = c.size - n
        out[n] = np.dot(E[:m], c[n:]) if m > 0 else 0.0
    return out


def pp_conj_sqrt_mul(c, n_out: int | None = None) -> np.ndarray:
    """Analytic part of sqrt(1 - conj(zeta)) c(zeta)."""
    c = _coeffs(c)
    n_out = n_out or c.size
    B = sqrt_series(1, c.size)
    out = np.empty(n_out)
    for n in range(n_out):
        m = c.size - n
        out[n] = np.dot(B[:m], c[n:]) if m > 0 else 0.0
    return out


def op_A(f, M: int, n_out: int | None = None,
         domain_tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """The projector-composed map f -> P_+[f(zeta)/sqrt(-zeta)].

    Meant for sequences with vanishing coefficient sum; off-domain input
    degrades the truncation error, hence the warning.
    """
    f = _coeffs(f)
    total = abs(float(np.sum(f)))
    scale = float(np.sum(np.abs(f))) or 1.0
    if total > domain_tol * scale:
        warnings.warn(f"op_A input has |sum f_k| = {total:.2e}; "
                      "projection tails decay slowly off the domain", stacklevel=2)
    return pp_inv_sqrt(-1, f, M, n_out)


def op_A_matrix(dim: int, M: int) -> np.ndarray:
    """Dense truncation of the projector map on coefficient space."""
    cols = []
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        cols.append(pp_inv_sqrt(-1, e, M, dim)[0])
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# generating sequences h = E * f and their leading-term split

@dataclass(frozen=True)
class HSeq:
    """Element of the spectral-data sequence space, stored by its f-coefficients."""

    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", _coeffs(self.f))

    @property
    def N(self) -> int:
        return self.f.size

    def h(self, n_out: int | None = None) -> np.ndarray:
        """The sequence itself: Cauchy product of f with the E-series."""
        return sqrt1mz_div(self.f, n_out)

    def norm(self) -> float:
        """Space norm = weighted norm of the f-representation."""
        return l2r_norm(self.f, 0.75)


def hseq_from_sequence(h, n_out: int | None = None) -> HSeq:
    """Recover the f-representation by multiplying with sqrt(1 - z)."""
    return HSeq(sqrt1mz_mul(_coeffs(h), n_out))


@dataclass(frozen=True)
class HDecomposition:
    v: float
    h0: np.ndarray


def h_decompose(h: HSeq) -> HDecomposition:
    """Split h_n = v (2n+1)^(-1/2) + h0_n with v from the truncated f(1) sum."""
    v = math.sqrt(2.0 / math.pi) * float(np.sum(h.f))
    hn = h.h()
    n = np.arange(hn.size, dtype=float)
    return HDecomposition(v, hn - v / np.sqrt(2.0 * n + 1.0))
