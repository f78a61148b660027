"""Generating-function maps of potentials: the even/odd-basis coefficient
functions, their Dirichlet halves, the derived tail coefficients, and the
linearized spectral map."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import seqspace, specfun
from .config import InputError, RunConfig
from .potential import CoeffVec, Potential

_FOURTH = (2.0 * math.pi) ** -0.25  # (2 pi)^(-1/4)

_tilde_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _tilde_table(nmax: int, grid: np.ndarray) -> np.ndarray:
    key = (grid.size, float(grid[-1]))
    hit = _tilde_cache.get(key)
    if hit is None or hit[0].shape[0] <= nmax:
        hit = specfun.psi_tilde_table(max(nmax, 64), grid)
        if len(_tilde_cache) > 8:
            _tilde_cache.clear()
        _tilde_cache[key] = hit
    return hit[0][: nmax + 1]


def inner_tilde(q: Potential, nmax: int) -> np.ndarray:
    """<q, psitilde_n> for n = 0..nmax by composite Simpson."""
    tab = _tilde_table(nmax, q.grid)
    return simpson(q.values[None, :] * tab, dx=q.h, axis=1)


# ---------------------------------------------------------------------------
# F and G

def f_from_hermite(coeffs, K: int) -> np.ndarray:
    """Exact coefficient function of a finite even-basis potential: the k-th
    coefficient is (2 pi)^(-1/4) sqrt(E_k) c_k / 2."""
    c = np.asarray(getattr(coeffs, "coeffs", coeffs), dtype=float)
    E = specfun.binom_E_seq(K)
    out = np.zeros(K + 1)
    m = min(c.size, K + 1)
    out[:m] = _FOURTH * np.sqrt(E[:m]) * c[:m] / 2.0
    return out


def map_F(q: Potential, K: int, config: RunConfig | None = None) -> np.ndarray:
    """Coefficients of the even-basis generating function, k = 0..K.

    Exact (finite) when the potential carries its even-basis coefficients;
    otherwise by quadrature against the scaled basis.
    """
    if q.hermite_coeffs is not None:
        return f_from_hermite(q.hermite_coeffs, K)
    inner = inner_tilde(q, 2 * K)[::2]
    return _FOURTH * np.sqrt(specfun.binom_E_seq(K)) * inner


def map_G(q: Potential, K: int, config: RunConfig | None = None) -> np.ndarray:
    """Coefficients of the odd-basis generating function, k = 0..K."""
    inner = inner_tilde(q, 2 * K + 1)[1::2]
    E = specfun.binom_E_seq(K)
    k = np.arange(K + 1, dtype=float)
    return -(2.0 * math.pi) ** 0.25 / 2.0 * inner / np.sqrt((2.0 * k + 1.0) * E)


def fq_value(fc: np.ndarray, z: float) -> float:
    """Evaluate a coefficient polynomial at a boundary point (z = +-1)."""
    return float(np.polynomial.polynomial.polyval(z, fc))


# ---------------------------------------------------------------------------
# Dirichlet halves

def fd_gd_from_f(fc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split F into the even/odd Dirichlet halves.

    Both halves are odd-coefficient extractions of Cauchy products of F
    (or its alternation) with the series of (1 + z)^(1/2).
    """
    fc = np.asarray(fc, dtype=float)
    L = fc.size
    sp = seqspace.sqrt_series(1, L, plus_z=True)   # (1 + z)^(1/2)
    alt = fc * np.where(np.arange(L) % 2 == 0, 1.0, -1.0)
    a = np.convolve(fc, sp)[:L + 1]
    c = np.convolve(alt, sp)[:L + 1]
    return a[1::2], c[1::2]


def map_FD(q: Potential, K: int, config: RunConfig | None = None) -> np.ndarray:
    fd, _ = fd_gd_from_f(map_F(q, 2 * K + 1, config))
    return fd[: K + 1]


def map_GD(q: Potential, K: int, config: RunConfig | None = None) -> np.ndarray:
    _, gd = fd_gd_from_f(map_F(q, 2 * K + 1, config))
    return gd[: K + 1]


def gd_value_at_1(gd: np.ndarray, mode: str = "tail_fit") -> tuple[float, float]:
    """Value of the odd Dirichlet half at z = 1.

    The raw partial sum converges like the inverse square root of the
    length; the default damps the tail by fitting the m^(-3/2) coefficient
    model on the last octave.  Returns (value, applied correction).
    """
    gd = np.asarray(gd, dtype=float)
    raw = float(np.sum(gd))
    if mode == "raw" or gd.size < 16:
        return raw, 0.0
    L = gd.size
    m = np.arange(L // 2, L, dtype=float)
    w = float(np.mean(gd[L // 2:] * (m + 1.0) ** 1.5))
    tail = w * 2.0 / math.sqrt(L - 0.5)
    return raw + tail, tail


def qhat_from_hermite(coeffs, jmax: int) -> np.ndarray:
    """Exact <q, psi_j^2> for all j <= jmax of a finite even-basis potential."""
    c = np.asarray(getattr(coeffs, "coeffs", coeffs), dtype=float)
    m = min(c.size, jmax + 1)
    E = specfun.binom_E_seq(m - 1) if m else np.empty(0)
    a = _FOURTH * np.sqrt(E) * c[:m] / 2.0
    return seqspace.sqrt1mz_div(a, jmax + 1)


# ---------------------------------------------------------------------------
# tail coefficients and the linear model

def tilde_n(q: Potential, K: int, config: RunConfig | None = None,
            L: int | None = None) -> tuple[np.ndarray, float]:
    """Tail coefficients from the odd Dirichlet half, n = 0..K.

    L controls how much of the half-series enters the projector convolution;
    the returned bound combines the kernel and series truncations.
    """
    cfg = config or RunConfig()
    if L is None:
        # exact coefficient pipelines afford long series; quadrature does not
        L = max(16 * (K + 1), 512) if q.hermite_coeffs is not None \
            else min(max(4 * (K + 1), 128), 256)
    gd = map_GD(q, L, cfg)
    gd1, corr = gd_value_at_1(gd)
    shifted = gd.copy()
    shifted[0] -= gd1
    M = max(cfg.m_laurent, gd.size + K + 1)
    out, kernel_bound = seqspace.pp_inv_sqrt(-1, shifted, M, K + 1)
    series_tail = 2.0 * abs(corr) / math.sqrt(max(L, 2))
    return math.pi / 2.0 * out, math.pi / 2.0 * (kernel_bound + series_tail) + abs(corr) * 0.1


@dataclass(frozen=True)
class LinearModelData:
    """Linearization of the spectral map: leading eigenvalue shifts, the
    boundary value, and the leading norming residuals."""

    ahat: CoeffVec
    q0: float
    btilde: CoeffVec


def linear_model(q: Potential, N: int, config: RunConfig | None = None) -> LinearModelData:
    cfg = config or RunConfig()
    if q.hermite_coeffs is not None:
        ahat = 2.0 * qhat_from_hermite(q.hermite_coeffs, 2 * N + 1)[1::2]
    else:
        from .potential import qhat_seq

        ahat = 2.0 * qhat_seq(q, 2 * N + 1)[1::2]
    btilde = -2.0 * tilde_n(q, N - 1, cfg)[0]
    return LinearModelData(CoeffVec(ahat[:N]), q.q0, CoeffVec(btilde))


def linear_model_matrix(N: int, dim: int, config: RunConfig | None = None) -> np.ndarray:
    """Dense matrix of the linear model restricted to the even-basis span:
    rows are (mu_0..mu_{N-1}, q0, r_0..r_{N-1}), columns the basis elements."""
    cfg = config or RunConfig()
    E = specfun.binom_E_seq(max(2 * N + 2, dim))
    M = np.zeros((2 * N + 1, dim))
    L = max(16 * N, 512)
    for kcol in range(dim):
        fc = np.zeros(2 * L + 2)
        fc[kcol] = _FOURTH * math.sqrt(E[kcol]) / 2.0
        qhat_all = seqspace.sqrt1mz_div(fc, 2 * N + 2)
        M[:N, kcol] = 2.0 * qhat_all[1::2][:N]
        _, gd = fd_gd_from_f(fc)
        gd1, _ = gd_value_at_1(gd)
        shifted = gd.copy()
        shifted[0] -= gd1
        out, _ = seqspace.pp_inv_sqrt(-1, shifted, max(cfg.m_laurent, gd.size + N + 1), N)
        M[N + 1:, kcol] = -2.0 * (math.pi / 2.0) * out
        M[N, kcol] = specfun.psi_tilde(2 * kcol, 0.0).value
    return M
