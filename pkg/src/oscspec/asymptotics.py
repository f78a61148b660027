"""Sharp asymptotic predictors for the spectral data and their residual
diagnostics: the leading eigenvalue shift, the boundary log-derivative
expansion, and the nonlinear norming correction with its decomposition."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import seqspace, specfun
from .config import InputError, RunConfig
from .potential import Potential, qcheck, qhat


def predict_sigma(q: Potential, n: int, config: RunConfig | None = None) -> float:
    """Leading-order eigenvalue: 4n + 3 plus twice the diagonal inner product."""
    return 4.0 * n + 3.0 + 2.0 * qhat(q, 2 * n + 1, config)


def predict_logpsi_prime(q: Potential, n: int, mu_n: float,
                         config: RunConfig | None = None) -> float:
    """Two-term prediction of log of the boundary slope over its unperturbed
    value."""
    k = specfun.kappa_set(n)
    return k.kappa_prime_dot / k.kappa_prime * mu_n - qcheck(q, 2 * n + 1, config)


def extract_v(mu) -> float:
    """Leading coefficient of the eigenvalue-shift sequence (truncated f(1))."""
    h = seqspace.hseq_from_sequence(np.asarray(mu, dtype=float))
    return seqspace.h_decompose(h).v


def _extended_mu(mu: np.ndarray, m_top: int, v: float,
                 model: np.ndarray | None = None) -> np.ndarray:
    """Continue a shift sequence beyond its data window.

    Entries above len(mu) come from `model` when provided (e.g. the
    first-order prediction of the shifts, which removes the linear-order
    boundary error), then from the leading law v (2m+1)^(-1/2), whose
    normalization matches the h-decomposition's leading coefficient.
    """
    if m_top < mu.size:
        return mu[: m_top + 1]
    parts = [mu]
    lo = mu.size
    if model is not None and model.size > lo:
        hi = min(model.size, m_top + 1)
        parts.append(model[lo:hi])
        lo = hi
    if lo <= m_top:
        m = np.arange(lo, m_top + 1, dtype=float)
        parts.append(v / np.sqrt(2.0 * m + 1.0))
    return np.concatenate(parts)


def _log_ratio_at_root(n: int, mu_n: float) -> float:
    """log of boundary value over (kappa_dot * mu_n); removable at mu_n = 0."""
    k = specfun.kappa_set(n)
    if abs(mu_n) < 1e-4:
        a = k.kappa_ddot / (2.0 * k.kappa_dot)
        b = k.kappa_dddot / (6.0 * k.kappa_dot)
        return math.log1p(mu_n * (a + b * mu_n))
    val = specfun.psi_plus0_boundary(4.0 * n + 3.0 + mu_n).value
    return math.log(val / (k.kappa_dot * mu_n))


def correction_R(mu, n: int, M_prod: int | None = None, v: float | None = None,
                 mu_model: np.ndarray | None = None) -> tuple[float, float]:
    """Nonlinear norming correction from the eigenvalue shifts alone.

    The infinite product is summed in log space up to M_prod with the
    extended shift sequence; the returned estimate covers the remaining
    analytic tail.
    """
    mu = np.asarray(getattr(mu, "coeffs", mu), dtype=float)
    if n >= mu.size:
        raise InputError("n beyond the provided shift sequence")
    if v is None:
        v = extract_v(mu)
    M_prod = M_prod or 8 * mu.size
    mun = mu[n]
    k = specfun.kappa_set(n)

    def pieces(m_top: int) -> tuple[float, float, float]:
        mm = _extended_mu(mu, m_top, v, mu_model)
        m = np.arange(mm.size, dtype=float)
        mask = m != n
        denom = 4.0 * (n - m[mask]) + mun
        log_prod = float(np.sum(np.log1p(-mm[mask] / denom)))
        half_sum = float(np.sum(mm[mask] / (2.0 * (n - m[mask]))))
        kernel_sum = float(np.sum(mm / (2.0 * (n - m) + 1.0)))
        return log_prod, half_sum, kernel_sum

    lp, _, ks = pieces(M_prod)
    r1 = -2.0 * _log_ratio_at_root(n, mun) + 2.0 * k.kappa_prime_dot / k.kappa_prime * mun
    value = r1 - 2.0 * lp - ks
    lp8, _, ks8 = pieces(8 * M_prod)
    tail = abs((-2.0 * lp8 - ks8) - (-2.0 * lp - ks)) * 2.0
    return value, tail


def correction_R_pieces(mu, n: int, M_prod: int | None = None, v: float | None = None,
                        mu_model: np.ndarray | None = None) -> tuple[float, float, float]:
    """The three-part split of the correction (diagnostic; sums to the total
    exactly at matching truncation)."""
    mu = np.asarray(getattr(mu, "coeffs", mu), dtype=float)
    if v is None:
        v = extract_v(mu)
    M_prod = M_prod or 8 * mu.size
    mun = mu[n]
    k = specfun.kappa_set(n)
    mm = _extended_mu(mu, M_prod, v, mu_model)
    m = np.arange(mm.size, dtype=float)
    mask = m != n
    denom = 4.0 * (n - m[mask]) + mun
    r1 = -2.0 * _log_ratio_at_root(n, mun) + 2.0 * k.kappa_prime_dot / k.kappa_prime * mun
    r2 = -float(np.sum(2.0 * np.log1p(-mm[mask] / denom)
                       + mm[mask] / (2.0 * (n - m[mask]))))
    r3 = 0.5 * float(np.sum(mm[mask] / (n - m[mask]))) \
        - float(np.sum(mm / (2.0 * (n - m) + 1.0)))
    return r1, r2, r3


def mu_first_order(q: Potential, m_top: int,
                   config: RunConfig | None = None) -> np.ndarray:
    """First-order shift model 2 <q, psi_{2m+1}^2> for m = 0..m_top, used to
    extend measured shift sequences past their data window."""
    if q.hermite_coeffs is not None:
        from .linmaps import qhat_from_hermite

        return 2.0 * qhat_from_hermite(q.hermite_coeffs, 2 * m_top + 1)[1::2]
    from .potential import qhat_seq

    return 2.0 * qhat_seq(q, 2 * m_top + 1)[1::2]


def predict_r(q: Potential, n: int, mu, config: RunConfig | None = None) -> float:
    """Norming residual prediction: tail coefficient, the boundary-value
    slot, and half the shift correction.

    The prefactors match the norming normalization nu = log ||phi||^{-2}:
    with them the residual r - predict_r decays in the weighted space and
    scales quadratically under potential scaling, which pins the form.
    """
    from .linmaps import tilde_n

    cfg = config or RunConfig()
    mu_arr = np.asarray(getattr(mu, "coeffs", mu), dtype=float)
    model = mu_first_order(q, 8 * mu_arr.size, cfg)
    tn = tilde_n(q, n, cfg)[0][n]
    return (-tn + q.q0 / (4.0 * (2.0 * n + 1.0))
            + 0.5 * correction_R(mu_arr, n, mu_model=model)[0])


# ---------------------------------------------------------------------------
# residual diagnostics

@dataclass(frozen=True)
class ResidualReport:
    """Windowed decay diagnostic of an asymptotic remainder."""

    n_range: tuple[int, int]
    residuals: np.ndarray
    fitted_exponent: float
    weighted_norms: np.ndarray

    def to_dict(self) -> dict:
        return {
            "n_range": list(self.n_range),
            "residuals": self.residuals.tolist(),
            "fitted_exponent": self.fitted_exponent,
            "weighted_norms": self.weighted_norms.tolist(),
        }


def fit_decay_exponent(ns: np.ndarray, residuals: np.ndarray) -> float:
    """Slope of log |residual| against log n, ignoring exact zeros."""
    ns = np.asarray(ns, dtype=float)
    res = np.abs(np.asarray(residuals, dtype=float))
    keep = res > 0
    if np.sum(keep) < 2:
        return -np.inf
    return float(np.polyfit(np.log(ns[keep]), np.log(res[keep]), 1)[0])


def residual_report(ns, residuals, weight_r: float = 0.75) -> ResidualReport:
    ns = np.asarray(ns, dtype=int)
    res = np.asarray(residuals, dtype=float)
    if ns.size == 0:
        raise InputError("empty residual window")
    if not np.all(np.isfinite(res)):
        raise InputError("residuals must be finite")
    w = (1.0 + ns.astype(float)) ** (2.0 * weight_r)
    return ResidualReport(
        (int(ns[0]), int(ns[-1])), res,
        fit_decay_exponent(ns, res),
        np.sqrt(np.cumsum(w * res * res)),
    )
