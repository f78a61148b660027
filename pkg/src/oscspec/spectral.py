"""The forward spectral map: eigenvalues of both boundary conditions,
normalized eigenfunctions, norming constants by two routes, and assembly of
the truncated spectral data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from . import ode, potential as pot, specfun
from .config import InputError, NumericalError, RunConfig

SCHEMA_VERSION = 1

_cache: dict[tuple, object] = {}


def _remember(key, value):
    if len(_cache) > 4096:
        _cache.clear()
    _cache[key] = value
    return value


def _key(q: pot.Potential, config: RunConfig, *rest) -> tuple:
    return (q.fingerprint, config.cache_key()) + rest


# ---------------------------------------------------------------------------
# eigenvalues by shooting on the decaying solution

def _boundary_shooter(q: pot.Potential, config: RunConfig, use_derivative: bool):
    """lambda -> boundary value of the decaying solution (common scale ref)."""
    ref = {}

    def f(lam: float) -> float:
        p, dp, lns = ode.shoot_plus_raw(q, lam, config)
        if "l0" not in ref:
            ref["l0"] = lns[0]
        v = dp[0] if use_derivative else p[0]
        return v * math.exp(min(lns[0] - ref["l0"], 700.0))

    return f


def _bracket_and_solve(f, center: float, n: int, config: RunConfig,
                       what: str) -> tuple[float, float]:
    """Isolate and refine the root nearest to the asymptotic predictor."""
    xtol = config.tol("root_xtol")
    half = 1.0
    lo = max(center - half, 0.05)
    flo, fhi = f(lo), f(center + half)
    tries = 0
    while flo * fhi > 0 and tries < 3:
        half += 0.75
        tries += 1
        lo = max(center - half, 0.05)
        flo, fhi = f(lo), f(center + half)
    if flo * fhi > 0:
        # scan for the sign change closest to the predictor
        span = np.arange(max(center - 4.0, 0.05), center + 4.0, 0.2)
        vals = np.array([f(x) for x in span])
        sign_flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        if sign_flips.size == 0:
            raise NumericalError(
                f"{what}: no sign change near predictor {center:.6f} (index {n})")
        i = sign_flips[np.argmin(np.abs(span[sign_flips] + 0.1 - center))]
        lo, hi = span[i], span[i + 1]
    else:
        hi = center + half
    root = brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    if abs(root - center) > 3.5:
        raise NumericalError(
            f"{what}: root {root:.6f} escaped the predictor window at index {n}")
    # residual-based error estimate from a one-sided secant slope
    d = 1e-7 * (1.0 + abs(root))
    fr = f(root)
    slope = (f(root + d) - fr) / d
    err = xtol * (1.0 + abs(root)) + (abs(fr / slope) if slope != 0 else 0.0)
    return root, err


def dirichlet_eigenvalue(q: pot.Potential, n: int,
                         config: RunConfig | None = None) -> tuple[float, float]:
    """n-th eigenvalue with psi(0) = 0 and an error estimate."""
    cfg = config or RunConfig()
    key = _key(q, cfg, "sigma", n)
    if key in _cache:
        return _cache[key]
    center = 4.0 * n + 3.0 + 2.0 * pot.qhat(q, 2 * n + 1, cfg)
    f = _boundary_shooter(q, cfg, use_derivative=False)
    out = _bracket_and_solve(f, center, n, cfg, "dirichlet_eigenvalue")
    return _remember(key, out)


def neumann_eigenvalue(q: pot.Potential, n: int,
                       config: RunConfig | None = None) -> tuple[float, float]:
    """n-th eigenvalue of the even extension with psi'(0) = 0."""
    cfg = config or RunConfig()
    key = _key(q, cfg, "neumann", n)
    if key in _cache:
        return _cache[key]
    center = 4.0 * n + 1.0 + 2.0 * pot.qhat(q, 2 * n, cfg)
    f = _boundary_shooter(q, cfg, use_derivative=True)
    out = _bracket_and_solve(f, center, n, cfg, "neumann_eigenvalue")
    return _remember(key, out)


# ---------------------------------------------------------------------------
# eigenfunctions and companions

def eigenfunction(q: pot.Potential, n: int,
                  config: RunConfig | None = None) -> ode.SolutionTrace:
    """Unit-norm eigenfunction with positive slope at the origin."""
    cfg = config or RunConfig()
    key = _key(q, cfg, "eigf", n)
    if key in _cache:
        return _cache[key]
    sigma, _ = dirichlet_eigenvalue(q, n, cfg)
    trace = ode.solve_psi_plus(q, sigma, cfg)
    p, dp = trace.relative(0)
    norm2 = simpson(p * p, dx=q.h)
    tail = p[-1] ** 2 * q.h / norm2
    if tail > 1e-8:
        raise NumericalError(f"eigenfunction mass leaks past xmax (index {n})")
    s = math.copysign(1.0, dp[0]) / math.sqrt(norm2)
    out = ode.SolutionTrace(sigma, q.grid, p * s, dp * s,
                            np.zeros_like(p), "eigenfunction")
    return _remember(key, out)


def psi_plus_dlambda(q: pot.Potential, lam: float,
                     config: RunConfig | None = None) -> tuple[float, float]:
    """Central lambda-difference of the decaying solution's boundary pair."""
    cfg = config or RunConfig()
    d = cfg.tol("fd_lambda") * (1.0 + abs(lam))
    tp = ode.solve_psi_plus(q, lam + d, cfg)
    tm = ode.solve_psi_plus(q, lam - d, cfg)
    (vp, dvp), (vm, dvm) = tp.values(), tm.values()
    return (float(vp[0] - vm[0]) / (2 * d), float(dvp[0] - dvm[0]) / (2 * d))


def norming_constant(q: pot.Potential, n: int,
                     config: RunConfig | None = None) -> tuple[float, float]:
    """log ||phi(.,sigma_n)||^{-2} by direct normalization (route A), with the
    boundary-ratio route B as a cross-check; returns (value, gap)."""
    cfg = config or RunConfig()
    key = _key(q, cfg, "nu", n)
    if key in _cache:
        return _cache[key]
    sigma, _ = dirichlet_eigenvalue(q, n, cfg)
    trace = ode.solve_psi_plus(q, sigma, cfg)
    p, dp = trace.relative(0)
    # phi = psi_+ / psi_+'(0) at an eigenvalue, so ||phi|| needs only the trace
    nu_a = -math.log(simpson((p / dp[0]) ** 2, dx=q.h))
    dval, _ = psi_plus_dlambda(q, sigma, cfg)
    pv, dpv = trace.values()
    nu_b = math.log(-dpv[0] / dval)
    gap = abs(nu_a - nu_b)
    if gap > 100 * cfg.tol("route_gap"):
        raise NumericalError(f"norming routes disagree by {gap:.2e} at index {n}")
    return _remember(key, (nu_a, gap))


def chi_nd(q: pot.Potential, n: int,
           config: RunConfig | None = None) -> ode.SolutionTrace:
    """Companion solution with unit Wronskian against the eigenfunction."""
    cfg = config or RunConfig()
    key = _key(q, cfg, "chi", n)
    if key in _cache:
        return _cache[key]
    sigma, _ = dirichlet_eigenvalue(q, n, cfg)
    psi = eigenfunction(q, n, cfg)
    _, theta = ode.solve_from_zero(q, sigma, cfg)
    tv, tdv = theta.values()
    trace = ode.solve_psi_plus(q, sigma, cfg)
    pv, dpv = trace.values()
    _, dder = psi_plus_dlambda(q, sigma, cfg)
    ratio = dder / dpv[0]
    chi = tv / psi.dpsi[0] - ratio * psi.psi
    dchi = tdv / psi.dpsi[0] - ratio * psi.dpsi
    wron = chi * psi.dpsi - dchi * psi.psi
    dev = float(np.max(np.abs(wron - 1.0)))
    if dev > cfg.tol("wronskian"):
        raise NumericalError(f"chi Wronskian drift {dev:.2e} at index {n}")
    out = ode.SolutionTrace(sigma, q.grid, chi, dchi, np.zeros_like(chi), "chi")
    return _remember(key, out)


# ---------------------------------------------------------------------------
# assembled data

@dataclass(frozen=True)
class SpectralDataSet:
    """Truncated spectral data (sigma_n, nu_n) with the derived coordinates."""

    N: int
    sigma: np.ndarray
    nu: np.ndarray
    q0: float
    neumann: np.ndarray | None = None
    quality: dict = field(default_factory=dict)

    @property
    def sigma0(self) -> np.ndarray:
        return 4.0 * np.arange(self.N) + 3.0

    @property
    def mu(self) -> np.ndarray:
        return self.sigma - self.sigma0

    @property
    def nu0(self) -> np.ndarray:
        return np.array([specfun.nu0(n) for n in range(self.N)])

    @property
    def r(self) -> np.ndarray:
        n = np.arange(self.N)
        return self.nu - self.nu0 + self.q0 / (2.0 * (2.0 * n + 1.0))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "spectral_data",
            "N": self.N,
            "sigma": self.sigma.tolist(),
            "nu": self.nu.tolist(),
            "q0": self.q0,
            "r": self.r.tolist(),
            "neumann": None if self.neumann is None else self.neumann.tolist(),
            "quality": {k: list(v) for k, v in self.quality.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralDataSet":
        try:
            n = int(d["N"])
            sigma = np.asarray(d["sigma"], dtype=float)
            q0 = float(d["q0"])
            if "nu" in d:
                nu = np.asarray(d["nu"], dtype=float)
            else:
                r = np.asarray(d["r"], dtype=float)
                k = np.arange(n)
                nu = (np.array([specfun.nu0(i) for i in range(n)])
                      - q0 / (2.0 * (2.0 * k + 1.0)) + r)
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"malformed spectral-data document: {e}") from e
        if sigma.size != n or nu.size != n:
            raise InputError("spectral-data arrays inconsistent with N")
        neu = d.get("neumann")
        return cls(n, sigma, nu, q0,
                   None if neu is None else np.asarray(neu, dtype=float),
                   d.get("quality", {}))


def spectral_data(q: pot.Potential, N: int, config: RunConfig | None = None,
                  with_neumann: bool = False) -> SpectralDataSet:
    """Forward map at truncation N (plus the even eigenvalues on request)."""
    cfg = config or RunConfig()
    if 4 * N - 1 > cfg.grid_xmax ** 2:
        raise InputError("truncation exceeds the configured domain; raise n/xmax")
    sigma = np.empty(N)
    nu = np.empty(N)
    sig_err = np.empty(N)
    gaps = np.empty(N)
    for n in range(N):
        try:
            sigma[n], sig_err[n] = dirichlet_eigenvalue(q, n, cfg)
            nu[n], gaps[n] = norming_constant(q, n, cfg)
        except NumericalError as e:
            raise NumericalError(f"spectral data failed at index {n}: {e}") from e
    if np.any(np.diff(sigma) <= 0):
        raise NumericalError("computed eigenvalues are not strictly increasing")
    neu = None
    if with_neumann:
        neu = np.array([neumann_eigenvalue(q, n, cfg)[0] for n in range(N)])
    return SpectralDataSet(N, sigma, nu, q.q0, neu,
                           {"sigma_err": sig_err, "route_gap": gaps})


def orthogonality_defects(q: pot.Potential, n_max: int,
                          config: RunConfig | None = None) -> tuple[float, float, float]:
    """Worst deviations of the three product-identity families up to n_max.

    The squared-eigenfunction pairings decay fast; the product-product
    family's integrand falls off only cubically, so its quadrature gets the
    closed-form tail of the inverse-square-root product model appended.
    """
    cfg = config or RunConfig()
    h = q.h
    X2 = q.xmax ** 2
    psis = [eigenfunction(q, n, cfg) for n in range(n_max + 1)]
    chis = [chi_nd(q, n, cfg) for n in range(n_max + 1)]
    lams = [psis[n].lam for n in range(n_max + 1)]
    # model amplitudes at the cut: pc(x) ~ A / sqrt(x^2 - lambda)
    pcs = [psis[n].psi * chis[n].psi for n in range(n_max + 1)]
    amps = [pcs[n][-1] * math.sqrt(X2 - lams[n]) for n in range(n_max + 1)]
    w1 = w2 = w3 = 0.0
    for n in range(n_max + 1):
        dsq = 2.0 * psis[n].psi * psis[n].dpsi
        dpc = psis[n].dpsi * chis[n].psi + psis[n].psi * chis[n].dpsi
        for m in range(n_max + 1):
            pm2 = psis[m].psi ** 2
            w1 = max(w1, abs(simpson(dsq * pm2, dx=h)))
            w2 = max(w2, abs(simpson(dsq * pcs[m], dx=h) - (0.5 if m == n else 0.0)))
            if m == n:
                tail = -0.5 / (X2 - lams[n])
            else:
                tail = (1.0 - math.sqrt((X2 - lams[m]) / (X2 - lams[n]))) \
                    / (lams[n] - lams[m])
            tail *= amps[n] * amps[m]
            w3 = max(w3, abs(simpson(dpc * pcs[m], dx=h) + tail))
    return w1, w2, w3


def node_count(trace: ode.SolutionTrace) -> int:
    """Sign changes of psi strictly inside (0, xmax)."""
    p = trace.psi[1:-1]
    s = np.sign(p[np.abs(p) > 1e-12 * np.max(np.abs(p))])
    return int(np.sum(s[1:] * s[:-1] < 0))
