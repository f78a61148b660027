"""Initial-value solves of -psi'' + x^2 psi + q psi = lambda psi on the grid:
the regular pair from x = 0, the decaying solution from the far end, and the
first iteration terms of the perturbation series."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from . import specfun
from ._integrate import integrate_oscillator
from .config import NumericalError, RunConfig
from .potential import Potential, zero_potential

_FOLD_LIMIT = 600.0


@dataclass(frozen=True)
class SolutionTrace:
    """(psi, psi') sampled on the grid at fixed lambda.

    True values are psi * exp(logscale); logscale is identically zero unless
    folding would overflow doubles (rescaling events at extreme lambda).
    """

    lam: float
    grid: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    logscale: np.ndarray
    kind: str

    def values(self) -> tuple[np.ndarray, np.ndarray]:
        """Absolute values; raises if they exceed double range."""
        if np.all(self.logscale == 0.0):
            return self.psi, self.dpsi
        if np.max(self.logscale) > 700.0:
            raise NumericalError("trace values exceed double range; use relative()")
        s = np.exp(self.logscale)
        return self.psi * s, self.dpsi * s

    def relative(self, i: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Values in units of the scale at node i (always representable here)."""
        if np.all(self.logscale == self.logscale[i]):
            return self.psi, self.dpsi
        s = np.exp(self.logscale - self.logscale[i])
        return self.psi * s, self.dpsi * s

    @property
    def boundary(self) -> tuple[float, float]:
        p, d = self.relative(0)
        return float(p[0]), float(d[0])


def _fold(psi, dpsi, lns):
    if np.max(np.abs(lns)) < _FOLD_LIMIT:
        s = np.exp(lns)
        return psi * s, dpsi * s, np.zeros_like(lns)
    return psi, dpsi, lns


def _seed_plus(lam: float, xtop: float) -> tuple[float, float, float]:
    """Unit-magnitude seed of the decay law at xtop plus its log scale."""
    nu = (lam - 1.0) / 2.0
    lbase = nu * math.log(math.sqrt(2.0) * xtop) - xtop * xtop / 2.0
    dval = nu / xtop - xtop
    m = 1.0 + abs(dval)
    return 1.0 / m, dval / m, lbase + math.log(m)


def shoot_plus_raw(q: Potential, lam: float, config: RunConfig):
    """Backward solve, raw scale: (psi, dpsi, lns) on the ascending grid."""
    grid = q.grid
    xsr = grid[::-1].copy()
    v0, d0, l0 = _seed_plus(lam, xsr[0])
    p, dp, lns, _ = integrate_oscillator(
        xsr, v0, d0, l0, lam, q.spline_args(),
        config.tol("ode_rtol"), config.tol("ode_atol"))
    return p[::-1].copy(), dp[::-1].copy(), lns[::-1].copy()


_scale_cache: dict[tuple, float] = {}


def _exact_log_scale(lam: float, config: RunConfig, grid_key: tuple,
                     zero_q: Potential) -> tuple[float, float]:
    """Log-correction (and sign) aligning a seeded solve with the exact
    boundary pair of the unperturbed problem at the same lambda."""
    key = (lam, grid_key, config.tol("ode_rtol"))
    hit = _scale_cache.get(key)
    if hit is None:
        p, dp, lns = shoot_plus_raw(zero_q, lam, config)
        v_ex, d_ex = specfun.psi_plus0_boundary(lam)
        w = max(abs(lam), 1.0) ** 0.25
        if abs(v_ex) * w >= abs(d_ex) / w:
            lfac = math.log(abs(v_ex)) - (math.log(abs(p[0])) + lns[0])
            sgn = math.copysign(1.0, v_ex) * math.copysign(1.0, p[0])
        else:
            lfac = math.log(abs(d_ex)) - (math.log(abs(dp[0])) + lns[0])
            sgn = math.copysign(1.0, d_ex) * math.copysign(1.0, dp[0])
        hit = (lfac, sgn)
        if len(_scale_cache) > 8192:
            _scale_cache.clear()
        _scale_cache[key] = hit
    return hit


def solve_psi_plus(q: Potential, lam: float, config: RunConfig | None = None) -> SolutionTrace:
    """The solution decaying at +infinity, normalized to the true Weber scale.

    The seed fixes only the direction; the absolute scale is pinned by a
    companion zero-potential solve matched to the exact boundary pair (the
    potential is already negligible at the far end, so the same factor
    applies).
    """
    cfg = config or RunConfig()
    p, dp, lns = shoot_plus_raw(q, lam, cfg)
    lfac, sgn = _exact_log_scale(lam, cfg, (q.grid.size, float(q.grid[-1])),
                                 q if q.is_zero else zero_potential_like(q))
    p, dp, lns = _fold(sgn * p, sgn * dp, lns + lfac)
    return SolutionTrace(lam, q.grid, p, dp, lns, "psi_plus")


_zero_like_cache: dict[tuple, Potential] = {}


def zero_potential_like(q: Potential) -> Potential:
    key = (q.grid.size, float(q.grid[-1]))
    z = _zero_like_cache.get(key)
    if z is None:
        z = Potential(q.grid, np.zeros_like(q.values))
        _zero_like_cache[key] = z
    return z


def solve_from_zero(q: Potential, lam: float,
                    config: RunConfig | None = None) -> tuple[SolutionTrace, SolutionTrace]:
    """The regular pair phi (phi(0)=0, phi'(0)=1) and theta (theta(0)=1,
    theta'(0)=0); their Wronskian stays 1 along the grid."""
    cfg = config or RunConfig()
    out = []
    for kind, ic in (("phi", (0.0, 1.0)), ("theta", (1.0, 0.0))):
        p, dp, lns, _ = integrate_oscillator(
            q.grid, ic[0], ic[1], 0.0, lam, q.spline_args(),
            cfg.tol("ode_rtol"), cfg.tol("ode_atol"))
        p, dp, lns = _fold(p, dp, lns)
        out.append(SolutionTrace(lam, q.grid, p, dp, lns, kind))
    return out[0], out[1]


def equation_residual(trace: SolutionTrace, q: Potential) -> float:
    """Max interior defect of the second-difference form of the equation."""
    p, _ = trace.relative(0)
    h = q.h
    x = q.grid[1:-1]
    second = (p[2:] - 2 * p[1:-1] + p[:-2]) / (h * h)
    rhs = (x * x + q.values[1:-1] - trace.lam) * p[1:-1]
    scale = np.max(np.abs(p)) * (1.0 + abs(trace.lam)) ** 2
    return float(np.max(np.abs(second - rhs)) / scale)


def iteration_term(q: Potential, lam: float, k: int,
                   config: RunConfig | None = None) -> tuple[float, float]:
    """k-th term of the decaying-solution perturbation series at x = 0.

    Built from the unperturbed influence kernel, whose boundary row reduces
    to the regular pair; only k = 1, 2 are supported.
    """
    if k not in (1, 2):
        raise ValueError("iteration terms implemented for k in {1, 2}")
    cfg = config or RunConfig()
    zero = zero_potential_like(q)
    phi0, theta0 = solve_from_zero(zero, lam, cfg)
    plus0 = solve_psi_plus(zero, lam, cfg)
    pv, _ = plus0.values()
    fv, _ = phi0.values()
    tv, _ = theta0.values()
    h = q.h
    qv = q.values
    if k == 1:
        val = simpson(fv * pv * qv, dx=h)
        der = -simpson(tv * pv * qv, dx=h)
        return float(val), float(der)
    # psi1(t) = -phi0(t) S_theta(t) + theta0(t) S_phi(t), suffix integrals S
    c_theta = cumulative_simpson(tv * pv * qv, dx=h, initial=0.0)
    c_phi = cumulative_simpson(fv * pv * qv, dx=h, initial=0.0)
    s_theta = c_theta[-1] - c_theta
    s_phi = c_phi[-1] - c_phi
    psi1 = -fv * s_theta + tv * s_phi
    val = simpson(fv * psi1 * qv, dx=h)
    der = -simpson(tv * psi1 * qv, dx=h)
    return float(val), float(der)
