"""Potentials on [0, xmax]: grid and Hermite-coefficient forms, the weighted
Sobolev norm, and the eigenfunction-pair inner products."""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from . import specfun
from .config import InputError, RunConfig

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CoeffVec:
    """Finite real coefficient sequence with a weight exponent for norms."""

    coeffs: np.ndarray
    weight_r: float = 0.75

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise InputError("coefficients must be a finite 1-d sequence")
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return self.coeffs.size


@dataclass(frozen=True)
class Potential:
    """Real potential sampled on a uniform grid, immutable after construction.

    The potential is extended by zero beyond xmax and must already be
    numerically negligible there; evaluation between nodes is cubic.
    """

    grid: np.ndarray
    values: np.ndarray
    hermite_coeffs: np.ndarray | None = None
    _extras: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.size < 8 or g.size != v.size:
            raise InputError("need at least 8 samples on a matching grid")
        if not np.all(np.isfinite(v)):
            raise InputError("potential samples must be finite")
        h = g[1] - g[0]
        if h <= 0 or not np.allclose(np.diff(g), h, rtol=1e-9, atol=1e-12):
            raise InputError("grid must be uniform and increasing")
        scale = 1.0 + float(np.sqrt(simpson(v * v, dx=h)))
        if abs(v[-1]) > 1e-8 * scale:
            raise InputError(
                f"potential not negligible at xmax ({v[-1]:.3e}); enlarge the domain")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    # -- basic accessors --

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def xmax(self) -> float:
        return float(self.grid[-1])

    @property
    def q0(self) -> float:
        return float(self.values[0])

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0.0))

    @property
    def fingerprint(self) -> str:
        fp = self._extras.get("fingerprint")
        if fp is None:
            hsh = hashlib.sha256()
            hsh.update(self.values.tobytes())
            hsh.update(np.array([self.h, self.xmax]).tobytes())
            fp = hsh.hexdigest()
            self._extras["fingerprint"] = fp
        return fp

    def spline_args(self):
        """Cubic segment coefficients in the layout the integrator expects."""
        if self.is_zero:
            return None
        args = self._extras.get("spline")
        if args is None:
            c = CubicSpline(self.grid, self.values).c
            args = (np.ascontiguousarray(c[0]), np.ascontiguousarray(c[1]),
                    np.ascontiguousarray(c[2]), np.ascontiguousarray(c[3]),
                    0.0, self.h, c.shape[1])
            self._extras["spline"] = args
        return args

    def __call__(self, x):
        """Evaluate at x (cubic between nodes, zero beyond xmax)."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros_like(x)
        sp = self._extras.get("cs")
        if sp is None:
            sp = CubicSpline(self.grid, self.values)
            self._extras["cs"] = sp
        out = np.where((x >= 0) & (x <= self.xmax), sp(np.clip(x, 0, self.xmax)), 0.0)
        return out if out.ndim else float(out)

    def extended(self, config: RunConfig) -> "Potential":
        """Resample onto the grid implied by config (zero beyond the old xmax)."""
        g = config.grid()
        if g.size == self.grid.size and abs(g[-1] - self.xmax) < 1e-12 \
                and abs(config.h - self.h) < 1e-15:
            return self
        return Potential(g, self(g), self.hermite_coeffs)

    # -- serialization --

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "potential",
            "xmax": self.xmax,
            "h": self.h,
            "values": self.values.tolist(),
            "hermite": None if self.hermite_coeffs is None else self.hermite_coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Potential":
        try:
            h = float(d["h"])
            values = np.asarray(d["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"malformed potential document: {e}") from e
        grid = np.arange(values.size) * h
        herm = d.get("hermite")
        return cls(grid, values, None if herm is None else np.asarray(herm, dtype=float))


def zero_potential(config: RunConfig) -> Potential:
    g = config.grid()
    return Potential(g, np.zeros_like(g))


def potential_from_samples(samples, h: float, hermite_coeffs=None) -> Potential:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size < 8:
        raise InputError("need at least 8 samples")
    if h <= 0:
        raise InputError("h must be positive")
    if not np.all(np.isfinite(samples)):
        raise InputError("samples must be finite")
    grid = np.arange(samples.size) * h
    return Potential(grid, samples, hermite_coeffs)


def potential_from_callable(f, config: RunConfig) -> Potential:
    g = config.grid()
    return Potential(g, np.asarray(f(g), dtype=float))


def potential_from_hermite(coeffs, config: RunConfig) -> Potential:
    """q = sum c_k psitilde_{2k} sampled on the config grid."""
    coeffs = np.asarray(coeffs, dtype=float)
    g = config.grid()
    if coeffs.size == 0:
        return Potential(g, np.zeros_like(g), coeffs)
    vals, _ = specfun.psi_tilde_table(2 * (coeffs.size - 1), g)
    q = coeffs @ vals[::2]
    return Potential(g, q, coeffs)


# ---------------------------------------------------------------------------
# basis tables and inner products

_table_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _grid_key(grid: np.ndarray) -> tuple:
    return (grid.size, float(grid[-1]))


def hermite_table_for_grid(nmax: int, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cached psi_n table (values, derivatives) on a shared grid, n <= nmax."""
    key = ("psi", _grid_key(grid))
    hit = _table_cache.get(key)
    if hit is None or hit[0].shape[0] <= nmax:
        tab = specfun.hermite_psi_table(max(nmax, 64), grid)
        _table_cache[key] = tab
        hit = tab
    return hit[0][: nmax + 1], hit[1][: nmax + 1]


def chi_table_for_grid(n: int, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """chi_n values/derivatives on a shared grid (per-n cache)."""
    key = ("chi", n, _grid_key(grid))
    hit = _table_cache.get(key)
    if hit is None:
        v, d = specfun.chi0(n, grid)
        if len(_table_cache) > 2048:
            _table_cache.clear()
        _table_cache[key] = (v, d)
        hit = (v, d)
    return hit


def _tail_estimate(q: Potential) -> float:
    return abs(float(q.values[-1]))


def qhat(q: Potential, n: int, config: RunConfig | None = None) -> float:
    """<q, psi_n^2> over the half line by composite Simpson."""
    cfg = config or RunConfig()
    tail = _tail_estimate(q)
    if tail > cfg.tol("tail_warn"):
        warnings.warn(f"qhat tail estimate {tail:.2e} above tolerance", stacklevel=2)
    vals, _ = hermite_table_for_grid(n, q.grid)
    return float(simpson(q.values * vals[n] ** 2, dx=q.h))


def qcheck(q: Potential, n: int, config: RunConfig | None = None) -> float:
    """<q, psi_n chi_n> over the half line (the product decays like -1/x)."""
    cfg = config or RunConfig()
    tail = _tail_estimate(q)
    if tail > cfg.tol("tail_warn"):
        warnings.warn(f"qcheck tail estimate {tail:.2e} above tolerance", stacklevel=2)
    vals, _ = hermite_table_for_grid(n, q.grid)
    cv, _ = chi_table_for_grid(n, q.grid)
    return float(simpson(q.values * vals[n] * cv, dx=q.h))


def qhat_seq(q: Potential, nmax: int) -> np.ndarray:
    """All <q, psi_n^2> for n = 0..nmax in one pass."""
    vals, _ = hermite_table_for_grid(nmax, q.grid)
    return simpson(q.values[None, :] * vals ** 2, dx=q.h, axis=1)


def qcheck_seq(q: Potential, nmax: int) -> np.ndarray:
    vals, _ = hermite_table_for_grid(nmax, q.grid)
    out = np.empty(nmax + 1)
    for n in range(nmax + 1):
        cv, _ = chi_table_for_grid(n, q.grid)
        out[n] = simpson(q.values * vals[n] * cv, dx=q.h)
    return out


def hplus_norm(q: Potential) -> float:
    """Discrete (||q||^2 + ||q'||^2 + ||x q||^2)^(1/2).

    The derivative uses centered differences with one-sided second-order
    stencils at the ends.
    """
    v, h, x = q.values, q.h, q.grid
    dq = np.empty_like(v)
    dq[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    dq[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    dq[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    total = simpson(v * v, dx=h) + simpson(dq * dq, dx=h) + simpson((x * v) ** 2, dx=h)
    return float(np.sqrt(total))
