"""Run configuration shared by all modules, plus the package error types."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace


class InputError(ValueError):
    """Bad user input (files, parameters). CLI exit code 1."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (lost bracket, singular Jacobian...). CLI exit code 2."""


# Named thresholds used across the package. Every entry can be overridden per
# run via RunConfig(tolerances={...}) or the CLI --tol name=value flags.
DEFAULT_TOLERANCES: dict[str, float] = {
    "ode_rtol": 1e-11,          # per-step relative tolerance of the integrator
    "ode_atol": 1e-13,
    "root_xtol": 1e-12,         # eigenvalue root refinement
    "fd_lambda": 1e-6,          # relative step for d/d(lambda) finite differences
    "route_gap": 1e-5,          # allowed disagreement of the two norming routes
    "wronskian": 1e-6,          # allowed Wronskian drift of companion solutions
    "tail_warn": 1e-8,          # quadrature tail warning level
    "boundary_decay": 1e-8,     # required potential smallness at xmax
    "eta_min": 1e-10,           # positivity slack for the transform denominator
    "domain_sum": 1e-8,         # |sum f_k| allowed for the half-integer projector domain
    "newton_residual": 1e-10,   # weighted residual stop
    "newton_step": 1e-12,       # step-norm stop
}


def _derived_xmax(n: int, h: float) -> float:
    # classical turning point of the largest requested eigenvalue plus a
    # 6-unit buffer where the Gaussian factor is < 1e-15
    raw = math.sqrt(4.0 * n + 3.0) + 6.0
    return h * math.ceil(raw / h - 1e-12)


@dataclass(frozen=True)
class RunConfig:
    """Domain/truncation parameters for one computation.

    n: spectral truncation N (how many eigenvalue/norming triples).
    k: basis truncation for inner-product expansions (default 4*n).
    m: Laurent half-width for circle-kernel convolutions (default 16*n).
    xmax, h: uniform grid on [0, xmax]; xmax defaults to the turning point
    of sigma^0_{n-1} plus a 6-unit buffer, rounded to a multiple of h.
    """

    n: int = 16
    h: float = 1.0 / 200.0
    xmax: float | None = None
    k: int | None = None
    m: int | None = None
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.h <= 0:
            raise InputError("RunConfig needs n >= 1 and h > 0")
        if self.xmax is not None and self.xmax <= 1.0:
            raise InputError("xmax too small")

    @property
    def grid_xmax(self) -> float:
        if self.xmax is not None:
            return self.h * round(self.xmax / self.h)
        return _derived_xmax(self.n, self.h)

    @property
    def k_basis(self) -> int:
        return self.k if self.k is not None else 4 * self.n

    @property
    def m_laurent(self) -> int:
        return self.m if self.m is not None else 16 * self.n

    def tol(self, name: str) -> float:
        if name in self.tolerances:
            return float(self.tolerances[name])
        try:
            return DEFAULT_TOLERANCES[name]
        except KeyError:
            raise InputError(f"unknown tolerance name: {name}") from None

    def grid(self):
        import numpy as np

        npts = int(round(self.grid_xmax / self.h)) + 1
        return np.arange(npts) * self.h

    def cache_key(self) -> tuple:
        return (self.n, self.h, self.grid_xmax, self.tol("ode_rtol"), self.tol("ode_atol"))

    def with_overrides(self, **kwargs) -> "RunConfig":
        tols = dict(self.tolerances)
        tols.update(kwargs.pop("tolerances", {}))
        return replace(self, tolerances=tols, **kwargs)

    # -- serialization (reports echo the effective configuration) --

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "h": self.h,
            "xmax": self.grid_xmax,
            "k": self.k_basis,
            "m": self.m_laurent,
            "seed": self.seed,
            "tolerances": {k: self.tol(k) for k in DEFAULT_TOLERANCES},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {k: d[k] for k in ("n", "h", "xmax", "k", "m", "seed", "tolerances") if k in d}
        return cls(**known)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path) as f:
                d = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(d)
