"""The explicit one-eigenfunction isospectral transform and composed flows
targeting norming constants one slot at a time."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .config import InputError, NumericalError, RunConfig
from .potential import Potential
from .spectral import eigenfunction


@dataclass(frozen=True)
class DarbouxMove:
    """Shift the norming constant of slot n by t, leaving the spectrum and
    the boundary value fixed."""

    n: int
    t: float

    def __post_init__(self):
        if self.n < 0 or not math.isfinite(self.t):
            raise InputError("move needs n >= 0 and finite t")


def darboux(q: Potential, move: DarbouxMove, config: RunConfig | None = None) -> Potential:
    """One commutation step built from the n-th eigenfunction.

    The auxiliary function eta is accumulated from x = 0 with its total mass
    pinned to the eigenfunction normalization, and the logarithmic second
    derivative is expanded analytically in (psi, psi') - two numeric
    derivatives of a near-constant function would destroy accuracy.
    """
    cfg = config or RunConfig()
    psi = eigenfunction(q, move.n, cfg)
    h = q.h
    pv, dv = psi.psi, psi.dpsi
    cum = cumulative_simpson(pv * pv, dx=h, initial=0.0)
    cum /= cum[-1]
    # eta = 1 + s * int_x^inf psi^2, with s chosen so nu_n shifts by +t
    s = math.exp(-move.t) - 1.0
    eta = (1.0 + s) - s * cum
    if np.min(eta) <= cfg.tol("eta_min"):
        raise NumericalError(
            f"transform denominator lost positivity (min eta = {np.min(eta):.3e}); "
            "the eigenfunction is unreliable")
    qnew = q.values + 4.0 * s * pv * dv / eta + 2.0 * (s * pv * pv / eta) ** 2
    return Potential(q.grid, qnew)


def flow(q: Potential, moves, config: RunConfig | None = None) -> Potential:
    """Composition of moves, applied right to left; each step recomputes the
    eigenfunction of the current potential."""
    cfg = config or RunConfig()
    out = q
    for i, move in enumerate(reversed(list(moves))):
        if not isinstance(move, DarbouxMove):
            move = DarbouxMove(*move)
        try:
            out = darboux(out, move, cfg)
        except NumericalError as e:
            raise NumericalError(f"flow step {i} (slot {move.n}): {e}") from e
    return out
