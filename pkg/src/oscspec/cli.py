"""Command-line driver: spectra, isospectral moves, identity verification,
reconstruction, and coefficient dumps, with JSON artifacts throughout."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np
from scipy.integrate import simpson

from . import asymptotics, inverse, linmaps, ode, seqspace, specfun, spectral
from .config import DEFAULT_TOLERANCES, InputError, NumericalError, RunConfig
from .isospectral import DarbouxMove, darboux, flow
from .potential import Potential, potential_from_hermite, qcheck_seq, qhat_seq

REPORT_SCHEMA = 1


# ---------------------------------------------------------------------------
# configuration and I/O plumbing

def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--tol expects name=value, got {item!r}")
        name, _, val = item.partition("=")
        if name not in DEFAULT_TOLERANCES:
            raise InputError(f"unknown tolerance name: {name}")
        try:
            out[name] = float(val)
        except ValueError:
            raise InputError(f"bad tolerance value for {name}: {val!r}") from None
    return out


def build_config(args) -> RunConfig:
    path = getattr(args, "config", None) or os.environ.get("OSCSPEC_CONFIG")
    cfg = RunConfig.from_file(path) if path else RunConfig()
    over = {}
    for flag, field in (("n", "n"), ("h", "h"), ("xmax", "xmax"),
                        ("k", "k"), ("m", "m"), ("seed", "seed")):
        val = getattr(args, flag, None)
        if val is not None:
            over[field] = val
    tols = _parse_tol(getattr(args, "tol", None))
    if over or tols:
        cfg = cfg.with_overrides(tolerances=tols, **over)
    return cfg


def read_json(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: "
                         f"{e.msg}") from e
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e


def load_potential(path: str, cfg: RunConfig) -> Potential:
    doc = read_json(path)
    if doc.get("kind") not in (None, "potential"):
        raise InputError(f"{path}: expected a potential document")
    return Potential.from_dict(doc).extended(cfg)


def emit(doc: dict, args, table: str | None = None):
    if getattr(args, "format", "json") == "table" and table is not None:
        text = table
    else:
        text = json.dumps(doc, indent=2)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands

def cmd_spectrum(args) -> int:
    cfg = build_config(args)
    q = load_potential(args.potential, cfg)
    n = args.count or cfg.n
    data = spectral.spectral_data(q, n, cfg, with_neumann=args.neumann)
    doc = data.to_dict()
    doc["config"] = cfg.to_dict()
    rows = ["  n        sigma_n             nu_n            mu_n            r_n       quality"]
    for i in range(data.N):
        rows.append(f"{i:3d}  {data.sigma[i]:16.10f} {data.nu[i]:16.10f} "
                    f"{data.mu[i]:15.8e} {data.r[i]:15.8e} "
                    f"{data.quality['sigma_err'][i]:9.1e}")
    emit(doc, args, "\n".join(rows))
    return 0


def _write_potential(q: Potential, cfg: RunConfig, args):
    doc = q.to_dict()
    doc["config"] = cfg.to_dict()
    emit(doc, args)


def cmd_darboux(args) -> int:
    cfg = build_config(args)
    q = load_potential(args.potential, cfg)
    out = darboux(q, DarbouxMove(args.index, args.t), cfg)
    _write_potential(out, cfg, args)
    return 0


def _parse_moves(text: str) -> list[DarbouxMove]:
    moves = []
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            n_str, _, t_str = part.partition(":")
            moves.append(DarbouxMove(int(n_str), float(t_str)))
        except ValueError:
            raise InputError(f"bad move {part!r}; expected n:t") from None
    return moves


def cmd_flow(args) -> int:
    cfg = build_config(args)
    q = load_potential(args.potential, cfg)
    out = flow(q, _parse_moves(args.moves), cfg)
    _write_potential(out, cfg, args)
    return 0


def cmd_linmaps(args) -> int:
    cfg = build_config(args)
    q = load_potential(args.potential, cfg)
    K = args.kcoef or cfg.k_basis
    tilde, bound = linmaps.tilde_n(q, K, cfg)
    doc = {
        "schema_version": REPORT_SCHEMA,
        "kind": "linmaps",
        "K": K,
        "F": linmaps.map_F(q, K, cfg).tolist(),
        "G": linmaps.map_G(q, K, cfg).tolist(),
        "FD": linmaps.map_FD(q, K, cfg).tolist(),
        "GD": linmaps.map_GD(q, K, cfg).tolist(),
        "tilde": tilde.tolist(),
        "tilde_bound": bound,
        "config": cfg.to_dict(),
    }
    emit(doc, args)
    return 0


def cmd_reconstruct(args) -> int:
    cfg = build_config(args)
    doc = read_json(args.spectral)
    data = spectral.SpectralDataSet.from_dict(doc)
    need = math.sqrt(4.0 * data.N + 3.0) + 6.0
    if cfg.grid_xmax < need:
        cfg = cfg.with_overrides(n=max(cfg.n, data.N))
    problem = inverse.ReconstructionProblem(
        target=data, basis_dim=args.basis_dim, max_iter=args.max_iter)
    q, log = inverse.reconstruct(problem, cfg, strategy=args.strategy)
    if args.log:
        with open(args.log, "w") as f:
            for rec in log:
                f.write(json.dumps(rec) + "\n")
    _write_potential(q, cfg, args)
    return 0


# ---------------------------------------------------------------------------
# verification report

def _check(name: str, residual: float, threshold: float) -> dict:
    return {"name": name, "residual": float(residual),
            "threshold": float(threshold), "pass": bool(residual <= threshold)}


def _half_kernel_tail(a2: float, u2: float) -> float:
    """Closed-form tail of sum (u-grid)^{-1}/(quadratic) used by the odd-index
    kernel sums; a2 is the pole square, u2 the squared lower endpoint."""
    a = math.sqrt(a2)
    u = math.sqrt(u2)
    return math.log((u - a) / (u + a)) / (2.0 * a)


def kernel_sum_even(qhat_even: np.ndarray, n: int, v: float) -> float:
    """sum_m qhat_{2m} / (2(n-m)+1) with the leading-model tail appended."""
    m = np.arange(qhat_even.size, dtype=float)
    s = float(np.sum(qhat_even / (2.0 * (n - m) + 1.0)))
    return s + v * _half_kernel_tail(4.0 * n + 3.0, 4.0 * qhat_even.size + 1.0)


def kernel_sum_odd(qhat_odd: np.ndarray, n: int, v: float) -> float:
    """sum_m qhat_{2m+1} / (2(n-m)+1) with the leading-model tail appended."""
    m = np.arange(qhat_odd.size, dtype=float)
    s = float(np.sum(qhat_odd / (2.0 * (n - m) + 1.0)))
    return s + v * _half_kernel_tail(4.0 * n + 5.0, 4.0 * qhat_odd.size + 3.0)


def identity_checks(q: Potential, cfg: RunConfig, K: int = 12,
                    tol: float = 1e-6) -> list[dict]:
    """The generating-function identity suite at truncation K."""
    checks = []
    exact = q.hermite_coeffs is not None
    L = 4096 if exact else 192
    F = linmaps.map_F(q, L, cfg)
    G = linmaps.map_G(q, min(L, 256), cfg)
    qh = qhat_seq(q, 2 * K + 2)
    qc = qcheck_seq(q, 2 * K + 2)
    intq = simpson(q.values, dx=q.h)

    f1 = linmaps.fq_value(F, 1.0)
    checks.append(_check("F-at-1", abs(f1 - intq / math.sqrt(2.0 * math.pi)), tol))
    checks.append(_check("F-at-minus-1",
                         abs(linmaps.fq_value(F, -1.0) - q.q0 / 2.0 ** 1.5), tol))

    hat_gen = seqspace.sqrt1mz_div(F[: 2 * K + 3], 2 * K + 3)
    checks.append(_check("qhat-generating",
                         float(np.max(np.abs(hat_gen[: 2 * K + 2] - qh[: 2 * K + 2]))), tol))

    chk_gen = seqspace.pp_conj_sqrt_div(G, K + 1)
    g_tail = abs(G[-1]) * (G.size ** -0.5) * 2.0
    checks.append(_check("qcheck-generating",
                         float(np.max(np.abs(chk_gen - qc[: K + 1]))), tol + g_tail))

    gf, gf_bound = seqspace.pp_inv_sqrt(+1, F[: max(2 * K + 2, G.size)],
                                        max(cfg.m_laurent, L + K), K + 1)
    checks.append(_check("g-as-projected-f",
                         float(np.max(np.abs(G[: K + 1] - (-math.pi / 2.0) * gf))),
                         tol + math.pi / 2.0 * gf_bound))

    v = seqspace.h_decompose(seqspace.HSeq(F[: min(F.size, 4096)])).v
    if exact:
        qh_long = linmaps.qhat_from_hermite(q.hermite_coeffs, 2 * 65536 + 1)
    else:
        qh_long = qh
    res37 = [abs(qc[2 * n + 1] - kernel_sum_even(qh_long[0::2], n, v))
             for n in range(min(K + 1, (qc.size - 1) // 2))]
    checks.append(_check("odd-index-extraction", max(res37),
                         tol if exact else 100 * tol))

    fd, gd = linmaps.fd_gd_from_f(F[: 2 * K + 2])
    rec = (np.convolve(_sparse_even(fd), seqspace.sqrt_series(1, 2 * K + 1, plus_z=True))
           + np.convolve(_sparse_even(gd), seqspace.sqrt_series(1, 2 * K + 1)))
    checks.append(_check("dirichlet-half-reconstruction",
                         float(np.max(np.abs(rec[: K + 1] - F[: K + 1]))), 1e-10))

    hat_odd_gen = seqspace.sqrt1mz_div(linmaps.map_FD(q, 2 * K + 2, cfg), K + 1)
    checks.append(_check("fd-generates-odd-coefficients",
                         float(np.max(np.abs(hat_odd_gen - qh[1::2][: K + 1]))), tol))

    gd_full = linmaps.map_GD(q, L // 2 if exact else 192, cfg)
    gd1, corr = linmaps.gd_value_at_1(gd_full)
    checks.append(_check("gd-at-1", abs(gd1 - q.q0 / 4.0),
                         (tol * 10 + abs(corr) * 0.25) if exact else 2e-3 * (1 + abs(q.q0))))

    tilde, tbound = linmaps.tilde_n(q, K, cfg)
    res39 = [abs(qc[2 * n + 1] - q.q0 / (4.0 * (2.0 * n + 1.0)) - tilde[n]
                 - kernel_sum_odd(qh_long[1::2], n, v))
             for n in range(K + 1)]
    checks.append(_check("norming-coefficient-identity", max(res39),
                         (tol + tbound) if exact else 100 * tol))
    return checks


def _sparse_even(c: np.ndarray) -> np.ndarray:
    out = np.zeros(2 * c.size)
    out[0::2] = c
    return out


def spectral_checks(q: Potential, cfg: RunConfig, N: int) -> list[dict]:
    """Trace formulas, asymptotic envelopes, gradients, and orthogonality."""
    checks = []
    data = spectral.spectral_data(q, N, cfg, with_neumann=True)
    est, partial = inverse.trace_q0(data.sigma, data.neumann)
    err = np.abs(partial - q.q0)
    half = err.size // 2
    checks.append(_check("trace-boundary-value",
                         err[-1] / (1.0 + abs(q.q0)), 0.5))
    checks.append(_check("trace-boundary-trend",
                         float(np.mean(err[half:]) / max(np.mean(err[:half]), 1e-15)), 1.0))
    defect, envelope = inverse.trace_residual(q, N, cfg)
    checks.append(_check("shift-sum-defect", abs(defect), envelope))

    ns = np.arange(max(3, N // 4), N)
    qh = qhat_seq(q, 2 * N + 1)[1::2]
    sig_res = np.array([data.sigma[n] - (4.0 * n + 3.0) - 2.0 * qh[n] for n in ns])
    rep = asymptotics.residual_report(ns, sig_res)
    checks.append(_check("eigenvalue-residual-decay", rep.fitted_exponent, -0.6))

    qc = qcheck_seq(q, 2 * N + 1)[1::2]
    lp_res = []
    for n in ns:
        tr = ode.solve_psi_plus(q, data.sigma[n], cfg)
        kp = specfun.kappa_set(n)
        lhs = math.log(tr.values()[1][0] / kp.kappa_prime)
        lp_res.append(lhs - (kp.kappa_prime_dot / kp.kappa_prime * data.mu[n] - qc[n]))
    rep2 = asymptotics.residual_report(ns, np.array(lp_res))
    checks.append(_check("boundary-slope-residual-decay", rep2.fitted_exponent, -0.6))

    tilde, _ = linmaps.tilde_n(q, N - 1, cfg)
    model = asymptotics.mu_first_order(q, 8 * N, cfg)
    r_res = np.array([data.r[n] + tilde[n] - q.q0 / (4.0 * (2.0 * n + 1.0))
                      - 0.5 * asymptotics.correction_R(data.mu, n, mu_model=model)[0]
                      for n in ns])
    rep3 = asymptotics.residual_report(ns, r_res)
    checks.append(_check("norming-residual-decay", rep3.fitted_exponent, -0.6))
    checks.append(_check("norming-residual-weighted-norm",
                         float(rep3.weighted_norms[-1]), 10.0 * (1.0 + rep3.weighted_norms[0])))

    checks.extend(gradient_checks(q, cfg, n_max=2, directions=2))
    checks.extend(orthogonality_checks(q, cfg, n_max=3))
    return checks


def gradient_checks(q: Potential, cfg: RunConfig, n_max: int = 5,
                    directions: int = 5, eps: float = 1e-4) -> list[dict]:
    rng = np.random.default_rng(cfg.seed)
    x = q.grid
    worst_sigma = 0.0
    worst_log = 0.0
    for n in range(n_max + 1):
        sigma, _ = spectral.dirichlet_eigenvalue(q, n, cfg)
        psi = spectral.eigenfunction(q, n, cfg)
        chi = spectral.chi_nd(q, n, cfg)
        for _ in range(directions):
            center = rng.uniform(0.3, 3.0)
            width = rng.uniform(1.0, 4.0)
            v = np.exp(-width * (x - center) ** 2)
            qp = Potential(x, q.values + eps * v)
            qm = Potential(x, q.values - eps * v)
            sp_, _ = spectral.dirichlet_eigenvalue(qp, n, cfg)
            sm_, _ = spectral.dirichlet_eigenvalue(qm, n, cfg)
            fd_sigma = (sp_ - sm_) / (2 * eps)
            an_sigma = simpson(psi.psi ** 2 * v, dx=q.h)
            worst_sigma = max(worst_sigma, abs(fd_sigma - an_sigma))
            sgn = (-1.0) ** n
            lp = math.log(sgn * ode.solve_psi_plus(qp, sp_, cfg).values()[1][0])
            lm = math.log(sgn * ode.solve_psi_plus(qm, sm_, cfg).values()[1][0])
            fd_log = (lp - lm) / (2 * eps)
            an_log = simpson(-psi.psi * chi.psi * v, dx=q.h)
            worst_log = max(worst_log, abs(fd_log - an_log))
    return [_check("gradient-eigenvalue", worst_sigma, 1e-5),
            _check("gradient-boundary-slope", worst_log, 1e-4)]


def orthogonality_checks(q: Potential, cfg: RunConfig, n_max: int = 8) -> list[dict]:
    w1, w2, w3 = spectral.orthogonality_defects(q, n_max, cfg)
    return [_check("orthogonality-squares", w1, 1e-5),
            _check("orthogonality-cross", w2, 1e-5),
            _check("orthogonality-products", w3, 1e-5)]


def run_verification(q: Potential, cfg: RunConfig,
                     spectral_doc: dict | None = None) -> list[dict]:
    N = min(cfg.n, 12)
    checks = identity_checks(q, cfg, K=min(cfg.k_basis, 12))
    checks.extend(spectral_checks(q, cfg, N))
    if spectral_doc is not None:
        data = spectral.SpectralDataSet.from_dict(spectral_doc)
        if data.neumann is None:
            raise InputError("spectral file lacks the even eigenvalues "
                             "needed for the trace cross-check")
        est, _ = inverse.trace_q0(data.sigma, data.neumann)
        checks.append(_check("file-trace-consistency",
                             abs(est - data.q0) / (1.0 + abs(data.q0)), 0.5))
    return checks


def cmd_verify(args) -> int:
    cfg = build_config(args)
    q = load_potential(args.potential, cfg)
    sdoc = read_json(args.spectral) if args.spectral else None
    checks = run_verification(q, cfg, sdoc)
    ok = all(c["pass"] for c in checks)
    doc = {"schema_version": REPORT_SCHEMA, "kind": "verify_report",
           "pass": ok, "checks": checks, "config": cfg.to_dict()}
    rows = [f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']:34s} "
            f"residual={c['residual']:.3e}  threshold={c['threshold']:.3e}"
            for c in checks]
    rows.append(("ALL CHECKS PASSED" if ok else "VERIFICATION FAILED"))
    emit(doc, args, "\n".join(rows))
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p):
    p.add_argument("--xmax", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", action="append", metavar="NAME=VALUE")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "table"), default="json")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscspec",
                                 description="spectral toolkit for the perturbed "
                                             "half-line oscillator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues and norming constants")
    p.add_argument("potential")
    p.add_argument("--count", type=int, help="number of data triples (default: config n)")
    p.add_argument("--neumann", action="store_true", help="include the even eigenvalues")
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("darboux", help="one isospectral move")
    p.add_argument("potential")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_darboux)

    p = sub.add_parser("flow", help="composed isospectral moves")
    p.add_argument("potential")
    p.add_argument("--moves", required=True, help="comma list n:t,n:t,...")
    _add_common(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("verify", help="identity and asymptotics report")
    p.add_argument("potential")
    p.add_argument("--spectral", help="optional spectral-data file to cross-check")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reconstruct", help="potential from spectral data")
    p.add_argument("spectral")
    p.add_argument("--basis-dim", type=int)
    p.add_argument("--max-iter", type=int, default=15)
    p.add_argument("--strategy", choices=("newton", "darboux"), default="newton")
    p.add_argument("--log", help="iteration log file (one JSON record per line)")
    _add_common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("linmaps", help="dump generating-function coefficients")
    p.add_argument("potential")
    p.add_argument("--kcoef", type=int, help="coefficient truncation")
    _add_common(p)
    p.set_defaults(func=cmd_linmaps)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (NumericalError, OverflowError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
