"""Grid checks of the closed-form inequalities around F, Phi and the level bounds.

Every check returns an :class:`InequalityReport` whose margins are signed
so that a valid inequality has margin >= 0.  The F bounds are compared
after multiplying both sides by exp(-|t|^N'), which keeps every term finite
up to the overflow guard and leaves margins near t = 0 unchanged.  The pass criterion is absolute
(margin >= -1e-12); the floating-point error of the F evaluation is reported
separately and never folded into the margin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import eigen_sequence, gap_threshold
from .functional import (
    EXP_LIMIT,
    FunctionalParams,
    grad_power_integral,
    scaled_primitive_F,
    psi,
)
from .solver import _Energy, energy_level_bound, ps_threshold

PASS_TOL = 1e-12
F_RTOL = 1e-14  # relative accuracy of primitive_F


@dataclass
class InequalityReport:
    name: str
    grid: dict
    min_margin: float
    worst_point: dict
    passed: bool
    min_rel_margin: float = math.nan
    quadrature_tol: float = 0.0
    parts: dict = field(default_factory=dict)
    rows: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "grid": self.grid,
            "min_margin": self.min_margin,
            "min_rel_margin": self.min_rel_margin,
            "worst_point": self.worst_point,
            "quadrature_tol": self.quadrature_tol,
            "parts": self.parts,
            "passed": self.passed,
        }


def t_max(N: int) -> float:
    """Largest |t| the overflow guard admits, 700^(1/N')."""
    return EXP_LIMIT ** ((N - 1) / N)


def default_t_grid(N: int, n: int = 2001) -> np.ndarray:
    """0 followed by log-spaced points on [1e-6, t_max(N)]."""
    return np.r_[0.0, np.geomspace(1e-6, t_max(N), n - 1)]


def _grid_info(t) -> dict:
    t = np.asarray(t, dtype=float)
    return {"n": int(t.size), "min": float(t.min()), "max": float(t.max())}


def _combine(name, t, parts: dict, scales: dict, quad_tol: float, unscale=None) -> InequalityReport:
    """parts: name -> margin array over t; scales: name -> magnitude for relative margins.

    ``unscale`` (same shape as t) turns scaled margins back into raw ones for the rows.
    """
    raw = np.ones_like(np.asarray(t, dtype=float)) if unscale is None else unscale
    mins, rows = {}, []
    worst = (math.inf, None, None)
    rel = math.inf
    for key, marg in parts.items():
        i = int(np.argmin(marg))
        mins[key] = float(marg[i])
        if marg[i] < worst[0]:
            worst = (float(marg[i]), key, float(t[i]))
        sc = np.maximum(np.abs(scales[key]), 1e-300)
        rel = min(rel, float(np.min(marg / sc)))
        with np.errstate(over="ignore"):
            mr = marg * raw
        rows += [
            {"inequality": key, "t": float(tt), "margin": float(m), "margin_raw": float(r)}
            for tt, m, r in zip(t, marg, mr)
        ]
    return InequalityReport(
        name, _grid_info(t), worst[0], {"inequality": worst[1], "t": worst[2]},
        worst[0] >= -PASS_TOL, rel, quad_tol, mins, rows,
    )


def _scaled_setup(N, t_grid):
    p = FunctionalParams(N)
    t = default_t_grid(N) if t_grid is None else np.asarray(t_grid, dtype=float)
    a = np.abs(t)
    W = a**p.N_conj
    if np.any(W > EXP_LIMIT * (1 + 1e-12)):
        raise ValueError(f"t_grid exceeds t_max({N}) = {t_max(N):.6g}")
    return p.N_conj, t, a, W, np.exp(-W), scaled_primitive_F(t, p)


def check_F_upper_bounds(N: int, t_grid=None) -> InequalityReport:
    """F <= |t|^N/N e^|t|^N' - |t|^(N+N')/N^2  and  F <= |t|^(N-N')/N' e^|t|^N'."""
    Nc, t, a, W, s, Fs = _scaled_setup(N, t_grid)
    rhs1 = a**N / N - a ** (N + Nc) / N**2 * s
    rhs2 = a ** (N - Nc) / Nc
    parts = {"upper-1": rhs1 - Fs, "upper-2": rhs2 - Fs}
    return _combine("F-upper", t, parts, {"upper-1": rhs1, "upper-2": rhs2}, F_RTOL * float(np.max(Fs)), np.exp(W))


def check_F_lower_bounds(N: int, t_grid=None) -> InequalityReport:
    """F >= |t|^(N+N')/(N+N'),  F >= |t|^N/N,  F >= |t|^N/N + |t|^(N+N')/(N+N')."""
    Nc, t, a, W, s, Fs = _scaled_setup(N, t_grid)
    l1 = a ** (N + Nc) / (N + Nc) * s
    l2 = a**N / N * s
    parts = {"lower-1": Fs - l1, "lower-2": Fs - l2, "lower-3": Fs - (l1 + l2)}
    return _combine("F-lower", t, parts, dict.fromkeys(parts, Fs), F_RTOL * float(np.max(Fs)), np.exp(W))


def lemma33_bound(t, psi_u: float, params: FunctionalParams, volume: float):
    """t^N/N [1 - lam/(N' |Omega|^(1/(N-1))) (t/Psi(u))^N']."""
    N, Nc = params.N, params.N_conj
    t = np.asarray(t, dtype=float)
    return t**N / N * (1.0 - params.lam / (Nc * volume ** (1.0 / (N - 1))) * (t / psi_u) ** Nc)


def lemma33_root(psi_u: float, params: FunctionalParams, volume: float) -> float:
    """Radius beyond which the bound, hence Phi(t u), is negative."""
    Nc = params.N_conj
    return (Nc * volume ** (1.0 / (params.N - 1)) / params.lam) ** (1.0 / Nc) * psi_u


def check_lemma33(u_samples, t_grid, params: FunctionalParams, mesh=None) -> InequalityReport:
    """Phi(t u) <= t^N/N [1 - lam/(N'|Omega|^(1/(N-1))) (t/Psi(u))^N'] for u on M."""
    t = np.linspace(0.0, 10.0, 201) if t_grid is None else np.asarray(t_grid, dtype=float)
    margins, scales = [], []
    quad = 0.0
    pts = []
    for i, u in enumerate(u_samples):
        msh = getattr(u, "mesh", mesh)
        c = np.asarray(getattr(u, "coefficients", u), dtype=float)
        g = grad_power_integral(c, params.N, msh)
        if abs(g - 1.0) > 1e-10:
            raise ValueError(f"sample {i} is not on M: int |grad u|^N = {g!r}")
        E = _Energy(msh, params)
        ps = psi(c, params.N, msh)
        rhs = lemma33_bound(t, ps, params, msh.volume)
        lhs = np.array([E.safe(tt * c) for tt in t])
        marg = np.where(np.isfinite(lhs), rhs - lhs, np.inf)
        margins.append(marg)
        scales.append(np.maximum(np.abs(rhs), np.abs(np.where(np.isfinite(lhs), lhs, 0.0))))
        fin = np.isfinite(lhs)
        quad = max(quad, F_RTOL * float(np.max(np.abs(lhs[fin]))) if fin.any() else 0.0)
        pts += [(i, float(tt)) for tt in t]
    marg = np.concatenate(margins)
    sc = np.concatenate(scales)
    finite = np.where(np.isfinite(marg), marg, np.finfo(float).max)
    k = int(np.argmin(finite))
    rel = float(np.min(np.where(sc > 0, finite / np.maximum(sc, 1e-300), np.inf)))
    rows = [{"sample": s, "t": tt, "margin": float(m)} for (s, tt), m in zip(pts, finite)]
    return InequalityReport(
        "phi-ray-bound", _grid_info(t), float(finite[k]),
        {"sample": pts[k][0], "t": pts[k][1]}, bool(finite[k] >= -PASS_TOL - quad), rel, quad,
        {"phi-ray-bound": float(finite[k])}, rows,
    )


def check_energy_bound_X(
    k: int, lam: float, mesh, params: FunctionalParams, X_samples, eigen=None, tol: float = 1e-9
) -> InequalityReport:
    """Sampled sup Phi(X) <= (lambda_{k+1}-lam)^N |Omega| / (N^2 lambda_k^(N-1)).

    Also verifies on a lambda grid that the bound lies below alpha_N^(N-1)/N
    exactly where lambda exceeds the gap threshold.
    """
    N = params.N
    params = params.with_lambda(lam)
    if eigen is None or len(eigen) < k + 1:
        eigen = eigen_sequence(mesh, N, k + 1)
    lam_k, lam_k1 = eigen[k - 1].lambda_k, eigen[k].lambda_k
    vol = mesh.volume
    bound = energy_level_bound(lam, lam_k, lam_k1, N, vol)
    E = _Energy(mesh, params)
    vals = np.array([E.safe(np.asarray(getattr(x, "coefficients", x), dtype=float)) for x in X_samples])
    sup = float(np.max(vals))
    margin = bound + tol - sup
    thr = ps_threshold(params)
    gap = gap_threshold(lam_k, lam_k1, N, vol)
    lams = np.linspace(max(lam_k, gap), lam_k1, 202)[1:-1]
    b_grid = energy_level_bound(lams, lam_k, lam_k1, N, vol)
    implication = float(np.min(thr - b_grid))
    rows = [{"lambda": float(l_), "bound": float(b), "threshold": thr} for l_, b in zip(lams, b_grid)]
    return InequalityReport(
        "energy-bound-X",
        {"n_X": len(vals), "lambda": lam, "lambda_k": lam_k, "lambda_k1": lam_k1, "tol": tol},
        margin,
        {"sup_phi_X": sup, "bound": bound},
        bool(margin >= -PASS_TOL and implication > 0),
        margin / max(abs(bound), 1e-300),
        tol,
        {"sup-X": margin, "bound-below-threshold": implication},
        rows,
    )


def ray_samples(mesh, N: int, n_random: int = 4, seed: int = 0) -> list:
    """First eigenfunction plus smoothed random functions, all on M."""
    from .functional import FeFunction, radial_project
    from .eigen import first_eigenpair

    S = mesh.space
    rng = np.random.default_rng(seed)
    out = [first_eigenpair(mesh, N).eigenfunction]
    for _ in range(n_random):
        w = S.stiffness_solve(S.mass * S.zero_boundary(rng.standard_normal(mesh.n_nodes)))
        out.append(FeFunction(w, mesh))
    return [radial_project(u, N) for u in out]


def check_all(N: int, mesh=None, lam: float = 1.0, seed: int = 0) -> list[InequalityReport]:
    """Upper and lower F bounds on the default grid, and the ray bound for Phi."""
    if mesh is None:
        from .mesh import DomainSpec, generate_mesh

        mesh = generate_mesh(DomainSpec("unit-square"), 0.1)
    params = FunctionalParams(N, lam)
    samples = ray_samples(mesh, N, seed=seed)
    return [
        check_F_upper_bounds(N),
        check_F_lower_bounds(N),
        check_lemma33(samples, None, params),
    ]
