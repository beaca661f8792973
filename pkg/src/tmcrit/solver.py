"""Minimax critical points of Phi: mountain pass, linking, multiplicity sweep.

The linking geometry is built on P1 meshes: ``A0`` samples the symmetric
span of (cut-off) eigenfunctions, ``B0`` samples ``{Psi >= lambda_{k+1}}``,
``v`` is a resolvable Moser bump.  The deformation of ``X`` is realised by
a local minimax iteration: for a direction ``v`` the peak is the local
maximiser of Phi over the half space ``span(L) + t v`` (t >= 0), and ``v`` is
moved down the preconditioned gradient at the peak.  Points of ``A`` are
never moved: beyond an inner radius the deformed direction is blended back
to the original one, and Phi <= 0 is checked on that collar.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.sparse.linalg import spsolve
from scipy.special import logsumexp
from scipy.stats import spearmanr

from .eigen import eigen_sequence, gap_threshold
from .functional import (
    ExponentialRangeError,
    FeFunction,
    FunctionalParams,
    energy_Phi,
    grad_Phi,
    grad_power_integral,
    hess_Phi,
    log_primitive_F,
    power_integral,
)
from .moser import MoserSpec, ResolutionError, cutoff_eta, moser_function

log = logging.getLogger(__name__)

ARMIJO = 1e-4


class LinkingError(ValueError):
    """The requested lambda does not admit the linking construction."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def ps_threshold(params: FunctionalParams) -> float:
    """alpha_N^(N-1) / N, the compactness level."""
    return params.alpha_N ** (params.N - 1) / params.N


class _Energy:
    """Phi and derivatives on raw coefficient vectors of one mesh."""

    def __init__(self, mesh, params: FunctionalParams):
        self.mesh, self.p = mesh, params
        self.S = mesh.space
        self.N = params.N

    def value(self, c) -> float:
        return energy_Phi(c, self.p, self.mesh)

    def safe(self, c) -> float:
        """Phi(c), or -inf when the F term is beyond double range."""
        try:
            return self.value(c)
        except ExponentialRangeError:
            a = grad_power_integral(c, self.N, self.mesh) / self.N
            nz = c != 0
            lf = logsumexp(np.log(self.S.mass[nz]) + log_primitive_F(c[nz], self.p))
            lf += math.log(self.p.lam) if self.p.lam > 0 else -math.inf
            return -math.inf if lf > 700 else a - math.exp(lf)

    def grad(self, c) -> np.ndarray:
        return grad_Phi(c, self.p, self.mesh)

    def hess(self, c):
        return hess_Phi(c, self.p, self.mesh)

    def norm(self, c) -> float:
        return grad_power_integral(c, self.N, self.mesh) ** (1.0 / self.N)

    def project(self, c) -> np.ndarray:
        return c / self.norm(c)

    def psi(self, c) -> float:
        return 1.0 / power_integral(c, self.N, self.mesh)

    def precondition(self, c, r) -> np.ndarray:
        S = self.S
        if self.N == 2:
            return S.stiffness_solve(r)
        w = np.linalg.norm(S.gradients(c), axis=1) ** (self.N - 2)
        w = w + 0.1 * max(float(w.max()), 1e-300)
        out = np.zeros_like(c)
        out[S.free] = spsolve(S.restrict(S.weighted_stiffness(S.vol * w)), r[S.free])
        return out


# ---------------------------------------------------------------- linking sets


@dataclass
class LinkingSets:
    k: int
    lam: float
    mode: str  # "mountain-pass", "linking" or "multiplicity"
    mesh: object = field(repr=False)
    params: FunctionalParams
    lambda_k: float
    lambda_k1: float
    basis: np.ndarray = field(repr=False)  # columns spanning A0, on M
    support: np.ndarray = field(repr=False)  # columns kept in every peak search
    A0: np.ndarray = field(repr=False)  # rows: symmetric sample on M
    B0: np.ndarray = field(repr=False)  # rows: sample of {Psi >= lambda_k1} on M
    v: FeFunction = field(repr=False)
    r: float
    R: float
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    cap: list = field(default_factory=list, repr=False)  # (a index, s) of cap rows of A
    info: dict = field(default_factory=dict)

    def in_B0(self, u) -> bool:
        c = np.asarray(getattr(u, "coefficients", u), dtype=float)
        if not np.any(c):
            return False
        return grad_power_integral(c, self.params.N, self.mesh) / power_integral(
            c, self.params.N, self.mesh
        ) >= self.lambda_k1 * (1 - 1e-12)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda": self.lam,
            "mode": self.mode,
            "lambda_k": self.lambda_k,
            "lambda_k1": self.lambda_k1,
            "r": self.r,
            "R": self.R,
            "n_A0": len(self.A0),
            "n_B0": len(self.B0),
            "n_A": len(self.A),
            "n_B": len(self.B),
            "n_X": len(self.X),
            **self.info,
        }


def _sphere_samples(q: int, n: int) -> np.ndarray:
    """Symmetric samples of the unit sphere in R^q."""
    if q == 1:
        return np.array([[1.0], [-1.0]])
    if q == 2:
        th = np.pi * np.arange(n) / n
        half = np.column_stack([np.cos(th), np.sin(th)])
    else:
        # Fibonacci points on the upper hemisphere of S^2, padded by zeros
        i = np.arange(n) + 0.5
        z = i / n
        phi = np.pi * (1 + 5**0.5) * i
        rho = np.sqrt(1 - z**2)
        half = np.zeros((n, q))
        half[:, :3] = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    return np.vstack([half, -half])


def _moser_direction(mesh, lam: float, E: _Energy) -> tuple[np.ndarray, dict]:
    """Largest resolvable Moser bump at the centre with Psi > lam."""
    dom = mesh.domain
    rho = 0.5 * dom.inradius()
    while True:
        j = 2
        while mesh.local_h(rho / (j + 1), dom.origin) <= rho / (2 * (j + 1)):
            j += 1
        spec = MoserSpec(j, radius=rho)
        try:
            v = moser_function(spec, mesh).coefficients
            strict = True
        except ResolutionError:
            v = moser_function(spec, mesh, strict=False).coefficients
            strict = False
        v = E.project(v)
        if E.psi(v) > lam or rho < 4 * mesh.h:
            return v, {"moser_j": j, "moser_radius": rho, "moser_resolved": strict, "psi_v": E.psi(v)}
        rho *= 0.5


def _deflate(v, basis, N, mass):
    for u in basis:
        Bu = mass * np.abs(u) ** (N - 2) * u
        v = v - (np.dot(Bu, v) / np.dot(Bu, u)) * u
    return v


def _smallest_m(mesh) -> int:
    m = 1
    while 2.0 / m > mesh.domain.inradius():
        m += 1
    return m


def build_linking_sets(
    k: int,
    lam: float,
    mesh,
    params: FunctionalParams | None = None,
    *,
    eigen: list | None = None,
    multiplicity: int | None = None,
    m: int | None = None,
    n_random: int = 24,
    n_t: int = 9,
    seed: int = 0,
    tol: float = 1e-9,
) -> LinkingSets:
    """Sample the sets A, B, X for lambda_k < lam < lambda_{k+1}.

    ``k = 0`` gives the mountain pass segment.  With ``multiplicity = m`` the
    sets follow the multiplicity construction: ``A0`` is the sphere of the
    span of the first ``k + m`` eigenfunctions, ``A = R A0`` and ``X`` the
    ball it bounds.  Otherwise ``A0`` is the cut-off span of the first ``k``
    eigenfunctions and ``v`` a Moser bump.
    """
    N = mesh.dim
    params = FunctionalParams(N, lam) if params is None else params.with_lambda(lam)
    if params.N != N:
        raise ValueError(f"N={params.N} differs from the mesh dimension {N}")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    E = _Energy(mesh, params)
    S = mesh.space
    need = k + (multiplicity or 1)
    if eigen is None or len(eigen) < need:
        eigen = eigen_sequence(mesh, N, need, tol=tol)
    lam_k = eigen[k - 1].lambda_k if k >= 1 else 0.0
    lam_k1 = eigen[k].lambda_k
    diag = {"lambda_k": lam_k, "lambda_k1": lam_k1, "lambda": lam}
    if k >= 1 and lam_k1 - lam_k <= 1e-6 * lam_k1:
        raise LinkingError("lambda_k and lambda_k+1 coincide: k splits an eigenvalue cluster", diag)
    if not lam_k < lam < lam_k1:
        raise LinkingError(f"lambda={lam} is not strictly between lambda_k and lambda_k+1", diag)
    phis = [E.project(e.eigenfunction.coefficients) for e in eigen]
    rng = np.random.default_rng(seed)
    info: dict = {}

    if multiplicity:
        mode = "multiplicity"
        basis = np.column_stack(phis[: k + multiplicity])
        support = np.column_stack(phis[:k]) if k else np.zeros((mesh.n_nodes, 0))
        v = phis[k]
    elif k == 0:
        mode = "mountain-pass"
        basis = support = np.zeros((mesh.n_nodes, 0))
        v, info = _moser_direction(mesh, lam, E)
    else:
        mode = "linking"
        m = _smallest_m(mesh) if m is None else m
        while True:
            eta = cutoff_eta(m, mesh)
            basis = np.column_stack([E.project(eta * p) for p in phis[:k]])
            coeffs = _sphere_samples(k, 8 * k)
            psis = [E.psi(E.project(basis @ a)) for a in coeffs]
            if max(psis) <= lam:
                break
            if m >= 12:
                raise LinkingError("cut-off eigenfunctions exceed lambda for every m <= 12", diag)
            m += 1
        support = basis
        v, info = _moser_direction(mesh, lam, E)
        info.update(m=m, max_psi_A0=max(psis))
        if E.psi(v) <= lam:
            raise LinkingError("Moser direction has Psi <= lambda; refine the mesh", {**diag, **info})

    q = basis.shape[1]
    if q:
        coeffs = _sphere_samples(q, {1: 1, 2: 16, 3: 24}.get(q, 24))
        A0 = np.array([E.project(basis @ a) for a in coeffs])
    else:
        A0 = np.zeros((0, mesh.n_nodes))

    # B0: eigenfunctions from lambda_{k+1} up, the Moser bump, smoothed noise
    cands = list(phis[k:]) + ([v] if mode != "multiplicity" else [])
    for _ in range(n_random):
        w = S.stiffness_solve(S.mass * S.zero_boundary(rng.standard_normal(mesh.n_nodes)))
        cands.append(_deflate(w, phis[:k], N, S.mass))
    B0 = []
    for c in cands:
        c = E.project(c)
        if grad_power_integral(c, N, mesh) / power_integral(c, N, mesh) >= lam_k1 * (1 - 1e-12):
            B0 += [c, -c]
    B0 = np.array(B0)

    # R from the explicit upper bound: Phi(tu) <= 0 once t >= rho * Psi(u)
    Nc = params.N_conj
    rho_star = (Nc * mesh.volume ** (1.0 / (N - 1)) / lam) ** (1.0 / Nc)
    s_grid = np.linspace(0.0, 1.0, n_t)
    if mode == "multiplicity":
        cap_dirs, cap_idx = list(A0), [(i, 0.0) for i in range(len(A0))]
    elif q == 0:
        cap_dirs, cap_idx = [v], [(-1, 1.0)]
    else:
        cap_dirs, cap_idx = [], []
        for i, a in enumerate(A0):
            for s in s_grid:
                w = (1 - s) * a + s * v
                cap_dirs.append(E.project(w))
                cap_idx.append((i, float(s)))
    R = 1.05 * rho_star * max(E.psi(c) for c in cap_dirs)

    # r: largest radius with inf Phi(r B0) > 0, found by bisection, then halved
    def inf_B(r):
        return min(E.safe(r * b) for b in B0[::2])

    lo, hi = 1e-3, 1e-3
    while inf_B(lo) <= 0:
        lo *= 0.5
        if lo < 1e-12:
            raise LinkingError("no radius with inf Phi(B) > 0 found", diag)
    hi = lo
    while inf_B(hi) > 0 and hi < R:
        lo, hi = hi, 2 * hi
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if inf_B(mid) > 0 else (lo, mid)
    r = 0.5 * lo
    R = max(R, 2 * r)

    cap = np.array([R * c for c in cap_dirs])
    if mode == "multiplicity":
        A = cap
    else:
        cone = [t * a for a in A0 for t in np.linspace(0.0, R, n_t)] or [np.zeros(mesh.n_nodes)]
        A = np.vstack([np.array(cone), cap])
    outer = cap if mode == "multiplicity" or q == 0 else np.vstack([R * A0, cap])
    taus = np.linspace(0.0, 1.0, n_t)
    X = np.array([t * x for x in outer for t in taus])
    B = r * B0
    info.update(
        rho_star=rho_star,
        max_phi_A=max(E.safe(a) for a in A),
        inf_phi_B=inf_B(r),
        r_crossing=lo,
    )
    log.info("linking sets: mode=%s r=%.4g R=%.4g", mode, r, R)
    return LinkingSets(
        k, lam, mode, mesh, params, lam_k, lam_k1, basis, support, A0, B0,
        FeFunction(v, mesh), r, R, A, B, X, cap_idx, info,
    )


# ---------------------------------------------------------------- peak and descent


def _peak(E: _Energy, Bm: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Local maximiser of Phi over span(Bm), last coefficient >= 0."""
    free = E.S.free
    Bf = Bm[free]

    def f(x):
        val = E.safe(Bm @ x)
        return math.inf if val == -math.inf else -val

    def g(x):
        return -(Bm.T @ E.grad(Bm @ x))

    def H(x):
        return -(Bf.T @ (E.hess(Bm @ x) @ Bf))

    if Bm.shape[1] == 1:
        # one-dimensional: bracket the maximum along the ray first
        t = max(float(x0[0]), 1e-3)
        while f(np.array([t])) < f(np.array([0.5 * t])):
            t *= 2.0
        res = minimize_scalar(lambda s: f(np.array([s])), bounds=(0.0, t), method="bounded",
                              options={"xatol": 1e-12 * t})
        x0 = np.array([res.x])
    res = minimize(f, x0, jac=g, hess=H, method="trust-exact", options={"gtol": 1e-14, "maxiter": 200})
    x = res.x
    return -x if x[-1] < 0 else x


@dataclass
class NewtonResult:
    u: FeFunction
    residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def newton_refine(u0, params: FunctionalParams, tol: float = 1e-10, max_iter: int = 50, mesh=None) -> NewtonResult:
    """Damped Newton on grad Phi = 0 with a stiffness-shift continuation fallback.

    A step solves ``(H + mu K) d = -g``; ``mu = 0`` is plain Newton and is
    raised whenever the residual cannot be reduced along ``d``.
    """
    mesh = getattr(u0, "mesh", mesh)
    E = _Energy(mesh, params)
    S = E.S
    c = np.array(getattr(u0, "coefficients", u0), dtype=float)
    g = E.grad(c)
    res = float(np.linalg.norm(g))
    history = [res]
    K = S.restrict(S.stiffness())
    scale = float(K.diagonal().max())
    mu = 0.0
    it = 0
    while res > tol and it < max_iter:
        it += 1
        accepted = False
        for _ in range(12):
            H = E.hess(c) + (mu * scale / float(K.diagonal().max())) * K if mu else E.hess(c)
            d = np.zeros_like(c)
            try:
                d[S.free] = spsolve(H.tocsc(), -g[S.free])
            except RuntimeError:
                d[:] = np.nan
            tau = 1.0
            while np.all(np.isfinite(d)) and tau >= 1.0 / 64:
                trial = c + tau * d
                try:
                    gt = E.grad(trial)
                except ExponentialRangeError:
                    tau *= 0.5
                    continue
                rt = float(np.linalg.norm(gt))
                if rt <= (1 - ARMIJO * tau) * res:
                    c, g, res = trial, gt, rt
                    accepted = True
                    break
                tau *= 0.5
            if accepted:
                mu = 0.0 if mu < 1e-6 else mu / 10
                break
            mu = max(10 * mu, 1e-4)
        history.append(res)
        if not accepted:
            break
    return NewtonResult(FeFunction(c, mesh), res, it, res <= tol, history)


@dataclass
class CriticalPointReport:
    c: float
    u_star: FeFunction
    residual: float
    below_threshold: bool
    history: list = field(default_factory=list, repr=False)
    converged: bool = False
    level_minimax: float = math.nan
    inf_B: float = math.nan
    sup_X: float = math.nan
    sup_deformed: float = math.nan
    a_displacement: float = math.nan
    collar_max: float = math.nan
    threshold: float = math.nan
    newton_iterations: int = 0
    norm: float = 0.0

    @property
    def nontrivial(self) -> bool:
        return self.norm > 1e-8

    @property
    def accepted(self) -> bool:
        return self.converged and self.below_threshold and self.nontrivial

    def bracket_ok(self, tol: float) -> bool:
        return self.inf_B - tol <= self.c <= self.sup_X + tol

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "residual": self.residual,
            "below_threshold": self.below_threshold,
            "converged": self.converged,
            "accepted": self.accepted,
            "level_minimax": self.level_minimax,
            "inf_phi_B": self.inf_B,
            "sup_phi_X": self.sup_X,
            "sup_phi_deformed_X": self.sup_deformed,
            "A_displacement": self.a_displacement,
            "collar_max_phi": self.collar_max,
            "threshold": self.threshold,
            "newton_iterations": self.newton_iterations,
            "norm": self.norm,
            "iterations": len(self.history),
        }


def _gamma_points(E, sets: LinkingSets, v, R_in, n_t):
    """Images under the deformation of the X samples and of the A samples.

    ``gamma(rho * pi((1-s) a + s v0)) = rho * pi((1-s) a + s w(rho))`` with
    ``w = v`` inside ``R_in`` blending linearly to ``v0`` at ``R``.
    """
    v0 = sets.v.coefficients
    R = sets.R

    def w_of(rho):
        th = min(max((rho - R_in) / (R - R_in), 0.0), 1.0)
        return (1 - th) * v + th * v0

    def gamma(rho, a, s):
        y = (1 - s) * a + s * w_of(rho)
        return rho * E.project(y) if rho > 0 else np.zeros_like(y)

    a_rows = sets.A0 if len(sets.A0) else [np.zeros_like(v0)]
    inner, collar = [], []
    for a in a_rows:
        for s in ([1.0] if not len(sets.A0) else np.linspace(0, 1, n_t)):
            for rho in np.linspace(0.0, R, 2 * n_t + 1):
                (inner if rho <= R_in else collar).append(gamma(rho, a, s))
    moved = 0.0
    if len(sets.A0):
        for a in sets.A0:
            for t in np.linspace(0.0, R, n_t):
                moved = max(moved, float(np.abs(gamma(t, a, 0.0) - t * a).max()))
    for (i, s), x in zip(sets.cap, sets.A[-len(sets.cap):]):
        a = sets.A0[i] if i >= 0 else np.zeros_like(v0)
        moved = max(moved, float(np.abs(gamma(R, a, s) - x).max()))
    return inner, collar, moved


def minimax_mountain_pass(
    sets: LinkingSets,
    params: FunctionalParams | None = None,
    tol: float = 1e-9,
    *,
    support=None,
    v0=None,
    max_iter: int = 300,
    minimax_tol: float | None = None,
) -> CriticalPointReport:
    """Deform X by local minimax descent, then refine the peak with Newton."""
    mesh = sets.mesh
    params = sets.params if params is None else params
    E = _Energy(mesh, params)
    S = E.S
    N = params.N
    L = [np.asarray(getattr(u, "coefficients", u), dtype=float) for u in (
        sets.support.T if support is None else support)]
    v = sets.v.coefficients if v0 is None else np.asarray(getattr(v0, "coefficients", v0), dtype=float)
    v = E.project(_deflate(v, L, N, S.mass))
    lmm_tol = minimax_tol if minimax_tol is not None else max(tol, 1e-6)
    x = np.r_[np.zeros(len(L)), 1.0]
    history = []
    level0 = None
    for it in range(max_iter + 1):
        Bm = np.column_stack(L + [v])
        x = _peak(E, Bm, x)
        p = Bm @ x
        level = E.value(p)
        g = E.grad(p)
        res = float(np.linalg.norm(g))
        if level0 is None:
            level0 = level
        t_v = float(x[-1])
        history.append({"iteration": it, "level": level, "residual": res, "t_v": t_v})
        if res <= lmm_tol or it == max_iter:
            break
        d = E.precondition(p, g)
        slope = float(np.dot(g, d))
        if slope <= 0:
            d, slope = g, float(np.dot(g, g))
        s = 1.0 / max(t_v, 1e-12)
        while True:
            v_new = E.project(_deflate(v - s * d, L, N, S.mass))
            Bn = np.column_stack(L + [v_new])
            xn = _peak(E, Bn, x)
            if E.value(Bn @ xn) <= level - ARMIJO * s * t_v * slope:
                break
            s *= 0.5
            if s * t_v < 1e-12:
                v_new = None
                break
        if v_new is None:
            log.info("minimax descent stagnated at residual %.3e", res)
            break
        v, x = v_new, xn
    nr = newton_refine(FeFunction(p, mesh), params, tol=tol)
    u = nr.u.coefficients
    c = E.value(u)
    thr = ps_threshold(params)

    # deformation bookkeeping: A fixed, collar below zero, sup over deformed X
    rep = CriticalPointReport(
        c, nr.u, nr.residual, c < thr, history, nr.converged, history[-1]["level"],
        threshold=thr, newton_iterations=nr.iterations, norm=E.norm(u) if np.any(u) else 0.0,
    )
    if len(sets.B):
        rep.inf_B = min(E.safe(b) for b in sets.B)
    sup_samples = max(E.safe(xx) for xx in sets.X) if len(sets.X) else -math.inf
    if sets.mode != "multiplicity" and support is None and v0 is None:
        pn = E.norm(p)
        R_in = 0.5 * sets.R if 2 * pn < 0.5 * sets.R else 0.5 * (pn + sets.R)
        inner, collar, moved = _gamma_points(E, sets, v, R_in, 5)
        rep.a_displacement = moved
        rep.collar_max = max((E.safe(x_) for x_ in collar), default=-math.inf)
        rep.sup_deformed = max([history[-1]["level"]] + [E.safe(x_) for x_ in inner] + [rep.collar_max])
        rep.sup_X = max(sup_samples, level0)
    else:
        rep.sup_X = max(sup_samples, level0) if v0 is None else sup_samples
    if not rep.below_threshold:
        log.warning("level %.6g is not below the compactness threshold %.6g", c, thr)
    return rep


# ---------------------------------------------------------------- bifurcation sweep


def energy_level_bound(lam: float, lambda_k: float, lambda_k1: float, N: int, volume: float) -> float:
    """(lambda_{k+1} - lam)^N |Omega| / (N^2 lambda_k^(N-1))."""
    return (lambda_k1 - lam) ** N * volume / (N**2 * lambda_k ** (N - 1))


@dataclass
class SweepReport:
    k: int
    m_mult: int
    lambdas: list
    lambda_k: float
    lambda_k1: float
    gap: float
    entries: list = field(default_factory=list)
    spearman: list = field(default_factory=list)
    solutions: dict = field(default_factory=dict, repr=False)

    @property
    def all_within_bound(self) -> bool:
        return all(e["within_bound"] for e in self.entries)

    @property
    def complete(self) -> bool:
        return len(self.entries) == self.m_mult * len(self.lambdas)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m_mult,
            "lambdas": list(self.lambdas),
            "lambda_k": self.lambda_k,
            "lambda_k1": self.lambda_k1,
            "gap_threshold": self.gap,
            "entries": self.entries,
            "spearman": self.spearman,
            "all_within_bound": self.all_within_bound,
            "complete": self.complete,
        }


def _distinct(u, others, E, rtol=1e-3) -> bool:
    nu = E.norm(u)
    return all(min(E.norm(u - w), E.norm(u + w)) > rtol * nu for w in others)


def bifurcation_sweep(
    k: int,
    m_mult: int,
    lambda_grid,
    mesh,
    params: FunctionalParams | None = None,
    tol: float = 1e-9,
    eigen: list | None = None,
    seed: int = 0,
) -> SweepReport:
    """Track m_mult solution pairs along an increasing lambda grid.

    The first pair uses the eigenfunctions below lambda_{k+1} as support;
    each further pair adds the solutions already found there, which steers
    the peak away from them.  Every branch is continued from its solution
    at the previous grid point.
    """
    if k < 1:
        raise ValueError("the sweep needs k >= 1")
    N = mesh.dim
    params = FunctionalParams(N) if params is None else params
    if eigen is None or len(eigen) < k + m_mult:
        eigen = eigen_sequence(mesh, N, k + m_mult, tol=tol)
    lam_k, lam_k1 = eigen[k - 1].lambda_k, eigen[k].lambda_k
    gap = gap_threshold(lam_k, lam_k1, N, mesh.volume)
    grid = [float(x) for x in lambda_grid]
    lo = max(lam_k, gap)
    if any(b <= a for a, b in zip(grid[:-1], grid[1:])):
        raise ValueError("lambda grid must be strictly increasing")
    if not all(lo < x < lam_k1 for x in grid):
        raise ValueError(f"lambda grid must lie in ({lo:.10g}, {lam_k1:.10g})")
    rep = SweepReport(k, m_mult, grid, lam_k, lam_k1, gap)
    branches: list = [[] for _ in range(m_mult)]
    for lam in grid:
        p = params.with_lambda(lam)
        E = _Energy(mesh, p)
        sets = build_linking_sets(k, lam, mesh, p, eigen=eigen, multiplicity=m_mult, seed=seed, tol=tol)
        bound = energy_level_bound(lam, lam_k, lam_k1, N, mesh.volume)
        found = []
        for j in range(m_mult):
            prev = branches[j][-1] if branches[j] else None
            v0 = prev if prev is not None else sets.basis[:, k + j]
            support = list(sets.support.T) + found
            cp = minimax_mountain_pass(sets, p, tol, support=support, v0=v0)
            u = cp.u_star.coefficients
            ok = cp.accepted and _distinct(u, found, E)
            if not ok:
                log.warning("lambda=%.6g: pair %d not found (residual %.3e)", lam, j + 1, cp.residual)
                branches[j].append(None)
                continue
            found.append(u)
            branches[j].append(u)
            rep.entries.append({
                "lambda": lam,
                "pair": j + 1,
                "phi": cp.c,
                "norm": cp.norm,
                "residual": cp.residual,
                "bound": bound,
                "within_bound": bool(0 < cp.c <= bound + tol),
                "phi_minus": E.value(-u),
            })
            rep.solutions[(lam, j + 1)] = FeFunction(u, mesh)
    for j in range(m_mult):
        pts = [(e["lambda"], e["norm"]) for e in rep.entries if e["pair"] == j + 1]
        rho = float(spearmanr(*zip(*pts))[0]) if len(pts) >= 3 else math.nan
        rep.spearman.append(rho)
    return rep
