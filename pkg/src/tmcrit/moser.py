"""Moser concentrating functions, the cutoff eta_m, and their estimates.

The Moser profile in R^N (omega = area of the unit sphere)::

    v_j(x) = omega^(-1/N) * (log j)^((N-1)/N)          |x| <= 1/j
           = omega^(-1/N) * log(1/|x|) / (log j)^(1/N)  1/j < |x| <= 1
           = 0                                          |x| > 1

has ``||grad v_j||_N = 1``; the scaled copy ``v(x / r)`` keeps that norm.
The cutoff ``eta_m`` vanishes on ``|x| <= r_m = 1/(2 m^(m+1))``, is linear
up to ``2 r_m``, equals ``(m|x|)^(1/m)`` up to ``1/m`` and is 1 beyond.

Radial integrals are done in the variable ``s = log(1/rho)`` with the
exponentials handled in log space, so ``log j`` may be far beyond what
``j`` itself could represent as a float.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import logsumexp

from .fem import unit_sphere_area
from .functional import (
    FeFunction,
    FunctionalParams,
    grad_power_integral,
    log_primitive_F,
    power_integral,
    radial_project,
    rayleigh,
)
from .mesh import MeshError, graded_disc_mesh

log = logging.getLogger(__name__)


class ResolutionError(MeshError):
    """The mesh is too coarse for the requested Moser profile."""


def scale_radius(m: int) -> float:
    """r_m = 1 / (2 m^(m+1))."""
    return 0.5 * float(m) ** (-(m + 1))


@dataclass(frozen=True)
class MoserSpec:
    j: int
    m: int = 4
    radius: float | None = None  # scale of the bump; r_m when omitted
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 2:
            raise ValueError(f"j must be an integer >= 2, got {self.j}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def r_m(self) -> float:
        return scale_radius(self.m)

    @property
    def scale(self) -> float:
        return self.r_m if self.radius is None else float(self.radius)

    @property
    def log_j(self) -> float:
        return math.log(self.j)

    @property
    def required_h(self) -> float:
        """Largest element size near the centre that resolves the plateau."""
        return self.scale * math.exp(-self.log_j) / 2.0

    def to_dict(self) -> dict:
        return {
            "j": int(self.j) if self.j < 2**53 else None,
            "log_j": self.log_j,
            "m": self.m,
            "scale": self.scale,
            "center": None if self.center is None else list(self.center),
        }


def moser_profile(rho, log_j: float, N: int):
    """v_j(rho) for the unit-scale profile, given ``log j``."""
    rho = np.asarray(rho, dtype=float)
    c = unit_sphere_area(N) ** (-1.0 / N)
    with np.errstate(divide="ignore"):
        mid = np.log(1.0 / rho) / log_j ** (1.0 / N)
    out = np.where(rho <= math.exp(-log_j), log_j ** ((N - 1) / N), mid)
    out = np.where(rho > 1.0, 0.0, out)
    return c * out


def _contains_ball(mesh, center: np.ndarray, radius: float) -> bool:
    dom = mesh.domain
    if dom is None:
        return False
    off = np.abs(center - dom.origin)
    if dom.shape == "disc":
        return float(np.linalg.norm(off)) + radius <= dom.radius * (1 + 1e-12)
    half = {"unit-square": (0.5, 0.5), "rectangle": (dom.width / 2, dom.height / 2)}.get(
        dom.shape, (dom.side / 2,) * dom.dim
    )
    return bool(np.all(off + radius <= np.asarray(half) * (1 + 1e-12)))


def _center(mesh, center) -> np.ndarray:
    if center is not None:
        return np.asarray(center, dtype=float)
    return mesh.domain.origin if mesh.domain is not None else np.zeros(mesh.dim)


def moser_function(spec: MoserSpec, mesh, strict: bool = True) -> FeFunction:
    """Nodal interpolant of ``v_j(x / scale)`` centred at ``spec.center``.

    With ``strict`` the mesh must have element size <= scale/(2j) around the
    plateau; otherwise :class:`ResolutionError` reports the required size.
    """
    N = mesh.dim
    c = _center(mesh, spec.center)
    if not _contains_ball(mesh, c, spec.scale):
        raise MeshError(f"ball of radius {spec.scale:.6g} around {c.tolist()} is not inside the domain")
    if strict:
        plateau = spec.scale * math.exp(-spec.log_j)
        h_loc = mesh.local_h(plateau, c)
        if h_loc > spec.required_h * (1 + 1e-9):
            raise ResolutionError(
                f"local element size {h_loc:.3e} near the centre exceeds the required "
                f"h <= scale/(2j) = {spec.required_h:.3e}"
            )
    rho = np.linalg.norm(mesh.nodes - c, axis=1) / spec.scale
    return FeFunction.from_values(moser_profile(rho, spec.log_j, N), mesh)


def eta_profile(rho, m: int):
    """Radial cutoff eta_m(rho)."""
    rho = np.asarray(rho, dtype=float)
    r = scale_radius(m)
    lin = 2.0 * float(m) ** m * (rho - r)
    with np.errstate(divide="ignore"):
        power = (m * rho) ** (1.0 / m)
    out = np.where(rho <= r, 0.0, np.where(rho <= 2 * r, lin, np.where(rho <= 1.0 / m, power, 1.0)))
    return out


def cutoff_eta(m: int, mesh, center=None) -> np.ndarray:
    """Nodal values of eta_m; a multiplier, equal to 1 on the boundary."""
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    c = _center(mesh, center)
    if not _contains_ball(mesh, c, 2.0 / m):
        raise MeshError(f"B_(2/m) with m={m} is not contained in the domain")
    return eta_profile(np.linalg.norm(mesh.nodes - c, axis=1), m)


def cut_off(u: FeFunction, m: int, center=None) -> FeFunction:
    """eta_m * u."""
    return FeFunction(cutoff_eta(m, u.mesh, center) * u.coefficients, u.mesh)


# ---------------------------------------------------------------- radial oracles


def _log_region_integral(logg, L: float, N: int) -> float:
    """log of int_0^L exp(logg(s) - N s) ds, robust to huge exponents."""
    # panels graded geometrically towards both ends, where the layers sit
    steps = 2.0 ** np.arange(-4, math.ceil(math.log2(max(L, 1.0))) + 1)
    cuts = np.unique(np.clip(np.r_[0.0, steps, L - steps, L], 0.0, L))
    with np.errstate(divide="ignore"):
        probe = np.unique(np.r_[cuts, np.linspace(0.0, L, 257)])
        shift = float(np.max(logg(probe) - N * probe))
        f = lambda s: math.exp(min(float(logg(s)) - N * s - shift, 700.0))
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            total += quad(f, a, b, limit=200, epsabs=0.0, epsrel=1e-12)[0]
    return math.log(total) + shift if total > 0 else -math.inf


def radial_log_integral(log_G, log_j: float, N: int) -> float:
    """log of int_{B_1} G(v_j) dx for a profile functional given as ``log G(value)``."""
    omega = unit_sphere_area(N)
    c = omega ** (-1.0 / N)
    v0 = c * log_j ** ((N - 1) / N)
    with np.errstate(divide="ignore"):
        inner = math.log(omega / N) - N * log_j + float(log_G(v0))
    slope = c / log_j ** (1.0 / N)
    outer = math.log(omega) + _log_region_integral(lambda s: log_G(slope * np.asarray(s)), log_j, N)
    return float(logsumexp([inner, outer]))


def moser_norm_power(log_j: float, N: int) -> float:
    """||v_j||_N^N by radial quadrature."""
    return math.exp(radial_log_integral(lambda v: N * np.log(v), log_j, N))


def moser_grad_norm_power(log_j: float, N: int) -> float:
    """||grad v_j||_N^N by radial quadrature (equals 1)."""
    omega = unit_sphere_area(N)
    g = omega ** (-1.0 / N) / log_j ** (1.0 / N)  # |v'(rho)| * rho on the log region
    return omega * g**N * log_j


def moser_tm_integral(log_j: float, N: int, alpha: float | None = None) -> float:
    """int_{B_1} exp(alpha v_j^N') dx, alpha defaulting to alpha_N."""
    p = FunctionalParams(N)
    a = p.alpha_N if alpha is None else alpha
    Nc = p.N_conj
    return math.exp(radial_log_integral(lambda v: a * np.asarray(v) ** Nc, log_j, N)) + 0.0


# ---------------------------------------------------------------- test meshes and functions


def moser_test_mesh(spec: MoserSpec, h_rel: float, radius: float = 1.0):
    """Disc graded towards the origin with rings at the kinks of the scaled profile."""
    kink = spec.scale * math.exp(-spec.log_j)
    return graded_disc_mesh(radius, h_rel, kink / 4, (kink, spec.scale))


def cutoff_test_mesh(m_range, h_rel: float = 0.1, radius: float = 1.0):
    """Disc graded towards the origin with rings at every breakpoint of eta_m."""
    bps = []
    for m in m_range:
        r = scale_radius(int(m))
        bps += [r, 2 * r, 1.0 / m]
    return graded_disc_mesh(radius, h_rel, min(bps) / 10, bps)


def smooth_radial_set(mesh) -> list[FeFunction]:
    """A few smooth functions vanishing on the unit circle, not vanishing at 0."""
    x, y = mesh.nodes.T[:2]
    r2 = x * x + y * y
    vals = [1 - r2, (1 - r2) ** 2, np.cos(0.5 * np.pi * np.sqrt(r2)), (1 - r2) * (1 + x), np.exp(-r2) - np.exp(-1)]
    return [FeFunction.from_values(v, mesh) for v in vals]


# ---------------------------------------------------------------- cutoff asymptotics


@dataclass
class CutoffReport:
    N: int
    m_values: list
    rows: list = field(default_factory=list)
    slopes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"N": self.N, "m_values": list(self.m_values), "rows": self.rows, "slopes": self.slopes}


def _slope(ms, devs):
    devs = np.abs(np.asarray(devs, dtype=float))
    if np.any(devs == 0) or len(ms) < 2:
        return None
    return float(np.polyfit(np.log(ms), np.log(devs), 1)[0])


def cutoff_asymptotics_report(u_set, m_range, center=None) -> CutoffReport:
    """Deviations caused by multiplying each u (on M) by eta_m.

    For every (u, m) records the changes of ``int |u|^N``, of
    ``int |grad u|^N`` and of Psi after re-projection onto M, then fits the
    log-log slope of each against m.
    """
    u_set = list(u_set)
    mesh = u_set[0].mesh
    N = mesh.dim
    ms = [int(m) for m in m_range]
    rep = CutoffReport(N, ms)
    for idx, u in enumerate(u_set):
        u = radial_project(u, N)
        base_pow = power_integral(u, N)
        base_psi = 1.0 / base_pow
        dp, dg, ds = [], [], []
        for m in ms:
            w = cut_off(u, m, center)
            pw = power_integral(w, N)
            gw = grad_power_integral(w, N)
            dev = (pw - base_pow, gw - 1.0, rayleigh(w, N) - base_psi)
            dp.append(dev[0])
            dg.append(dev[1])
            ds.append(dev[2])
            rep.rows.append({"u": idx, "m": m, "power": dev[0], "gradient": dev[1], "psi": dev[2]})
        rep.slopes.append({"u": idx, "power": _slope(ms, dp), "gradient": _slope(ms, dg), "psi": _slope(ms, ds)})
    return rep


# ---------------------------------------------------------------- level certificate


@dataclass
class MoserLevelReport:
    spec: MoserSpec
    N: int
    lam: float
    mode: str
    t_j: float
    sup_value: float
    threshold: float
    certified: bool
    bracket: float  # 1 - lam * int v^N exp(t_j^N' v^N') at t_j
    psi: float  # Psi of the scaled bump
    grid_max: float | None = None

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "N": self.N,
            "lambda": self.lam,
            "mode": self.mode,
            "t_j": self.t_j,
            "sup_value": self.sup_value,
            "threshold": self.threshold,
            "certified": self.certified,
            "bracket": self.bracket,
            "psi": self.psi,
            "grid_max": self.grid_max,
        }


class _RadialBump:
    """Energy pieces of t * v_j(x / r) from radial quadrature."""

    def __init__(self, spec: MoserSpec, params: FunctionalParams):
        self.N, self.Nc = params.N, params.N_conj
        self.log_j = spec.log_j
        self.log_rN = params.N * math.log(spec.scale)
        self.params = params

    def log_stationary(self, t: float) -> float:
        # log of r^N int_{B_1} v^N exp(t^N' v^N')
        a = t**self.Nc
        g = lambda v: self.N * np.log(v) + a * np.asarray(v) ** self.Nc
        return self.log_rN + radial_log_integral(g, self.log_j, self.N)

    def log_F_integral(self, t: float) -> float:
        g = lambda v: log_primitive_F(t * np.asarray(v, dtype=float), self.params)
        return self.log_rN + radial_log_integral(g, self.log_j, self.N)

    def power(self) -> float:
        return math.exp(self.log_rN) * moser_norm_power(self.log_j, self.N)


class _MeshBump:
    def __init__(self, spec: MoserSpec, params: FunctionalParams, mesh, strict: bool):
        v = moser_function(spec, mesh, strict=strict)
        keep = v.coefficients > 0
        self.v = v.coefficients[keep]
        self.logw = np.log(mesh.space.mass[keep])
        self.N, self.Nc, self.params = params.N, params.N_conj, params
        self.grad = grad_power_integral(v, params.N)

    def log_stationary(self, t: float) -> float:
        return float(logsumexp(self.logw + self.N * np.log(self.v) + t**self.Nc * self.v**self.Nc))

    def log_F_integral(self, t: float) -> float:
        return float(logsumexp(self.logw + log_primitive_F(t * self.v, self.params)))

    def power(self) -> float:
        return float(np.exp(logsumexp(self.logw + self.N * np.log(self.v))))


def moser_level_certificate(
    spec: MoserSpec, params: FunctionalParams, t_grid=None, mesh=None, strict: bool = True
) -> MoserLevelReport:
    """Maximise t -> Phi(t v) along the scaled Moser bump and compare with alpha_N^(N-1)/N.

    Without a mesh the bump is integrated radially (the continuum level);
    with one, on its nodes.  The maximiser solves the scalar stationarity
    equation ``lam * int v^N exp(t^N' v^N') = 1``, which has exactly one
    root because the left side increases in t.
    """
    if not params.lam > 0:
        raise ValueError("lambda must be positive")
    N, lam = params.N, params.lam
    bump = _RadialBump(spec, params) if mesh is None else _MeshBump(spec, params, mesh, strict)
    grad_term = 1.0 if mesh is None else bump.grad
    threshold = params.alpha_N ** (N - 1) / N
    psi = 1.0 / bump.power()

    def phi(t):
        return grad_term * t**N / N - lam * math.exp(bump.log_F_integral(t))

    def h(t):
        # log of lam * int v^N exp(t^N' v^N') relative to the gradient term
        return math.log(lam) + bump.log_stationary(t) - math.log(grad_term)

    t_j = 0.0
    if h(0.0) < 0.0:  # otherwise Psi(v) <= lambda and Phi(t v) <= 0 for all t
        lo, hi = 0.0, 1.0
        while h(hi) < 0.0:
            lo, hi = hi, 2.0 * hi
        t_j = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    sup = phi(t_j) if t_j > 0 else 0.0
    bracket = -math.expm1(h(t_j))
    grid_max = None
    if t_grid is not None:
        vals = []
        for t in np.asarray(t_grid, dtype=float):
            try:
                vals.append(phi(t))
            except OverflowError:
                break
        grid_max = max(vals) if vals else None
    return MoserLevelReport(
        spec, N, lam, "radial" if mesh is None else "mesh", float(t_j), float(sup), threshold,
        bool(sup < threshold), float(bracket), float(psi), grid_max,
    )
