"""Energy functional for the N-Laplacian problem with exponential nonlinearity.

    Phi(u) = int (1/N)|grad u|^N - lam F(u),
    F(t)   = int_0^|t| s^(N-1) exp(s^N') ds,   N' = N/(N-1).

Gradient terms are exact for P1 functions; terms in ``u`` itself use the
lumped nodal rule.  Anything that would need ``exp(x)`` with ``x > 700``
raises :class:`ExponentialRangeError` instead of returning ``inf``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fem import unit_sphere_area

EXP_LIMIT = 700.0

# Gauss-Legendre rule reused on every panel of the primitive quadrature
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_PANELS = 9
_TAIL = 45.0  # exp(-45) ~ 3e-20 relative truncation


class ExponentialRangeError(ArithmeticError):
    """exp(|t|^N') would exceed double range."""


@dataclass(frozen=True)
class FunctionalParams:
    N: int
    lam: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")

    @property
    def N_conj(self) -> float:
        return self.N / (self.N - 1)

    @property
    def omega(self) -> float:
        return unit_sphere_area(self.N)

    @property
    def alpha_N(self) -> float:
        return self.N * self.omega ** (1.0 / (self.N - 1))

    def with_lambda(self, lam: float) -> "FunctionalParams":
        return FunctionalParams(self.N, lam)

    def to_dict(self) -> dict:
        return {"N": self.N, "lambda": self.lam, "N_conj": self.N_conj, "alpha_N": self.alpha_N}


@dataclass(eq=False)
class FeFunction:
    """Nodal coefficients of a P1 function vanishing on the boundary."""

    coefficients: np.ndarray
    mesh: object = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (self.mesh.n_nodes,):
            raise ValueError("one coefficient per mesh node expected")
        if np.any(c[self.mesh.boundary_mask] != 0.0):
            raise ValueError("FeFunction must vanish on boundary nodes")
        self.coefficients = c

    @classmethod
    def from_values(cls, values, mesh) -> "FeFunction":
        """Build from nodal values, zeroing the boundary nodes."""
        c = np.array(values, dtype=float)
        c[mesh.boundary_mask] = 0.0
        return cls(c, mesh)

    @classmethod
    def interpolate(cls, fn, mesh) -> "FeFunction":
        return cls.from_values(fn(mesh.nodes), mesh)

    def __neg__(self):
        return FeFunction(-self.coefficients, self.mesh)

    def __mul__(self, c: float):
        return FeFunction(c * self.coefficients, self.mesh)

    __rmul__ = __mul__

    def __add__(self, other: "FeFunction"):
        return FeFunction(self.coefficients + other.coefficients, self.mesh)

    def __sub__(self, other: "FeFunction"):
        return FeFunction(self.coefficients - other.coefficients, self.mesh)

    def to_json(self) -> str:
        return json.dumps({"n_nodes": self.mesh.n_nodes, "coefficients": self.coefficients.tolist()})

    @classmethod
    def from_json(cls, text: str, mesh) -> "FeFunction":
        data = json.loads(text)
        if data["n_nodes"] != mesh.n_nodes:
            raise ValueError("function does not belong to this mesh")
        return cls(np.array(data["coefficients"]), mesh)


def _coeffs(u) -> np.ndarray:
    return u.coefficients if isinstance(u, FeFunction) else np.asarray(u, dtype=float)


def _space(u, mesh=None):
    if isinstance(u, FeFunction):
        return u.mesh.space
    if mesh is None:
        raise TypeError("raw coefficient arrays need an explicit mesh")
    return mesh.space


def _exponent(t, N: int) -> np.ndarray:
    W = np.abs(np.asarray(t, dtype=float)) ** (N / (N - 1))
    if np.any(W > EXP_LIMIT):
        raise ExponentialRangeError(
            f"|t|^N' = {float(np.max(W)):.6g} exceeds {EXP_LIMIT}; exp would overflow"
        )
    return W


def nonlinearity_f(t, params: FunctionalParams):
    """|t|^(N-2) t exp(|t|^N'), without the factor lambda."""
    N = params.N
    t = np.asarray(t, dtype=float)
    W = _exponent(t, N)
    out = np.abs(t) ** (N - 2) * t * np.exp(W)
    return out if out.ndim else float(out)


def nonlinearity_df(t, params: FunctionalParams):
    """Derivative of :func:`nonlinearity_f`."""
    N = params.N
    t = np.asarray(t, dtype=float)
    W = _exponent(t, N)
    out = np.abs(t) ** (N - 2) * np.exp(W) * (N - 1 + params.N_conj * W)
    return out if out.ndim else float(out)


def _scaled_tail_integral(W: np.ndarray, n: int) -> np.ndarray:
    """I(W) = int_0^W (W - y)^n exp(-y) dy by composite Gauss-Legendre.

    With w = s^N' the primitive becomes ((N-1)/N) int_0^W w^(N-2) e^w dw
    = ((N-1)/N) e^W I(W); the integrand of I is smooth and bounded, so a
    fixed panel layout over [0, min(W, 45)] is accurate to rounding.
    """
    W = np.asarray(W, dtype=float)
    top = np.minimum(W, _TAIL)
    width = top / _PANELS
    total = np.zeros_like(W)
    for p in range(_PANELS):
        a = p * width
        y = a[..., None] + 0.5 * width[..., None] * (_GL_X + 1.0)
        vals = (W[..., None] - y) ** n * np.exp(-y)
        total += 0.5 * width * (vals @ _GL_W)
    return total


def primitive_F(t, params: FunctionalParams):
    """F(t) = int_0^|t| s^(N-1) exp(s^N') ds, even in t."""
    N = params.N
    W = _exponent(t, N)
    out = (N - 1) / N * np.exp(W) * _scaled_tail_integral(W, N - 2)
    return out if np.ndim(out) else float(out)


def scaled_primitive_F(t, params: FunctionalParams):
    """exp(-|t|^N') F(t); finite for every t, so bounds can be compared at the guard."""
    N = params.N
    W = np.abs(np.asarray(t, dtype=float)) ** params.N_conj
    out = (N - 1) / N * _scaled_tail_integral(W, N - 2)
    return out if np.ndim(out) else float(out)


def log_primitive_F(t, params: FunctionalParams):
    """log F(t) for t != 0; valid far beyond the overflow guard."""
    N = params.N
    W = np.abs(np.asarray(t, dtype=float)) ** params.N_conj
    with np.errstate(divide="ignore"):
        out = math.log((N - 1) / N) + W + np.log(_scaled_tail_integral(W, N - 2))
    return out if np.ndim(out) else float(out)


def grad_power_integral(u, N: int, mesh=None) -> float:
    """int_Omega |grad u|^N dx (exact for P1)."""
    S = _space(u, mesh)
    g = S.gradients(_coeffs(u))
    return float(np.dot(S.vol, np.linalg.norm(g, axis=1) ** N))


def power_integral(u, N: int, mesh=None) -> float:
    """int_Omega |u|^N dx with the lumped rule."""
    S = _space(u, mesh)
    return float(np.dot(S.mass, np.abs(_coeffs(u)) ** N))


def energy_parts(u, params: FunctionalParams, mesh=None) -> tuple[float, float]:
    """Return (int |grad u|^N / N, int F(u))."""
    S = _space(u, mesh)
    c = _coeffs(u)
    grad_term = grad_power_integral(c, params.N, S.mesh) / params.N
    return grad_term, float(np.dot(S.mass, primitive_F(c, params)))


def energy_Phi(u, params: FunctionalParams, mesh=None) -> float:
    a, b = energy_parts(u, params, mesh)
    return a - params.lam * b


def _grad_term_vector(S, c: np.ndarray, N: int) -> np.ndarray:
    g = S.gradients(c)
    w = S.vol * np.linalg.norm(g, axis=1) ** (N - 2)
    return S.grad_op_t @ (w[:, None] * g).ravel()


def grad_Phi(u, params: FunctionalParams, mesh=None):
    """Coefficient-space gradient of Phi; zero in boundary entries.

    Returns a :class:`FeFunction` when given one, a plain array otherwise.
    """
    S = _space(u, mesh)
    c = _coeffs(u)
    out = _grad_term_vector(S, c, params.N) - params.lam * S.mass * nonlinearity_f(c, params)
    out[S.mesh.boundary_mask] = 0.0
    return FeFunction(out, S.mesh) if isinstance(u, FeFunction) else out


def hess_Phi(u, params: FunctionalParams, mesh=None, reg: float = 1e-12) -> sp.csc_matrix:
    """Hessian of Phi restricted to the free (interior) coefficients.

    For N > 2 the gradient part degenerates where grad u = 0; ``reg``
    (relative to the largest gradient) keeps the matrix invertible there.
    """
    S = _space(u, mesh)
    c = _coeffs(u)
    N = params.N
    g = S.gradients(c)
    if N == 2:
        H = S.stiffness()
    else:
        gn = np.linalg.norm(g, axis=1)
        eps = reg * max(float(gn.max()), 1.0)
        gr = np.sqrt(gn**2 + eps**2)
        d = S.dim
        blocks = (gr ** (N - 2))[:, None, None] * np.eye(d)[None]
        blocks = blocks + (N - 2) * (gr ** (N - 4))[:, None, None] * g[:, :, None] * g[:, None, :]
        H = S.block_stiffness(S.vol[:, None, None] * blocks)
    diag = params.lam * S.mass * nonlinearity_df(c, params)
    H = H - sp.diags(diag)
    return S.restrict(H)


def psi(u, N, mesh=None) -> float:
    """Psi(u) = 1 / int |u|^N; ``N`` may also be a FunctionalParams."""
    if isinstance(N, FunctionalParams):
        N = N.N
    b = power_integral(u, N, mesh)
    if b == 0.0:
        raise ZeroDivisionError("Psi is undefined at u = 0")
    return 1.0 / b


def rayleigh(u, N: int, mesh=None) -> float:
    """int |grad u|^N / int |u|^N, i.e. Psi of the radial projection of u."""
    b = power_integral(u, N, mesh)
    if b == 0.0:
        raise ZeroDivisionError("Rayleigh quotient undefined at u = 0")
    return grad_power_integral(u, N, mesh) / b


def w_norm(u, N: int, mesh=None) -> float:
    """||grad u||_N."""
    return grad_power_integral(u, N, mesh) ** (1.0 / N)


def radial_project(u, N: int, mesh=None):
    """u / ||grad u||_N, the projection onto M = {int |grad u|^N = 1}."""
    if isinstance(N, FunctionalParams):
        N = N.N
    nrm = w_norm(u, N, mesh)
    if nrm == 0.0:
        raise ZeroDivisionError("cannot project u = 0 onto M")
    if isinstance(u, FeFunction):
        return FeFunction(u.coefficients / nrm, u.mesh)
    return np.asarray(u, dtype=float) / nrm


def tm_functional(u, alpha: float, N: int, mesh=None) -> float:
    """int_Omega exp(alpha |u|^N') dx with the lumped rule."""
    S = _space(u, mesh)
    x = alpha * np.abs(_coeffs(u)) ** (N / (N - 1))
    if np.any(x > EXP_LIMIT):
        raise ExponentialRangeError("Trudinger-Moser integrand overflows")
    return float(np.dot(S.mass, np.exp(x)))


def gradient_check(mesh, params: FunctionalParams, n_pairs: int = 100, eps: float = 1e-6, seed: int = 0) -> dict:
    """Compare <grad_Phi(u), w> with central differences of Phi along w.

    u and w are smoothed random functions scaled to max |u| = 1, which keeps
    exp(|u|^N') moderate while every term of Phi contributes.
    """
    S = mesh.space
    rng = np.random.default_rng(seed)

    def smooth():
        c = S.stiffness_solve(S.mass * S.zero_boundary(rng.standard_normal(mesh.n_nodes)))
        return c / np.max(np.abs(c))

    rows = []
    for i in range(n_pairs):
        u, w = smooth(), smooth()
        exact = float(np.dot(grad_Phi(u, params, mesh), w))
        fd = (energy_Phi(u + eps * w, params, mesh) - energy_Phi(u - eps * w, params, mesh)) / (2 * eps)
        rows.append({"pair": i, "directional": exact, "finite_difference": fd,
                     "rel_error": abs(fd - exact) / max(abs(exact), 1e-300)})
    worst = max(r["rel_error"] for r in rows)
    return {"N": params.N, "lambda": params.lam, "eps": eps, "n_pairs": n_pairs,
            "max_rel_error": worst, "rows": rows}
