"""Dirichlet eigenvalues of -Delta_N on a P1 mesh.

The first pair minimises ``R(u) = int |grad u|^N / int |u|^N`` by a damped
inverse-iteration step: precondition the residual with the Laplacian
linearised at the current iterate, take the step, renormalise.  Higher
levels use a local minimax over spans: with ``L`` the eigenfunctions
already found, ``lambda_k ~ min_v max_{u in span(L, v)} R(u)``.  At N = 2
this is Courant-Fischer; for N > 2 it is an upper-bound surrogate of the
index-based minimax values.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import minimize
from scipy.sparse.linalg import spsolve

from .fem import unit_sphere_area
from .functional import FeFunction

log = logging.getLogger(__name__)

ARMIJO = 1e-4
DEGENERACY_RTOL = 1e-6


class EigenConvergenceError(RuntimeError):
    pass


@dataclass
class EigenEstimate:
    k: int
    lambda_k: float
    eigenfunction: FeFunction
    residual: float
    iterations: int
    converged: bool = True
    degenerate_with_previous: bool = False
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda": self.lambda_k,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "degenerate_with_previous": self.degenerate_with_previous,
        }


class _Rayleigh:
    """Rayleigh quotient pieces for exponent N on a fixed space."""

    def __init__(self, space, N: int):
        self.S = space
        self.N = N

    def parts(self, c):
        S, N = self.S, self.N
        g = S.gradients(c)
        gn = np.linalg.norm(g, axis=1)
        a = float(np.dot(S.vol, gn**N))
        w = S.vol * gn ** (N - 2)
        A = S.grad_op_t @ (w[:, None] * g).ravel()
        Bv = S.mass * np.abs(c) ** (N - 2) * c
        b = float(np.dot(S.mass, np.abs(c) ** N))
        return a, b, A, Bv

    def value(self, c) -> float:
        S, N = self.S, self.N
        a = float(np.dot(S.vol, np.linalg.norm(S.gradients(c), axis=1) ** N))
        return a / float(np.dot(S.mass, np.abs(c) ** N))

    def normalize(self, c):
        a = float(np.dot(self.S.vol, np.linalg.norm(self.S.gradients(c), axis=1) ** self.N))
        return c / a ** (1.0 / self.N)

    def residual(self, c):
        """Euler-Lagrange residual at u = c / ||grad c||_N, with R(u)."""
        u = self.normalize(c)
        a, b, A, Bv = self.parts(u)
        R = a / b
        r = A - R * Bv
        r[self.S.mesh.boundary_mask] = 0.0
        return u, R, r, b

    def precondition(self, c, r):
        """Apply the inverse of the Laplacian linearised at c."""
        S, N = self.S, self.N
        if N == 2:
            return S.stiffness_solve(r)
        gn = np.linalg.norm(S.gradients(c), axis=1)
        w = gn ** (N - 2)
        w = w + 0.1 * max(float(w.max()), 1e-300)  # floor keeps the degenerate weights invertible
        K = S.restrict(S.weighted_stiffness(S.vol * w))
        out = np.zeros_like(c)
        out[S.free] = spsolve(K, r[S.free])
        return out


def _positive_start(S) -> np.ndarray:
    # torsion function: positive in the interior, smooth
    return S.stiffness_solve(S.mass)


def first_eigenpair(mesh, N: int, tol: float = 1e-9, max_iter: int = 500, u0=None) -> EigenEstimate:
    """Lowest eigenpair by damped inverse-iteration descent on the Rayleigh quotient."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    S = mesh.space
    Q = _Rayleigh(S, N)
    c = _positive_start(S) if u0 is None else np.array(getattr(u0, "coefficients", u0), dtype=float)
    c = S.zero_boundary(c)
    history = []
    converged = False
    for it in range(max_iter + 1):
        u, R, r, b = Q.residual(c)
        res = float(np.linalg.norm(r))
        history.append((R, res))
        if res <= tol:
            converged = True
            break
        if it == max_iter:
            break
        d = Q.precondition(u, r)
        slope = N * float(np.dot(r, d)) / b
        if slope <= 0:  # preconditioner lost positivity; plain gradient
            d, slope = r, N * float(np.dot(r, r)) / b
        tau = 1.0
        while True:
            trial = u - tau * d
            if np.any(trial) and Q.value(trial) <= R - ARMIJO * tau * slope:
                break
            tau *= 0.5
            if tau < 1e-12:
                break
        c = trial
    u = Q.normalize(c)
    if u[S.free].sum() < 0:
        u = -u
    lam = Q.value(u)
    est = EigenEstimate(1, lam, FeFunction(u, mesh), res, it, converged, history=history)
    if not converged:
        log.warning("first eigenpair not converged: residual %.3e after %d iterations", res, it)
    return est


def _peak(Q: _Rayleigh, B: np.ndarray, c0: np.ndarray) -> np.ndarray:
    """Maximiser of R over span(B), as coefficients with last entry >= 0."""
    S, N = Q.S, Q.N
    if N == 2:
        G = np.column_stack([S.grad_op @ B[:, j] for j in range(B.shape[1])])
        Kp = G.T @ (np.repeat(S.vol, S.dim)[:, None] * G)
        Mp = B.T @ (S.mass[:, None] * B)
        _, vecs = scipy.linalg.eigh(Kp, Mp)
        c = vecs[:, -1]
    else:
        def negR(x):
            c = B @ x
            a, b, A, Bv = Q.parts(c)
            R = a / b
            return -R, -(N / b) * (B.T @ (A - R * Bv))

        res = minimize(negR, c0, jac=True, method="BFGS", options={"gtol": 1e-13, "maxiter": 500})
        c = res.x
    c = c / np.linalg.norm(c)
    return -c if c[-1] < 0 else c


def _deflate(v, basis, Q: _Rayleigh):
    for u in basis:
        Bu = Q.S.mass * np.abs(u) ** (Q.N - 2) * u
        v = v - (np.dot(Bu, v) / np.dot(Bu, u)) * u
    return v


def minimax_level(mesh, N: int, support: list, v0, tol: float = 1e-9, max_iter: int = 500, k: int = 0):
    """min over v of max over span(support, v) of R, by local minimax descent on v."""
    S = mesh.space
    Q = _Rayleigh(S, N)
    L = [np.asarray(getattr(u, "coefficients", u), dtype=float) for u in support]
    v = Q.normalize(S.zero_boundary(_deflate(np.asarray(v0, dtype=float), L, Q)))
    coeffs = np.r_[np.zeros(len(L)), 1.0]
    history = []
    converged = False
    for it in range(max_iter + 1):
        B = np.column_stack(L + [v])
        coeffs = _peak(Q, B, coeffs)
        p, R, r, b = Q.residual(B @ coeffs)
        # coefficient of v once p is normalised onto M
        t_v = coeffs[-1] * float(np.linalg.norm(p) / max(np.linalg.norm(B @ coeffs), 1e-300))
        res = float(np.linalg.norm(r))
        history.append((R, res))
        if res <= tol:
            converged = True
            break
        if it == max_iter:
            break
        d = Q.precondition(p, r)
        slope = N * float(np.dot(r, d)) / b
        if slope <= 0:
            d, slope = r, N * float(np.dot(r, r)) / b
        tau = 1.0 / max(abs(t_v), 1e-12)
        while True:
            v_new = Q.normalize(v - tau * d)
            Bn = np.column_stack(L + [v_new])
            cn = _peak(Q, Bn, coeffs)
            if Q.value(Bn @ cn) <= R - ARMIJO * tau * abs(t_v) * slope or tau < 1e-14:
                break
            tau *= 0.5
        v = v_new
    u = Q.normalize(p)
    return EigenEstimate(k, Q.value(u), FeFunction(u, mesh), res, it, converged, history=history)


def eigen_sequence(mesh, N: int, k_max: int, tol: float = 1e-9, max_iter: int = 500, seed: int = 0):
    """Estimates of lambda_1 <= ... <= lambda_kmax.

    Stops early (returning what it has) at the first level that fails to
    converge; that level is included with ``converged=False``.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    S = mesh.space
    rng = np.random.default_rng(seed)
    out = [first_eigenpair(mesh, N, tol, max_iter)]
    for k in range(2, k_max + 1):
        if not out[-1].converged:
            break
        noise = S.zero_boundary(rng.standard_normal(S.n))
        v0 = S.stiffness_solve(S.mass * noise)
        est = minimax_level(mesh, N, [e.eigenfunction for e in out], v0, tol, max_iter, k=k)
        prev = out[-1].lambda_k
        est.degenerate_with_previous = abs(est.lambda_k - prev) < DEGENERACY_RTOL * est.lambda_k
        out.append(est)
    return out


def richardson(values, hs, order: float = 2.0) -> float:
    """Extrapolate the last two (h, value) pairs assuming error ~ C h^order."""
    (h1, v1), (h2, v2) = (hs[-2], values[-2]), (hs[-1], values[-1])
    q = (h1 / h2) ** order
    return (q * v2 - v1) / (q - 1.0)


def observed_order(values, hs) -> float:
    v0, v1, v2 = values[-3:]
    return math.log(abs((v1 - v0) / (v2 - v1))) / math.log(hs[-3] / hs[-2])


def gap_threshold(lambda_k: float, lambda_k1: float, N: int, volume: float) -> float:
    """lambda_{k+1} - (N alpha_N^(N-1) / |Omega|)^(1/N) lambda_k^(1/N')."""
    if min(lambda_k1, volume) <= 0 or lambda_k < 0:
        raise ValueError("eigenvalues and volume must be positive")
    alpha = N * unit_sphere_area(N) ** (1.0 / (N - 1))
    return lambda_k1 - (N * alpha ** (N - 1) / volume) ** (1.0 / N) * lambda_k ** ((N - 1) / N)
