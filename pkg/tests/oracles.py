"""Independent reference values used by the tests.

Nothing here calls the package's assembly or solvers: the brute-force
eigenvalue oracle rebuilds P1 gradients and lumped masses from the raw
node/element arrays and minimises the Rayleigh quotient by projected
descent with Barzilai-Borwein steps from many random starts.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma, jn_zeros


def square_laplacian_eigs(n: int = 6) -> list[float]:
    """Sorted Dirichlet Laplacian eigenvalues of the unit square, pi^2 (a^2 + b^2)."""
    vals = sorted(math.pi**2 * (a * a + b * b) for a in range(1, n + 1) for b in range(1, n + 1))
    return vals


def disc_first_eig(radius: float = 1.0) -> float:
    return float(jn_zeros(0, 1)[0]) ** 2 / radius**2


def sphere_area(N: int) -> float:
    """Area of the unit sphere in R^N."""
    return 2 * math.pi ** (N / 2) / gamma(N / 2)


def primitive_F_closed_N2(t):
    """(e^{t^2} - 1) / 2."""
    return np.expm1(np.asarray(t, dtype=float) ** 2) / 2


def _p1_operators(nodes, elements):
    d = nodes.shape[1]
    X = nodes[elements]  # (E, d+1, d)
    J = X[:, 1:, :] - X[:, :1, :]  # rows are edge vectors
    vol = np.abs(np.linalg.det(J)) / math.factorial(d)
    ref = np.hstack([-np.ones((d, 1)), np.eye(d)])  # reference gradients (d, d+1)
    Gl = np.linalg.solve(J, np.broadcast_to(ref, (len(J), d, d + 1)))  # (E, d, d+1)
    mass = np.zeros(len(nodes))
    np.add.at(mass, elements, np.repeat(vol[:, None] / (d + 1), d + 1, axis=1))
    return vol, Gl, mass


def brute_force_lambda1(mesh, N: int, n_starts: int = 50, max_iter: int = 4000, seed: int = 12345, rtol=1e-12):
    """min of int|grad u|^N / int|u|^N over P1 functions, by multi-start projected descent."""
    nodes, el = np.asarray(mesh.nodes), np.asarray(mesh.elements)
    free = ~np.asarray(mesh.boundary_mask)
    vol, Gl, mass = _p1_operators(nodes, el)
    rng = np.random.default_rng(seed)

    def parts(u):
        g = np.einsum("eij,ej->ei", Gl, u[el])
        gn = np.linalg.norm(g, axis=1)
        A = float(vol @ gn**N)
        B = float(mass @ np.abs(u) ** N)
        dA = np.zeros_like(u)
        np.add.at(dA, el, np.einsum("eij,ei->ej", Gl, (N * vol * gn ** (N - 2))[:, None] * g))
        dB = N * mass * np.abs(u) ** (N - 2) * u
        grad = (dA - (A / B) * dB) / B
        grad[~free] = 0.0
        return A / B, grad, A

    best = math.inf
    values = []
    for _ in range(n_starts):
        u = np.where(free, rng.random(len(nodes)), 0.0)
        R, g, A = parts(u)
        u /= A ** (1.0 / N)
        R, g, A = parts(u)
        tau = 1e-3
        u_prev = g_prev = None
        for _ in range(max_iter):
            if u_prev is not None:
                s, y = u - u_prev, g - g_prev
                sy = float(s @ y)
                tau = float(s @ s) / sy if sy > 0 else tau
            u_prev, g_prev = u, g
            u = u - tau * g
            R_new, g, A = parts(u)
            u = u / A ** (1.0 / N)
            R_new, g, A = parts(u)
            if abs(R_new - R) <= rtol * R:
                R = R_new
                break
            R = R_new
        values.append(R)
        best = min(best, R)
    return best, values
