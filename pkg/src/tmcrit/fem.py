"""P1 finite element operators on a :class:`~tmcrit.mesh.Mesh`.

Gradients of P1 functions are constant per element, so ``grad_op @ u``
gives all elementwise gradients at once and every gradient integral is
exact.  Nonlinear functions of ``u`` itself are integrated with the lumped
(nodal) rule whose weights sum to ``|Omega|``.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class P1Space:
    def __init__(self, mesh):
        self.mesh = mesh
        d = mesh.dim
        x = mesh.nodes[mesh.elements]  # (E, d+1, d)
        jac = np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))  # columns x_i - x_0
        inv = np.linalg.inv(jac)  # rows are gradients of barycentric coords 1..d
        grads = np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)  # (E, d+1, d)
        self.basis_grads = grads
        self.vol = mesh.element_measures.copy()
        n_el = len(mesh.elements)
        rows = (np.arange(n_el)[:, None, None] * d + np.arange(d)[None, None, :])
        rows = np.broadcast_to(rows, grads.shape)
        cols = np.broadcast_to(mesh.elements[:, :, None], grads.shape)
        self.grad_op = sp.csr_matrix(
            (grads.ravel(), (rows.ravel(), cols.ravel())), shape=(n_el * d, mesh.n_nodes)
        )
        self.grad_op_t = self.grad_op.T.tocsr()
        mass = np.zeros(mesh.n_nodes)
        np.add.at(mass, mesh.elements.ravel(), np.repeat(self.vol / (d + 1), d + 1))
        self.mass = mass
        self.free = np.flatnonzero(~mesh.boundary_mask)
        self.dim = d
        self._stiff_lu = None

    @property
    def n(self) -> int:
        return self.mesh.n_nodes

    def gradients(self, u: np.ndarray) -> np.ndarray:
        """Elementwise gradients, shape (E, d)."""
        return (self.grad_op @ u).reshape(-1, self.dim)

    def weighted_stiffness(self, weights: np.ndarray) -> sp.csr_matrix:
        """``D^T diag(w) D`` with one scalar weight per element (already times volume)."""
        w = np.repeat(weights, self.dim)
        return (self.grad_op_t @ sp.diags(w) @ self.grad_op).tocsr()

    def block_stiffness(self, blocks: np.ndarray) -> sp.csr_matrix:
        """``D^T B D`` with a (d x d) block per element, shape (E, d, d)."""
        n_el, d = blocks.shape[0], self.dim
        base = np.arange(n_el)[:, None, None] * d
        rows = np.broadcast_to(base + np.arange(d)[None, :, None], blocks.shape)
        cols = np.broadcast_to(base + np.arange(d)[None, None, :], blocks.shape)
        B = sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(n_el * d,) * 2)
        return (self.grad_op_t @ B @ self.grad_op).tocsr()

    def stiffness(self) -> sp.csr_matrix:
        return self.weighted_stiffness(self.vol)

    def restrict(self, A: sp.spmatrix) -> sp.csc_matrix:
        A = sp.csr_matrix(A)
        return A[self.free][:, self.free].tocsc()

    def stiffness_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve with the Dirichlet Laplacian; ``rhs`` and result are full nodal vectors."""
        if self._stiff_lu is None:
            self._stiff_lu = splu(self.restrict(self.stiffness()))
        out = np.zeros(self.n)
        out[self.free] = self._stiff_lu.solve(np.ascontiguousarray(rhs[self.free]))
        return out

    def h1_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        gu, gv = self.gradients(u), self.gradients(v)
        return float(np.dot(self.vol, np.einsum("ij,ij->i", gu, gv)))

    def lumped_integral(self, values: np.ndarray) -> float:
        return float(np.dot(self.mass, values))

    def zero_boundary(self, u: np.ndarray) -> np.ndarray:
        out = np.array(u, dtype=float, copy=True)
        out[self.mesh.boundary_mask] = 0.0
        return out

    def interpolate(self, fn) -> np.ndarray:
        return np.asarray(fn(self.mesh.nodes), dtype=float)


def unit_sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N, 2 pi^(N/2) / Gamma(N/2)."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)
