"""Simplicial meshes of bounded domains with homogeneous Dirichlet boundary.

Squares, rectangles and cubes get structured grids; discs get ring meshes
stitched ring by ring, optionally graded towards the centre so that
concentrating radial profiles can be resolved.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations
from typing import Sequence

import numpy as np

SHAPES = ("unit-square", "rectangle", "disc", "cube")


class MeshError(ValueError):
    """Raised for degenerate domain specifications or inconsistent meshes."""


@dataclass(frozen=True)
class DomainSpec:
    shape: str
    width: float = 1.0
    height: float = 1.0
    radius: float = 1.0
    side: float = 1.0
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise MeshError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        for name in ("width", "height", "radius", "side"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise MeshError(f"{name} must be positive and finite, got {val}")
        if self.center is not None and len(self.center) != self.dim:
            raise MeshError(f"center has {len(self.center)} coordinates, domain is {self.dim}-d")

    @property
    def dim(self) -> int:
        return 3 if self.shape == "cube" else 2

    @property
    def origin(self) -> np.ndarray:
        if self.center is None:
            return np.zeros(self.dim)
        return np.asarray(self.center, dtype=float)

    @property
    def diameter(self) -> float:
        if self.shape == "unit-square":
            return math.sqrt(2.0)
        if self.shape == "rectangle":
            return math.hypot(self.width, self.height)
        if self.shape == "disc":
            return 2.0 * self.radius
        return self.side * math.sqrt(3.0)

    @property
    def exact_volume(self) -> float:
        if self.shape == "unit-square":
            return 1.0
        if self.shape == "rectangle":
            return self.width * self.height
        if self.shape == "disc":
            return math.pi * self.radius**2
        return self.side**3

    def inradius(self) -> float:
        """Distance from the centre to the boundary."""
        if self.shape == "unit-square":
            return 0.5
        if self.shape == "rectangle":
            return 0.5 * min(self.width, self.height)
        if self.shape == "disc":
            return self.radius
        return 0.5 * self.side

    @classmethod
    def parse(cls, text: str) -> "DomainSpec":
        """Parse CLI forms: ``unit-square``, ``rectangle:2,3``, ``disc:1``, ``cube:1``."""
        name, _, args = text.partition(":")
        vals = [float(a) for a in args.split(",") if a.strip()] if args else []
        if name == "unit-square":
            return cls("unit-square")
        if name == "rectangle":
            if len(vals) != 2:
                raise MeshError("rectangle needs two sizes, e.g. rectangle:2,3")
            return cls("rectangle", width=vals[0], height=vals[1])
        if name == "disc":
            return cls("disc", radius=vals[0] if vals else 1.0)
        if name == "cube":
            return cls("cube", side=vals[0] if vals else 1.0)
        raise MeshError(f"unknown domain {text!r}")

    def to_dict(self) -> dict:
        d = {"shape": self.shape}
        if self.shape == "rectangle":
            d.update(width=self.width, height=self.height)
        elif self.shape == "disc":
            d["radius"] = self.radius
        elif self.shape == "cube":
            d["side"] = self.side
        d["center"] = [float(c) for c in self.origin]
        return d


@dataclass(eq=False)
class Mesh:
    """Conforming simplicial mesh.

    ``nodes`` is (n, d), ``elements`` is (n_el, d+1) with positively oriented
    simplices, ``boundary_mask`` flags the nodes on the boundary.  Treat as
    immutable; derived finite element operators are cached on first use.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_mask: np.ndarray
    domain: DomainSpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        self.boundary_mask = np.asarray(self.boundary_mask, dtype=bool)
        if self.elements.shape[1] != self.dim + 1:
            raise MeshError("elements must be simplices of the node dimension")
        if self.boundary_mask.shape != (len(self.nodes),):
            raise MeshError("boundary mask must have one entry per node")
        if np.any(self.element_measures <= 0):
            raise MeshError("mesh contains non-positive simplices")
        for arr in (self.nodes, self.elements, self.boundary_mask):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(~self.boundary_mask))

    @cached_property
    def element_measures(self) -> np.ndarray:
        x = self.nodes[self.elements]
        jac = x[:, 1:, :] - x[:, :1, :]
        return np.linalg.det(jac) / math.factorial(self.dim)

    @cached_property
    def h(self) -> float:
        """Maximum element diameter."""
        return float(self.element_diameters.max())

    @cached_property
    def element_diameters(self) -> np.ndarray:
        x = self.nodes[self.elements]
        k = self.dim + 1
        best = np.zeros(len(x))
        for a in range(k):
            for b in range(a + 1, k):
                best = np.maximum(best, np.linalg.norm(x[:, a] - x[:, b], axis=1))
        return best

    @cached_property
    def volume(self) -> float:
        return float(math.fsum(self.element_measures))

    @cached_property
    def space(self):
        from .fem import P1Space

        return P1Space(self)

    def local_h(self, radius: float, center: Sequence[float] | None = None) -> float:
        """Largest diameter among elements meeting the closed ball ``B_radius(center)``."""
        c = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        x = self.nodes[self.elements]
        # closest-vertex distance minus the diameter bounds the distance to the simplex
        dist = np.linalg.norm(x - c, axis=2).min(axis=1)
        near = dist <= radius + self.element_diameters
        return float(self.element_diameters[near].max())

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "nodes": self.nodes.tolist(),
            "elements": self.elements.tolist(),
            "boundary_mask": self.boundary_mask.astype(int).tolist(),
            "h": self.h,
            "volume": self.volume,
            "domain": self.domain.to_dict() if self.domain else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Mesh":
        dom = data.get("domain")
        domain = None
        if dom:
            dom = dict(dom)
            dom["center"] = tuple(dom.get("center") or ()) or None
            domain = DomainSpec(**dom)
        return cls(
            np.array(data["nodes"], dtype=float),
            np.array(data["elements"], dtype=np.int64),
            np.array(data["boundary_mask"], dtype=bool),
            domain=domain,
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "Mesh":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def mesh_volume(mesh: Mesh) -> float:
    """|Omega| as the sum of simplex measures."""
    return mesh.volume


def _orient(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    x = nodes[elements]
    det = np.linalg.det(x[:, 1:, :] - x[:, :1, :])
    el = elements.copy()
    flip = det < 0
    el[flip, 0], el[flip, 1] = elements[flip, 1], elements[flip, 0]
    return el


def _grid_2d(width: float, height: float, h: float, origin: np.ndarray):
    nx = max(1, int(math.ceil(width / h - 1e-9)))
    ny = max(1, int(math.ceil(height / h - 1e-9)))
    xs = np.linspace(-width / 2, width / 2, nx + 1)
    ys = np.linspace(-height / 2, height / 2, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()]) + origin

    def idx(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            p00, p10, p01, p11 = idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)
            # alternate the diagonal so the grid keeps the symmetries of the rectangle
            if (i + j) % 2 == 0:
                tris += [(p00, p10, p11), (p00, p11, p01)]
            else:
                tris += [(p00, p10, p01), (p10, p11, p01)]
    bmask = np.zeros(len(nodes), dtype=bool)
    I, J = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    bmask[((I == 0) | (I == nx) | (J == 0) | (J == ny)).ravel()] = True
    return nodes, _orient(nodes, np.array(tris, dtype=np.int64)), bmask


def _grid_cube(side: float, h: float, origin: np.ndarray):
    n = max(1, int(math.ceil(side / h - 1e-9)))
    ticks = np.linspace(-side / 2, side / 2, n + 1)
    X, Y, Z = np.meshgrid(ticks, ticks, ticks, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]) + origin

    def idx(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    # Kuhn subdivision: one tetrahedron per axis ordering, all sharing the main diagonal
    paths = []
    for perm in permutations(range(3)):
        corner = [0, 0, 0]
        path = [tuple(corner)]
        for ax in perm:
            corner[ax] = 1
            path.append(tuple(corner))
        paths.append(path)
    tets = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for path in paths:
                    tets.append([idx(i + a, j + b, k + c) for a, b, c in path])
    I, J, K = (a.ravel() for a in np.meshgrid(*(np.arange(n + 1),) * 3, indexing="ij"))
    bmask = (I == 0) | (I == n) | (J == 0) | (J == n) | (K == 0) | (K == n)
    return nodes, _orient(nodes, np.array(tets, dtype=np.int64)), bmask


def _ring_nodes(radii: np.ndarray, sizes: np.ndarray, origin: np.ndarray):
    pts = [np.zeros((1, 2))]
    ring_id = [np.zeros(1, dtype=int)]
    angles = [np.zeros(1)]
    for r_i, (rho, s) in enumerate(zip(radii, sizes), start=1):
        count = max(6, int(math.ceil(2 * math.pi * rho / s)))
        # golden-angle phase shift staggers nodes of neighbouring rings
        phase = (r_i * 0.6180339887498949 % 1.0) * 2 * math.pi / count
        ang = phase + 2 * math.pi * np.arange(count) / count
        pts.append(np.column_stack([rho * np.cos(ang), rho * np.sin(ang)]))
        ring_id.append(np.full(count, r_i))
        angles.append(ang)
    nodes = np.vstack(pts) + origin
    return nodes, np.concatenate(ring_id), np.concatenate(angles)


def _stitch_rings(nodes: np.ndarray, ring_id: np.ndarray, angles: np.ndarray, n_rings: int, domain):
    """Triangulate consecutive rings by walking both in angle order.

    Works at any ratio of radii, unlike a Delaunay triangulation whose
    tolerances swallow rings that are tiny relative to the disc.
    """
    tris = []
    first = np.flatnonzero(ring_id == 1)
    tris += [(0, first[i], first[(i + 1) % len(first)]) for i in range(len(first))]
    for r in range(1, n_rings):
        A = np.flatnonzero(ring_id == r)
        B = np.flatnonzero(ring_id == r + 1)
        a = np.r_[angles[A], angles[A[0]] + 2 * math.pi]
        b = np.r_[angles[B], angles[B[0]] + 2 * math.pi]
        i = j = 0
        while i < len(A) or j < len(B):
            if j == len(B) or (i < len(A) and a[i + 1] <= b[j + 1]):
                tris.append((A[i], A[(i + 1) % len(A)], B[j % len(B)]))
                i += 1
            else:
                tris.append((A[i % len(A)], B[j], B[(j + 1) % len(B)]))
                j += 1
    el = _orient(nodes, np.array(tris, dtype=np.int64))
    return Mesh(nodes, el, ring_id == n_rings, domain=domain)


def _disc(radius: float, h: float, origin: np.ndarray, domain):
    n_r = max(1, int(math.ceil(radius / h - 1e-9)))
    radii = radius * np.arange(1, n_r + 1) / n_r
    radii[-1] = radius
    nodes, ring_id, ang = _ring_nodes(radii, np.full(n_r, radius / n_r), origin)
    return _stitch_rings(nodes, ring_id, ang, n_r, domain)


def generate_mesh(spec: DomainSpec, h: float) -> Mesh:
    """Mesh ``spec`` with target element size ``h``.

    Squares and rectangles use a structured grid of spacing ``h`` with
    alternating diagonals, cubes a Kuhn subdivision, discs concentric rings.
    Domains are centred at ``spec.center`` (origin by default).
    """
    if not (h > 0 and math.isfinite(h)):
        raise MeshError(f"h must be positive, got {h}")
    if h >= spec.diameter:
        raise MeshError(f"h={h} is not smaller than the domain diameter {spec.diameter}")
    o = spec.origin
    if spec.shape == "unit-square":
        nodes, el, bm = _grid_2d(1.0, 1.0, h, o)
    elif spec.shape == "rectangle":
        nodes, el, bm = _grid_2d(spec.width, spec.height, h, o)
    elif spec.shape == "cube":
        nodes, el, bm = _grid_cube(spec.side, h, o)
    else:
        mesh = _disc(spec.radius, h, o, spec)
        mesh.meta["h_target"] = h
        return mesh
    mesh = Mesh(nodes, el, bm, domain=spec)
    mesh.meta["h_target"] = h
    if mesh.n_interior < 1:
        raise MeshError("mesh has no interior node; decrease h")
    return mesh


def graded_disc_mesh(
    radius: float,
    h_rel: float,
    core_radius: float,
    breakpoints: Sequence[float] = (),
    center: Sequence[float] | None = None,
) -> Mesh:
    """Disc mesh graded towards the centre.

    The local element size at distance ``rho`` from the centre is about
    ``h_rel * max(rho, core_radius)``; every radius in ``breakpoints`` (and
    ``core_radius`` itself) is a ring of nodes, so radial functions with kinks
    there are interpolated without smearing the kink.
    """
    if not (0 < h_rel < 1):
        raise MeshError("h_rel must lie in (0, 1)")
    if not (0 < core_radius < radius):
        raise MeshError("core_radius must lie in (0, radius)")
    knots = sorted({float(b) for b in breakpoints if 0 < b < radius} | {core_radius, radius})
    knots = [0.0] + knots
    radii = []
    for a, b in zip(knots[:-1], knots[1:]):
        # number of rings from the integral of 1/size over [a, b]
        lo, hi = max(a, core_radius), max(b, core_radius)
        flat = max(0.0, min(b, core_radius) - a) / (h_rel * core_radius)
        logp = math.log(hi / lo) / h_rel if hi > lo else 0.0
        n = max(1, int(math.ceil(flat + logp - 1e-9)))
        # distribute rings uniformly in the stretched coordinate
        s = np.linspace(0.0, flat + logp, n + 1)[1:]
        seg = np.where(
            s <= flat,
            a + s * h_rel * core_radius,
            lo * np.exp((s - flat) * h_rel),
        )
        seg[-1] = b
        radii.extend(seg.tolist())
    radii = np.array(radii)
    sizes = h_rel * np.maximum(radii, core_radius)
    origin = np.zeros(2) if center is None else np.asarray(center, dtype=float)
    nodes, ring_id, ang = _ring_nodes(radii, sizes, origin)
    spec = DomainSpec("disc", radius=radius, center=tuple(origin))
    mesh = _stitch_rings(nodes, ring_id, ang, len(radii), spec)
    mesh.meta.update(h_rel=h_rel, core_radius=core_radius, rings=radii.tolist())
    return mesh
