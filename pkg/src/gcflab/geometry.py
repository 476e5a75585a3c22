"""Grids, quadrature and discrete curvature operators.

Two kinds of grid are used throughout the package:

* :class:`SphereGrid` parameterizes a closed convex hypersurface by its
  outward normal (the Gauss map).  For ``n = 1`` it is a periodic angle grid
  on the circle; for ``n = 2`` it is a polar-angle grid on the sphere for
  axisymmetric bodies, with node 0 and node ``N-1`` sitting on the poles.
* :class:`DomainGrid` is a Cartesian grid over a bounded convex domain
  ``Omega`` in ``R^n`` carrying a graph ``x_{n+1} = u(x)``.

Fields are plain numpy arrays whose shape matches the grid.  For domain grids
the arrays cover a bounding box; entries outside the node set are ``nan``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvexityLost, EmptyInterior, GridMismatch

#: determinant floor used inside the boundary collar of a domain grid
EPS_K = 1e-14
#: width of the boundary collar, in cells from the boundary ring
COLLAR_CELLS = 2


def unit_sphere_area(n):
    """``|S^n|``, the area of the unit n-sphere."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True)
class SphereGrid:
    """Uniform grid on the Gauss-map domain.

    ``n = 1``: ``theta_i = 2 pi i / size`` with periodic neighbours.
    ``n = 2``: ``phi_j = j pi / (size - 1)`` (axisymmetric bodies), with the
    ghost values at the poles obtained by even reflection.
    """

    n: int
    size: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"SphereGrid supports n in (1, 2), got {self.n}")
        if self.size < 16:
            raise ValueError(f"SphereGrid needs at least 16 nodes, got {self.size}")

    @property
    def spacing(self):
        if self.n == 1:
            return 2.0 * math.pi / self.size
        return math.pi / (self.size - 1)

    @property
    def angles(self):
        return np.arange(self.size) * self.spacing

    @property
    def weights(self):
        """Quadrature weight of each node (sums to ``|S^n|``).

        For ``n = 2`` the weight is the exact area of the polar band
        ``[phi_j - d/2, phi_j + d/2]`` clipped to ``[0, pi]``.
        """
        d = self.spacing
        if self.n == 1:
            return np.full(self.size, d)
        phi = self.angles
        lo = np.clip(phi - d / 2, 0.0, math.pi)
        hi = np.clip(phi + d / 2, 0.0, math.pi)
        return 2.0 * math.pi * (np.cos(lo) - np.cos(hi))

    @property
    def area(self):
        return unit_sphere_area(self.n)

    def _check(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != (self.size,):
            raise GridMismatch(f"field of shape {f.shape} on SphereGrid of size {self.size}")
        return f

    def d1(self, f):
        f = self._check(f)
        d = self.spacing
        if self.n == 1:
            return (np.roll(f, -1) - np.roll(f, 1)) / (2 * d)
        out = np.zeros_like(f)
        out[1:-1] = (f[2:] - f[:-2]) / (2 * d)
        return out

    def d2(self, f):
        f = self._check(f)
        d = self.spacing
        if self.n == 1:
            return (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / d**2
        out = np.empty_like(f)
        out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / d**2
        # even reflection across the poles: f[-1] = f[1], f[N] = f[N-2]
        out[0] = 2 * (f[1] - f[0]) / d**2
        out[-1] = 2 * (f[-2] - f[-1]) / d**2
        return out

    def radii_operator(self, f):
        """Covariant Hessian plus ``f * metric`` in the principal frame.

        Returns an array of shape ``(n, size)``.  Applied to a support
        function this gives the principal radii of curvature.
        """
        f = self._check(f)
        f2 = self.d2(f)
        first = f2 + f
        if self.n == 1:
            return first[None, :]
        second = np.empty_like(f)
        phi = self.angles[1:-1]
        second[1:-1] = self.d1(f)[1:-1] / np.tan(phi) + f[1:-1]
        # f' cot(phi) -> f'' at the poles
        second[0] = first[0]
        second[-1] = first[-1]
        return np.stack([first, second])


@dataclass
class CurvatureData:
    """Pointwise curvature quantities of a convex hypersurface.

    In support mode ``radii`` holds the principal radii (shape ``(n, N)``).
    In graph mode ``gradient``/``hessian`` hold ``Du`` and ``D^2 u`` and
    ``nu_e`` is ``<-nu, e_{n+1}> = (1 + |Du|^2)^{-1/2}``.
    """

    K: np.ndarray
    H: np.ndarray
    lam_min: np.ndarray
    lam_max: np.ndarray
    radii: np.ndarray | None = None
    det_w: np.ndarray | None = None
    gradient: np.ndarray | None = None
    hessian: np.ndarray | None = None
    nu_e: np.ndarray | None = None
    det_hessian: np.ndarray | None = None


def support_radii(h, grid):
    """Principal radii and curvatures of the body with support function ``h``."""
    h = grid._check(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("support function has non-finite values")
    if np.any(h <= 0):
        i = int(np.argmin(h))
        raise ValueError(f"support function must be positive (h[{i}] = {h[i]:g})")
    radii = grid.radii_operator(h)
    bad = radii <= 0
    if np.any(bad):
        k, i = np.argwhere(bad)[0]
        raise ConvexityLost(
            f"principal radius {k} is {radii[k, i]:.6g} at node {i}", node=int(i), value=float(radii[k, i])
        )
    det_w = np.prod(radii, axis=0)
    curv = 1.0 / radii
    return CurvatureData(
        K=1.0 / det_w,
        H=curv.sum(axis=0),
        lam_min=curv.min(axis=0),
        lam_max=curv.max(axis=0),
        radii=radii,
        det_w=det_w,
    )


@dataclass(frozen=True)
class DomainSpec:
    """Bounded convex domain in ``R^n`` with an interior subset ``Omega'``.

    ``Omega'`` is the set of points at distance at least ``margin`` from the
    boundary.  Shapes: ``interval`` ``(-a, a)``; ``disk`` of radius ``R``
    centred at the origin; ``polygon`` given by its vertices.
    """

    n: int
    kind: str
    size: float = 1.0
    vertices: tuple = ()
    margin: float = 0.1

    def __post_init__(self):
        if self.kind == "interval":
            if self.n != 1:
                raise ValueError("interval domains have n = 1")
        elif self.kind in ("disk", "polygon"):
            if self.n != 2:
                raise ValueError(f"{self.kind} domains have n = 2")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "polygon":
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise ValueError("polygon needs at least three 2-D vertices")
            e = np.roll(v, -1, axis=0) - v
            cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
            if not (np.all(cross > 0) or np.all(cross < 0)):
                raise ValueError("polygon is not strictly convex")
        elif self.size <= 0:
            raise ValueError("domain size must be positive")
        if self.margin <= 0:
            raise ValueError("interior margin must be positive")
        if self.margin >= self.inradius:
            raise ValueError(f"margin {self.margin} leaves an empty interior set")

    @classmethod
    def interval(cls, a=1.0, margin=0.1):
        return cls(n=1, kind="interval", size=float(a), margin=margin)

    @classmethod
    def disk(cls, radius=1.0, margin=0.1):
        return cls(n=2, kind="disk", size=float(radius), margin=margin)

    @classmethod
    def polygon(cls, vertices, margin=0.1):
        return cls(n=2, kind="polygon", vertices=tuple(map(tuple, vertices)), margin=margin)

    def with_margin(self, margin):
        return DomainSpec(n=self.n, kind=self.kind, size=self.size, vertices=self.vertices, margin=margin)

    def _ccw(self):
        v = np.asarray(self.vertices, dtype=float)
        x, y = v[:, 0], v[:, 1]
        if np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) < 0:
            v = v[::-1]
        return v

    @property
    def area(self):
        if self.kind == "interval":
            return 2.0 * self.size
        if self.kind == "disk":
            return math.pi * self.size**2
        v = self._ccw()
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def extent(self):
        """Half-width of an origin-centred box containing the domain."""
        if self.kind == "polygon":
            return float(np.abs(np.asarray(self.vertices)).max())
        return self.size

    @property
    def inradius(self):
        if self.kind != "polygon":
            return self.size
        # largest distance to the boundary over a fine sample of the polygon
        v = self._ccw()
        lo, hi = v.min(axis=0), v.max(axis=0)
        g = np.stack(np.meshgrid(np.linspace(lo[0], hi[0], 201), np.linspace(lo[1], hi[1], 201)), axis=-1)
        return float(np.max(self.distance_to_boundary(g)))

    @property
    def centroid(self):
        if self.kind != "polygon":
            return np.zeros(self.n)
        v = self._ccw()
        x, y = v[:, 0], v[:, 1]
        c = x * np.roll(y, -1) - np.roll(x, -1) * y
        a = 0.5 * c.sum()
        return np.array([np.sum((x + np.roll(x, -1)) * c), np.sum((y + np.roll(y, -1)) * c)]) / (6 * a)

    @property
    def diameter(self):
        if self.kind != "polygon":
            return 2.0 * self.size
        v = np.asarray(self.vertices, dtype=float)
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)))

    def distance_to_boundary(self, x):
        """Signed distance to the boundary, positive inside.

        ``x`` has shape ``(...,)`` for ``n = 1`` and ``(..., 2)`` for ``n = 2``.
        """
        x = np.asarray(x, dtype=float)
        if self.kind == "interval":
            return self.size - np.abs(x)
        if self.kind == "disk":
            return self.size - np.hypot(x[..., 0], x[..., 1])
        v = self._ccw()
        e = np.roll(v, -1, axis=0) - v
        normal = np.stack([e[:, 1], -e[:, 0]], axis=1)
        normal /= np.linalg.norm(normal, axis=1, keepdims=True)
        # outward normals for a CCW polygon; distance inside = min over edges
        d = np.einsum("...k,ek->...e", x, -normal) + np.einsum("ek,ek->e", v, normal)
        return d.min(axis=-1)

    def log_barrier(self, x):
        """Convex function of ``x`` that tends to ``+inf`` at the boundary.

        ``-sum log d_e`` over the edge distances ``d_e`` of a polygon (each term
        is convex), ``-log(R^2 - |x|^2)`` on a disk and
        ``-log(a^2 - x^2)`` on an interval.
        """
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "interval":
                return -np.log(self.size**2 - x**2)
            if self.kind == "disk":
                return -np.log(self.size**2 - np.sum(x**2, axis=-1))
            v = self._ccw()
            e = np.roll(v, -1, axis=0) - v
            normal = np.stack([e[:, 1], -e[:, 0]], axis=1)
            normal /= np.linalg.norm(normal, axis=1, keepdims=True)
            d = np.einsum("...k,ek->...e", x, -normal) + np.einsum("ek,ek->e", v, normal)
            return -np.sum(np.log(d), axis=-1)

    def contains(self, x, scale=1.0):
        """Strict membership in ``scale * Omega``."""
        x = np.asarray(x, dtype=float)
        return self.distance_to_boundary(x / scale) > 0

    def scaled(self, c):
        """The domain ``c * Omega``."""
        if self.kind == "polygon":
            return DomainSpec.polygon(np.asarray(self.vertices) * c, margin=self.margin * c)
        return DomainSpec(n=self.n, kind=self.kind, size=self.size * c, margin=self.margin * c)


def _shift(mask, offset):
    """Shift a boolean array by an integer offset, padding with False."""
    out = np.zeros_like(mask)
    src = []
    dst = []
    for k, o in enumerate(offset):
        size = mask.shape[k]
        if o >= 0:
            src.append(slice(0, size - o))
            dst.append(slice(o, size))
        else:
            src.append(slice(-o, size))
            dst.append(slice(0, size + o))
    out[tuple(dst)] = mask[tuple(src)]
    return out


def _neighbour_offsets(n, reach=1):
    r = range(-reach, reach + 1)
    if n == 1:
        return [(i,) for i in r if i != 0]
    return [(i, j) for i in r for j in r if (i, j) != (0, 0)]


@dataclass
class DomainGrid:
    """Cartesian node set over a convex domain.

    ``shrink < 1`` restricts the nodes to ``shrink * Omega``; barrier runs use
    this so that every node lies inside the domain of the shrunk translator.
    ``band > 0`` widens the boundary ring to every node within that distance
    of ``shrink * boundary``, so Dirichlet data can be imposed on a layer
    where the difference stencils cannot resolve the blow-up of ``u``.
    """

    domain: DomainSpec
    spacing: float
    shrink: float = 1.0
    band: float = 0.0
    points: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)
    ring: np.ndarray = field(init=False, repr=False)
    interior: np.ndarray = field(init=False, repr=False)
    collar: np.ndarray = field(init=False, repr=False)
    inner: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("grid spacing must be positive")
        n = self.domain.n
        half = int(math.ceil(self.domain.extent / self.spacing)) + 2
        axis = np.arange(-half, half + 1) * self.spacing
        if n == 1:
            self.points = axis
        else:
            xx, yy = np.meshgrid(axis, axis)
            self.points = np.stack([xx, yy], axis=-1)
        self.nodes = self.domain.contains(self.points, scale=self.shrink)
        outside = ~self.nodes
        touching = np.zeros_like(self.nodes)
        for off in _neighbour_offsets(n):
            touching |= _shift(outside, off)
        self.ring = self.nodes & touching
        if self.band > 0:
            depth = self.shrink * self.domain.distance_to_boundary(self.points / self.shrink)
            self.ring |= self.nodes & (depth < self.band)
        self.interior = self.nodes & ~self.ring
        near = self.ring.copy()
        for off in _neighbour_offsets(n, reach=COLLAR_CELLS):
            near |= _shift(self.ring, off)
        self.collar = self.interior & near
        dist = self.domain.distance_to_boundary(self.points)
        self.inner = self.interior & (dist >= self.domain.margin - 1e-12)
        if self.interior.sum() < 9:
            raise ValueError("grid too coarse: fewer than 9 interior nodes")
        if not self.inner.any():
            raise EmptyInterior("no grid node lies in the interior subset")

    @property
    def n(self):
        return self.domain.n

    @property
    def shape(self):
        return self.nodes.shape

    @property
    def cell_volume(self):
        return self.spacing**self.n

    def coords(self, mask):
        """Coordinates of the nodes selected by ``mask``."""
        return self.points[mask]

    def empty(self):
        return np.full(self.shape, np.nan)

    def sample(self, func, mask=None):
        """Evaluate ``func`` (taking coordinates) on the node set."""
        mask = self.nodes if mask is None else mask
        out = self.empty()
        out[mask] = func(self.points[mask])
        return out

    def inner_mask(self, margin):
        """Interior nodes at distance at least ``margin`` from the boundary."""
        dist = self.domain.distance_to_boundary(self.points)
        m = self.interior & (dist >= margin - 1e-12)
        if not m.any():
            raise EmptyInterior(f"no interior node at distance {margin} from the boundary")
        return m

    def center_index(self, x0=None):
        """Index of the node nearest to ``x0`` (default: the centroid)."""
        x0 = self.domain.centroid if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
        pts = self.points if self.n == 2 else self.points[:, None]
        d = np.linalg.norm(pts - x0, axis=-1)
        d = np.where(self.interior, d, np.inf)
        return np.unravel_index(int(np.argmin(d)), self.shape)


def _graph_derivatives(u, grid):
    """Centered first and second differences of ``u`` on the box."""
    d = grid.spacing
    if grid.n == 1:
        ux = np.full(u.shape, np.nan)
        uxx = np.full(u.shape, np.nan)
        ux[1:-1] = (u[2:] - u[:-2]) / (2 * d)
        uxx[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / d**2
        return ux[..., None], uxx[..., None, None]
    shape = u.shape
    grad = np.full(shape + (2,), np.nan)
    hess = np.full(shape + (2, 2), np.nan)
    c = (slice(1, -1), slice(1, -1))
    # axis 1 is x, axis 0 is y
    grad[c + (0,)] = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * d)
    grad[c + (1,)] = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * d)
    hess[c + (0, 0)] = (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / d**2
    hess[c + (1, 1)] = (u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / d**2
    uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * d**2)
    hess[c + (0, 1)] = uxy
    hess[c + (1, 0)] = uxy
    return grad, hess


def graph_curvature(u, grid, floor_collar=True):
    """Curvature of the graph ``x_{n+1} = u(x)`` at the interior nodes.

    Outside the interior node set every returned field is ``nan``.  Inside
    the boundary collar a non-positive Hessian determinant is floored at
    :data:`EPS_K`; elsewhere it raises :class:`ConvexityLost`.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise GridMismatch(f"field of shape {u.shape} on DomainGrid of shape {grid.shape}")
    grad, hess = _graph_derivatives(u, grid)
    mask = grid.interior
    n = grid.n
    if n == 1:
        det = hess[..., 0, 0].copy()
        tr = det
    else:
        det = hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] ** 2
        tr = hess[..., 0, 0] + hess[..., 1, 1]
    bad = mask & ((det <= 0) | (tr <= 0))
    if floor_collar:
        core_bad = bad & ~grid.collar
    else:
        core_bad = bad
    if np.any(core_bad):
        idx = tuple(int(i) for i in np.argwhere(core_bad)[0])
        raise ConvexityLost(f"Hessian determinant {det[idx]:.6g} at node {idx}", node=idx, value=float(det[idx]))
    det = np.where(bad, EPS_K, det)
    det = np.where(mask, det, np.nan)
    grad = np.where(mask[..., None], grad, np.nan)
    hess = np.where(mask[..., None, None], hess, np.nan)
    q = 1.0 + np.sum(grad**2, axis=-1)
    w = np.sqrt(q)
    K = det / q ** ((n + 2) / 2)
    if n == 1:
        k = hess[..., 0, 0] / w**3
        k = np.where(bad, EPS_K / w**3, k)
        H = k
        lam_min = k
        lam_max = k
    else:
        p, r = grad[..., 0], grad[..., 1]
        g11, g22, g12 = 1 + p * p, 1 + r * r, p * r
        h11, h22, h12 = hess[..., 0, 0] / w, hess[..., 1, 1] / w, hess[..., 0, 1] / w
        H = (h11 * g22 + h22 * g11 - 2 * h12 * g12) / q
        disc = np.sqrt(np.maximum(H**2 - 4 * K, 0.0))
        lam_min = (H - disc) / 2
        lam_max = (H + disc) / 2
        # (H - disc) loses precision when K << H^2
        lam_min = np.where(lam_max > 0, K / np.where(lam_max > 0, lam_max, 1.0), lam_min)
    return CurvatureData(
        K=K,
        H=H,
        lam_min=lam_min,
        lam_max=lam_max,
        gradient=grad,
        hessian=hess,
        nu_e=1.0 / w,
        det_hessian=det,
    )


def integrate(f, density, weights, mask=None):
    """Quadrature ``sum f * density * weight`` over the selected nodes.

    ``weights`` is either a per-node array or a scalar cell volume.  The sum
    runs in C order over the mask with ``math.fsum`` so results are
    reproducible bit for bit.
    """
    f = np.asarray(f, dtype=float)
    density = np.asarray(density, dtype=float)
    if f.shape != density.shape:
        raise GridMismatch(f"field shape {f.shape} differs from density shape {density.shape}")
    w = np.broadcast_to(np.asarray(weights, dtype=float), f.shape) if np.ndim(weights) == 0 else np.asarray(weights)
    if w.shape != f.shape:
        raise GridMismatch(f"weights shape {w.shape} differs from field shape {f.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != f.shape:
            raise GridMismatch(f"mask shape {mask.shape} differs from field shape {f.shape}")
        terms = (f * density * w)[mask]
    else:
        terms = (f * density * w).ravel()
    return math.fsum(terms.tolist())


def integrate_sphere(f, density, grid):
    """:func:`integrate` with the quadrature weights of a :class:`SphereGrid`."""
    f = grid._check(f)
    return integrate(f, grid._check(density), grid.weights)


def integrate_domain(f, density, grid, mask=None):
    """:func:`integrate` over a :class:`DomainGrid` with cell volume weights."""
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise GridMismatch(f"field of shape {f.shape} on DomainGrid of shape {grid.shape}")
    mask = grid.nodes if mask is None else mask
    return integrate(f, density, grid.cell_volume, mask=mask)
