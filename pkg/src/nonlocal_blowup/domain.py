"""Uniform grids, trapezoid quadrature and Laplacians on intervals and discs.

Discs are handled through the radial reduction: fields are sampled on
``r_i = i*h`` for ``i = 0..n-1`` and the last node is the boundary circle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray

Field = NDArray[np.float64]


@dataclass(frozen=True)
class Interval:
    a_end: float
    b_end: float

    def __post_init__(self):
        if not (self.b_end > self.a_end):
            raise ValueError(f"interval needs a_end < b_end, got ({self.a_end}, {self.b_end})")

    @property
    def dim(self) -> int:
        return 1

    @property
    def measure(self) -> float:
        return self.b_end - self.a_end

    @property
    def center(self) -> float:
        return 0.5 * (self.a_end + self.b_end)

    @property
    def inradius(self) -> float:
        return 0.5 * self.measure

    @property
    def boundary_measure(self) -> float:
        # two endpoints, counting measure
        return 2.0


@dataclass(frozen=True)
class Disc:
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValueError(f"disc radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return 2

    @property
    def measure(self) -> float:
        return np.pi * self.radius**2

    @property
    def center(self) -> float:
        return 0.0

    @property
    def inradius(self) -> float:
        return self.radius

    @property
    def boundary_measure(self) -> float:
        return 2.0 * np.pi * self.radius


DomainDescriptor = Union[Interval, Disc]


@dataclass(frozen=True, eq=False)
class Grid:
    """Discretized domain.

    Attributes
    ----------
    descriptor : Interval or Disc
    nodes : ndarray
        Coordinates (``x`` for intervals, ``r`` for discs).
    h : float
        Uniform spacing.
    quad_weights : ndarray
        Trapezoid weights; for discs they carry the ``2*pi*r`` polar factor.
    boundary_idx, interior_idx : ndarray of int
    """

    descriptor: DomainDescriptor
    nodes: Field
    h: float
    quad_weights: Field
    boundary_idx: NDArray[np.int64]
    interior_idx: NDArray[np.int64]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def dim(self) -> int:
        return self.descriptor.dim

    @property
    def measure(self) -> float:
        return self.descriptor.measure

    def distance_to_boundary(self) -> Field:
        """Inward distance ``s`` of every node to the boundary."""
        d = self.descriptor
        if isinstance(d, Interval):
            return np.minimum(self.nodes - d.a_end, d.b_end - self.nodes)
        return d.radius - self.nodes

    def distance_to_center(self) -> Field:
        d = self.descriptor
        if isinstance(d, Interval):
            return np.abs(self.nodes - d.center)
        return self.nodes.copy()

    def refined(self, factor: int = 4) -> "Grid":
        """Grid with ``factor`` times as many intervals; contains the original nodes."""
        return build_grid(self.descriptor, factor * (self.n - 1) + 1)


def build_grid(descriptor: DomainDescriptor, n: int) -> Grid:
    if n < 8:
        raise ValueError(f"need at least 8 nodes, got {n}")
    if isinstance(descriptor, Interval):
        nodes = np.linspace(descriptor.a_end, descriptor.b_end, n)
        h = (descriptor.b_end - descriptor.a_end) / (n - 1)
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        boundary = np.array([0, n - 1])
        interior = np.arange(1, n - 1)
    elif isinstance(descriptor, Disc):
        nodes = np.linspace(0.0, descriptor.radius, n)
        h = descriptor.radius / (n - 1)
        w = 2.0 * np.pi * nodes * h
        w[-1] *= 0.5
        boundary = np.array([n - 1])
        interior = np.arange(0, n - 1)
    else:
        raise TypeError(f"unknown domain descriptor {descriptor!r}")
    if not h > 0:
        raise ValueError("nonpositive extent")
    return Grid(descriptor, nodes, h, w, boundary, interior)


def integrate(grid: Grid, f: NDArray) -> NDArray | float:
    """Quadrature of ``f`` over the domain; ``f`` may carry leading batch axes."""
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != grid.n:
        raise ValueError(f"field has {f.shape[-1]} entries, grid has {grid.n} nodes")
    out = f @ grid.quad_weights
    return float(out) if np.ndim(out) == 0 else out


def laplacian_apply(grid: Grid, u: NDArray) -> NDArray:
    """Second-order Laplacian at the interior nodes (ordering of ``grid.interior_idx``).

    Boundary entries of ``u`` enter the stencil of the adjacent interior nodes.
    Leading batch axes are allowed.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != grid.n:
        raise ValueError(f"field has {u.shape[-1]} entries, grid has {grid.n} nodes")
    h2 = grid.h * grid.h
    if isinstance(grid.descriptor, Interval):
        return (u[..., :-2] - 2.0 * u[..., 1:-1] + u[..., 2:]) / h2
    r = grid.nodes[1:-1]
    out = np.empty(u.shape[:-1] + (grid.n - 1,))
    out[..., 0] = 4.0 * (u[..., 1] - u[..., 0]) / h2
    out[..., 1:] = (u[..., :-2] - 2.0 * u[..., 1:-1] + u[..., 2:]) / h2 + (
        u[..., 2:] - u[..., :-2]
    ) / (2.0 * grid.h * r)
    return out


def laplacian_matrix(grid: Grid):
    """Sparse matrix of the interior Laplacian with homogeneous Dirichlet data."""
    import scipy.sparse as sp

    m = grid.interior_idx.size
    h2 = grid.h * grid.h
    if isinstance(grid.descriptor, Interval):
        main = np.full(m, -2.0 / h2)
        lower = np.full(m - 1, 1.0 / h2)
        upper = np.full(m - 1, 1.0 / h2)
    else:
        r = grid.nodes[:m]
        main = np.full(m, -2.0 / h2)
        main[0] = -4.0 / h2
        upper = np.empty(m - 1)
        upper[0] = 4.0 / h2
        upper[1:] = 1.0 / h2 + 1.0 / (2.0 * grid.h * r[1:-1])
        lower = 1.0 / h2 - 1.0 / (2.0 * grid.h * r[1:])
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csc")


def curvature_sum(s: float | NDArray, descriptor: DomainDescriptor) -> float | NDArray:
    """``sum_j H_j / (1 - s H_j)`` at inward distance ``s``."""
    if isinstance(descriptor, Interval):
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
    s = np.asarray(s, dtype=float)
    if np.any(s >= descriptor.radius):
        raise ValueError("boundary-layer chart breaks down at s >= radius")
    out = 1.0 / (descriptor.radius - s)
    return float(out) if out.ndim == 0 else out


def layer_laplacian(g_ss, g_s, s, descriptor: DomainDescriptor):
    """Laplacian of a function of the boundary distance ``s`` alone."""
    return g_ss - curvature_sum(s, descriptor) * g_s


def jacobian_bound(descriptor: DomainDescriptor) -> float:
    """Supremum over the collar of the boundary integral of the chart Jacobian."""
    return descriptor.boundary_measure
