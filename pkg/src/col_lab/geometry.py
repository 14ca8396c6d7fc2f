"""Decision sets, Euclidean projections and closed-form diameters."""

from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .errors import DomainError

MEMBERSHIP_TOL = 1e-12

BOX = "box"
BALL = "ball"
SIMPLICES = "simplices"


def _frozen(a):
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DecisionSet:
    """Compact convex set of one of three kinds.

    Build instances with :meth:`box`, :meth:`ball` or :meth:`simplices`
    rather than the raw constructor.
    """

    kind: str
    dimension: int
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: float = 0.0
    num_blocks: int = 0
    block_size: int = 0
    eps: float = 0.0
    diameter: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "diameter", _closed_form_diameter(self))

    @classmethod
    def box(cls, lower, upper, dimension=None):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if dimension is not None:
            lower = np.broadcast_to(lower, (dimension,))
            upper = np.broadcast_to(upper, (dimension,))
        if lower.shape != upper.shape or lower.ndim != 1 or lower.size == 0:
            raise DomainError("box bounds must be equal-length 1-D arrays")
        if np.any(lower > upper) or not np.all(np.isfinite(lower) & np.isfinite(upper)):
            raise DomainError("box requires finite bounds with lower <= upper")
        return cls(BOX, lower.size, lower=_frozen(lower), upper=_frozen(upper))

    @classmethod
    def ball(cls, center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.ndim != 1 or center.size == 0:
            raise DomainError("ball center must be a non-empty 1-D array")
        if not (radius >= 0 and np.isfinite(radius)):
            raise DomainError("ball radius must be finite and nonnegative")
        return cls(BALL, center.size, center=_frozen(center), radius=float(radius))

    @classmethod
    def simplices(cls, num_blocks, block_size, eps=0.0):
        if num_blocks < 1 or block_size < 1:
            raise DomainError("need at least one block of size at least one")
        if eps < 0 or eps * block_size > 1 + MEMBERSHIP_TOL:
            raise DomainError(f"floor eps={eps} infeasible for block size {block_size}")
        return cls(
            SIMPLICES,
            num_blocks * block_size,
            num_blocks=int(num_blocks),
            block_size=int(block_size),
            eps=float(eps),
        )

    # -- queries ----------------------------------------------------------

    def check_dimension(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dimension,):
            raise DomainError(f"expected a vector of dimension {self.dimension}, got shape {y.shape}")
        return y

    def contains(self, x, tol=MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,) or not np.all(np.isfinite(x)):
            return False
        if self.kind == BOX:
            return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))
        if self.kind == BALL:
            return bool(np.linalg.norm(x - self.center) <= self.radius + tol)
        blocks = x.reshape(self.num_blocks, self.block_size)
        return bool(
            np.all(blocks >= self.eps - tol) and np.all(np.abs(blocks.sum(axis=1) - 1.0) <= tol)
        )

    def midpoint(self):
        """A canonical interior (relative-interior) point."""
        if self.kind == BOX:
            return 0.5 * (self.lower + self.upper)
        if self.kind == BALL:
            return np.array(self.center)
        return np.full(self.dimension, 1.0 / self.block_size)

    def sample(self, rng, size=None):
        """Uniform samples from the set; shape ``(dimension,)`` or ``(size, dimension)``."""
        n = 1 if size is None else int(size)
        d = self.dimension
        if self.kind == BOX:
            pts = self.lower + (self.upper - self.lower) * rng.random((n, d))
        elif self.kind == BALL:
            direction = rng.standard_normal((n, d))
            norms = np.linalg.norm(direction, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            r = self.radius * rng.random((n, 1)) ** (1.0 / d)
            pts = self.center + r * direction / norms
        else:
            q = rng.dirichlet(np.ones(self.block_size), size=(n, self.num_blocks))
            scale = 1.0 - self.block_size * self.eps
            pts = (self.eps + scale * q).reshape(n, d)
        return pts[0] if size is None else pts

    def vertices(self):
        """Extreme points for box and simplex products (None for balls)."""
        if self.kind == BOX:
            return np.array(list(product(*zip(self.lower, self.upper))), dtype=float)
        if self.kind == BALL:
            return None
        m, scale = self.block_size, 1.0 - self.block_size * self.eps
        block_vertices = self.eps + scale * np.eye(m)
        return np.array(
            [np.concatenate(choice) for choice in product(block_vertices, repeat=self.num_blocks)]
        )

    def num_vertices(self):
        if self.kind == BOX:
            return 2 ** self.dimension
        if self.kind == SIMPLICES:
            return self.block_size ** self.num_blocks
        return None

    def grid(self, resolution):
        """Feasible grid with ``resolution`` points per axis, for brute-force checks."""
        if resolution < 2:
            raise DomainError("grid resolution must be at least 2")
        if self.kind == BOX:
            axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(self.lower, self.upper)]
            mesh = np.meshgrid(*axes, indexing="ij")
            return np.stack([m.ravel() for m in mesh], axis=1)
        if self.kind == BALL:
            axes = [np.linspace(c - self.radius, c + self.radius, resolution) for c in self.center]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
            offsets = pts - self.center
            norms = np.linalg.norm(offsets, axis=1)
            outside = norms > self.radius
            pts[outside] = self.center + self.radius * offsets[outside] / norms[outside, None]
            return pts
        steps = resolution - 1
        lattice = [
            np.array(c, dtype=float) / steps
            for c in product(range(resolution), repeat=self.block_size)
            if sum(c) == steps
        ]
        scale = 1.0 - self.block_size * self.eps
        block_pts = [self.eps + scale * q for q in lattice]
        return np.array([np.concatenate(c) for c in product(block_pts, repeat=self.num_blocks)])

    def describe(self):
        if self.kind == BOX:
            return f"box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"
        if self.kind == BALL:
            return f"ball(center={self.center.tolist()}, radius={self.radius})"
        return f"simplices(blocks={self.num_blocks}, size={self.block_size}, eps={self.eps})"


def _closed_form_diameter(s):
    if s.kind == BOX:
        return float(np.linalg.norm(s.upper - s.lower))
    if s.kind == BALL:
        return 2.0 * s.radius
    if s.block_size < 2:
        return 0.0
    scale = max(1.0 - s.block_size * s.eps, 0.0)
    return float(np.sqrt(2.0 * s.num_blocks) * scale)


class ProjectionResult(NamedTuple):
    point: np.ndarray
    residual: float


def project_point(dset, y):
    """Euclidean projection of ``y`` onto ``dset`` as a bare array."""
    y = dset.check_dimension(y)
    if dset.kind == BOX:
        return np.minimum(np.maximum(y, dset.lower), dset.upper)
    if dset.kind == BALL:
        offset = y - dset.center
        norm = np.linalg.norm(offset)
        if norm <= dset.radius + MEMBERSHIP_TOL:
            return y.copy()
        return dset.center + (dset.radius / norm) * offset
    if dset.contains(y):
        return y.copy()
    return kernels.project_simplex_blocks(y, dset.num_blocks, dset.block_size, dset.eps)


def project(dset, y):
    """Project ``y`` onto ``dset``, returning the point and the distance moved."""
    point = project_point(dset, y)
    return ProjectionResult(point, float(np.linalg.norm(np.asarray(y, dtype=float) - point)))


def diameter(dset):
    return dset.diameter


def distance(x, y):
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
