"""Grid containers for radial (geodesic polar) and Cartesian graph fields."""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import OutOfDomainError, UsageError


@dataclass(frozen=True)
class PolarGrid:
    """Uniform geodesic polar grid on a ball of the hyperbolic plane.

    Nodes sit at s_i = i * ds for i = 0..n_s (pole included, i = n_s is the
    boundary circle) and theta_j = j * dtheta for j = 0..n_theta - 1.
    """

    n_s: int
    n_theta: int
    s_max: float

    def __post_init__(self):
        if self.n_s < 2 or self.n_theta < 8 or self.n_theta % 2 != 0:
            raise UsageError("polar grid needs n_s >= 2 and even n_theta >= 8")
        if not self.s_max > 0:
            raise UsageError("s_max must be positive")

    @property
    def ds(self):
        return self.s_max / self.n_s

    @property
    def dtheta(self):
        return 2 * np.pi / self.n_theta

    @property
    def s_nodes(self):
        return np.arange(self.n_s + 1) * self.ds

    @property
    def theta_nodes(self):
        return np.arange(self.n_theta) * self.dtheta

    def disk_points(self):
        """Conformal disk coordinates of all nodes, shape (n_s+1, n_theta, 2)."""
        rho = np.tanh(self.s_nodes / 2.0)
        th = self.theta_nodes
        x = rho[:, None] * np.cos(th)[None, :]
        y = rho[:, None] * np.sin(th)[None, :]
        return np.stack([x, y], axis=-1)


@dataclass
class ScalarField:
    """Scalar samples on a PolarGrid. The pole value is stored once."""

    grid: PolarGrid
    pole: float
    rings: np.ndarray  # shape (n_s, n_theta), rows are s_1 .. s_{n_s}

    def __post_init__(self):
        self.rings = np.asarray(self.rings, dtype=float)
        if self.rings.shape != (self.grid.n_s, self.grid.n_theta):
            raise UsageError("ring array shape does not match the grid")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, 0.0, np.zeros((grid.n_s, grid.n_theta)))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(s, theta); fn must broadcast over arrays."""
        s = grid.s_nodes[1:, None]
        th = grid.theta_nodes[None, :]
        rings = np.broadcast_to(fn(s, th), (grid.n_s, grid.n_theta)).astype(float)
        return cls(grid, float(fn(0.0, 0.0)), rings.copy())

    @classmethod
    def from_matrix(cls, grid, mat):
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (grid.n_s + 1, grid.n_theta):
            raise UsageError("matrix shape does not match the grid")
        return cls(grid, float(mat[0].mean()), mat[1:].copy())

    @classmethod
    def from_flat(cls, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_s * grid.n_theta + 1,):
            raise UsageError("flat value count does not match the grid")
        return cls(grid, float(values[0]), values[1:].reshape(grid.n_s, grid.n_theta))

    def matrix(self):
        """Full node matrix, pole value replicated along row 0."""
        out = np.empty((self.grid.n_s + 1, self.grid.n_theta))
        out[0] = self.pole
        out[1:] = self.rings
        return out

    def flat(self):
        """Pole first, then rings row-major."""
        return np.concatenate([[self.pole], self.rings.ravel()])

    def copy(self):
        return ScalarField(self.grid, self.pole, self.rings.copy())

    def min(self):
        return min(self.pole, float(self.rings.min()))

    def max(self):
        return max(self.pole, float(self.rings.max()))

    def evaluator(self):
        """Bicubic interpolant (s, theta) -> value, periodic in theta."""
        g = self.grid
        mat = self.matrix()
        pad = 3
        th = g.theta_nodes
        th_ext = np.concatenate([th[-pad:] - 2 * np.pi, th, th[:pad] + 2 * np.pi])
        mat_ext = np.concatenate([mat[:, -pad:], mat, mat[:, :pad]], axis=1)
        spl = RectBivariateSpline(g.s_nodes, th_ext, mat_ext, kx=3, ky=3, s=0)

        def ev(s, theta):
            s = np.asarray(s, dtype=float)
            if np.any(s < -1e-12) or np.any(s > g.s_max * (1 + 1e-12)):
                raise OutOfDomainError("radius outside the sampled ball")
            th_q = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
            return spl.ev(np.clip(s, 0.0, g.s_max), th_q)

        return ev


def pole_quadratic_fit(fld, coords="normal"):
    """Gradient and Hessian at the pole from a quadratic least-squares fit.

    Fits u over the pole node plus the first two rings in local Cartesian
    coordinates: geodesic normal coordinates s*(cos, sin) by default, or the
    conformal disk coordinates tanh(s/2)*(cos, sin) with coords="disk".
    """
    g = fld.grid
    th = g.theta_nodes
    pts = [np.zeros((1, 2))]
    vals = [np.array([fld.pole])]
    for i in (1, 2):
        s = g.s_nodes[i]
        r = np.tanh(s / 2.0) if coords == "disk" else s
        pts.append(np.stack([r * np.cos(th), r * np.sin(th)], axis=-1))
        vals.append(fld.rings[i - 1])
    P = np.concatenate(pts)
    V = np.concatenate(vals)
    A = np.stack(
        [np.ones(len(P)), P[:, 0], P[:, 1], P[:, 0] ** 2, P[:, 0] * P[:, 1], P[:, 1] ** 2],
        axis=-1,
    )
    c, *_ = np.linalg.lstsq(A, V, rcond=None)
    grad = np.array([c[1], c[2]])
    hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    return grad, hess


@dataclass(frozen=True)
class BoxGrid:
    """Uniform node grid on a symmetric box [-R_k, R_k] per axis."""

    extents: tuple
    counts: tuple

    def __post_init__(self):
        if len(self.extents) != len(self.counts):
            raise UsageError("per-axis extents and counts must align")
        if len(self.extents) < 1:
            raise UsageError("need at least one axis")
        if any(n < 4 for n in self.counts):
            raise UsageError("need at least 4 nodes per axis")
        if any(not r > 0 for r in self.extents):
            raise UsageError("extents must be positive")

    @classmethod
    def cube(cls, m, half_width, n):
        return cls((float(half_width),) * m, (int(n),) * m)

    @property
    def m(self):
        return len(self.extents)

    @property
    def axes(self):
        return [np.linspace(-r, r, n) for r, n in zip(self.extents, self.counts)]

    @property
    def spacing(self):
        return tuple(2 * r / (n - 1) for r, n in zip(self.extents, self.counts))


@dataclass
class CartesianField:
    """Scalar samples of a graph function on a BoxGrid.

    margin records the declared spacelike margin: the discrete gradient
    satisfies |grad f| <= 1 - margin at interior nodes.
    """

    grid: BoxGrid
    values: np.ndarray
    margin: float = field(default=0.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(self.grid.counts):
            raise UsageError("value array shape does not match the grid")

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn on the grid; evaluates slab by slab to bound memory."""
        vals = np.empty(tuple(grid.counts))
        axes = grid.axes
        rest = list(np.meshgrid(*axes[1:], indexing="ij")) if grid.m > 1 else []
        for i, x0 in enumerate(axes[0]):
            coords = [np.full(rest[0].shape if rest else (), x0)] + rest
            pts = np.stack(coords, axis=-1)
            vals[i] = fn(pts)
        out = cls(grid, vals)
        out.margin = out.spacelike_margin()
        return out

    def gradient(self):
        """Second-order centered/one-sided partial derivative arrays."""
        return np.gradient(self.values, *self.grid.spacing, edge_order=2)

    def spacelike_margin(self):
        grads = self.gradient()
        gn = np.sqrt(sum(g * g for g in grads))
        return float(1.0 - gn.max())
