"""Saddle-point test problems: exact gradients, analytic constants, domains.

Every built-in instance exposes the saddle operator ``phi(z) = [grad_x f(x, y);
-grad_y f(x, y)]`` stacked over ``z = [x; y]``, a known saddle point, and the
constants used by the step-size rules: a gradient-norm bound ``grad_bound``
(G) valid over the domain, a smoothness constant ``lipschitz`` (L), the
strong convex-concavity modulus ``mu`` (zero when merely convex-concave), and
the domain diameter.  G and L are clamped up to ``1 + 1e-9`` (raw values kept
alongside) because the step-size rules assume both constants exceed one.

Instances and domain sets are immutable after construction and every
operation is a pure function, so they are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CONSTANT_FLOOR",
    "DomainSet",
    "RestrictionBall",
    "SaddleProblem",
    "BilinearProblem",
    "QuadraticCC",
    "QuadraticSCSC",
    "phi",
    "project",
    "duality_gap",
    "gap_oracle_bruteforce",
    "largest_singular_value",
]

# Step-size rules assume gradient/smoothness constants of at least one, so
# declared constants are clamped upward to this floor.
CONSTANT_FLOOR = 1.0 + 1e-9

_ORACLE_MAX_POINTS = 30_000_000


def _as_vector(p, dim: int, what: str = "vector") -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"{what} has shape {v.shape}, expected ({dim},)")
    return v


def largest_singular_value(A, tol: float = 1e-10, max_iter: int = 50000) -> float:
    """Largest singular value of ``A`` via power iteration on ``A^T A``.

    Deterministic (fixed-seed start vector); iterates until the estimate
    changes by at most ``tol``.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    rng = np.random.Generator(np.random.PCG64(0x5EED))
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        u = A.T @ (A @ v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = u / nu
        estimate = math.sqrt(nu)
        if abs(estimate - sigma) <= tol:
            return float(estimate)
        sigma = estimate
    return float(sigma)


class DomainSet:
    """Closed convex subset of R^dim: an axis-aligned box, a Euclidean ball,
    or all of R^dim.

    Projections are exact: coordinate-wise clamping for boxes, radial
    scaling for balls, identity for the whole space.
    """

    def __init__(self, kind, dim, center=None, halfwidth=None, radius=None):
        if kind not in ("box", "ball", "all"):
            raise ValueError(f"unknown domain kind {kind!r}")
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.kind = kind
        self.dim = int(dim)
        if kind == "all":
            self.center = None
            self.halfwidth = None
            self.radius = None
            return
        self.center = np.array(_as_vector(
            center if center is not None else np.zeros(dim), dim, "center"))
        self.center.setflags(write=False)
        if kind == "box":
            self.halfwidth = np.array(_as_vector(halfwidth, dim, "halfwidth"))
            if not np.all(self.halfwidth > 0):
                raise ValueError("box half-widths must be strictly positive")
            self.halfwidth.setflags(write=False)
            self.radius = None
        else:
            self.radius = float(radius)
            if not self.radius > 0:
                raise ValueError("ball radius must be strictly positive")
            self.halfwidth = None

    @classmethod
    def box(cls, halfwidth, center=None) -> "DomainSet":
        hw = np.atleast_1d(np.asarray(halfwidth, dtype=float))
        return cls("box", hw.shape[0], center=center, halfwidth=hw)

    @classmethod
    def ball(cls, radius, dim, center=None) -> "DomainSet":
        return cls("ball", dim, center=center, radius=radius)

    @classmethod
    def all_space(cls, dim) -> "DomainSet":
        return cls("all", dim)

    @property
    def bounded(self) -> bool:
        return self.kind != "all"

    def project(self, p) -> np.ndarray:
        """Euclidean projection of ``p`` onto the set."""
        p = _as_vector(p, self.dim, "point")
        if self.kind == "all":
            return p
        if self.kind == "box":
            return np.clip(p, self.center - self.halfwidth,
                           self.center + self.halfwidth)
        d = p - self.center
        n = np.linalg.norm(d)
        if n <= self.radius:
            return p
        return self.center + d * (self.radius / n)

    def contains(self, p, tol: float = 1e-9) -> bool:
        p = _as_vector(p, self.dim, "point")
        if self.kind == "all":
            return True
        if self.kind == "box":
            return bool(np.all(np.abs(p - self.center) <= self.halfwidth + tol))
        return bool(np.linalg.norm(p - self.center) <= self.radius + tol)

    def diameter(self) -> float:
        """Exact Euclidean diameter: 2*radius (ball), 2*||halfwidth|| (box)."""
        if self.kind == "all":
            return math.inf
        if self.kind == "box":
            return 2.0 * float(np.linalg.norm(self.halfwidth))
        return 2.0 * self.radius

    def norm_bound(self) -> float:
        """sup of ||p|| over the set (used for gradient bounds)."""
        if self.kind == "all":
            return math.inf
        if self.kind == "box":
            return float(np.linalg.norm(np.abs(self.center) + self.halfwidth))
        return float(np.linalg.norm(self.center)) + self.radius

    def support(self, v) -> float:
        """max over the set of <v, p>."""
        v = _as_vector(v, self.dim, "direction")
        if self.kind == "all":
            return 0.0 if not np.any(v) else math.inf
        if self.kind == "box":
            return float(self.center @ v + self.halfwidth @ np.abs(v))
        return float(self.center @ v) + self.radius * float(np.linalg.norm(v))

    def sample(self, rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
        """Draw ``n`` points from the set (Gaussian with ``scale`` for 'all')."""
        if self.kind == "all":
            return scale * rng.standard_normal((n, self.dim))
        if self.kind == "box":
            u = rng.uniform(-1.0, 1.0, size=(n, self.dim))
            return self.center + u * self.halfwidth
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radii = self.radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / self.dim)
        return self.center + g * radii

    def spec_string(self) -> str:
        """Canonical config-grammar form of the set."""
        if self.kind == "all":
            return "all"
        at = "" if not np.any(self.center) else "@" + ",".join(
            repr(float(c)) for c in self.center)
        if self.kind == "ball":
            return f"ball:{self.radius!r}{at}"
        hw = ",".join(repr(float(h)) for h in self.halfwidth)
        return f"box:{hw}{at}"

    def __repr__(self):
        return f"DomainSet({self.spec_string()!r}, dim={self.dim})"


@dataclass(frozen=True)
class RestrictionBall:
    """Euclidean ball in the stacked z-space used to restrict duality gaps."""

    center: np.ndarray
    radius_sq: float

    @property
    def radius(self) -> float:
        return math.sqrt(self.radius_sq)

    def contains(self, z, rel_slack: float = 1e-9) -> bool:
        d = np.asarray(z, dtype=float) - self.center
        return bool(d @ d <= self.radius_sq * (1.0 + rel_slack))


class SaddleProblem:
    """A min-max instance with exact partial gradients and known constants.

    Subclasses provide ``value``, ``grad_x``, ``grad_y`` and closed-form
    duality-gap pieces.  The stacked variable is ``z = [x; y]``.
    """

    name = "saddle"

    def __init__(self, dim_x, dim_y, domain_x, domain_y, saddle_x, saddle_y,
                 grad_bound, lipschitz, mu=0.0):
        self.dim_x = int(dim_x)
        self.dim_y = int(dim_y)
        self.dim = self.dim_x + self.dim_y
        if domain_x.dim != self.dim_x or domain_y.dim != self.dim_y:
            raise ValueError("domain dimensions do not match problem dimensions")
        self.domain_x = domain_x
        self.domain_y = domain_y
        self.grad_bound_raw = float(grad_bound)
        self.grad_bound = max(self.grad_bound_raw, CONSTANT_FLOOR)
        self.lipschitz_raw = float(lipschitz)
        self.lipschitz = max(self.lipschitz_raw, CONSTANT_FLOOR)
        self.mu = float(mu)
        self.diameter = max(domain_x.diameter(), domain_y.diameter())
        self.saddle = np.concatenate([
            _as_vector(saddle_x, self.dim_x, "saddle_x"),
            _as_vector(saddle_y, self.dim_y, "saddle_y"),
        ])
        self.saddle.setflags(write=False)

    # -- structure ---------------------------------------------------------

    def split(self, z):
        z = _as_vector(z, self.dim, "iterate")
        return z[: self.dim_x], z[self.dim_x:]

    def join(self, x, y) -> np.ndarray:
        return np.concatenate([
            _as_vector(x, self.dim_x, "x"), _as_vector(y, self.dim_y, "y")])

    @property
    def constrained(self) -> bool:
        return self.domain_x.bounded or self.domain_y.bounded

    @property
    def bounded_domains(self) -> bool:
        return self.domain_x.bounded and self.domain_y.bounded

    def project(self, z) -> np.ndarray:
        """Block-wise projection of ``z = [x; y]`` onto X x Y."""
        if not self.constrained:
            return _as_vector(z, self.dim, "iterate")
        x, y = self.split(z)
        return np.concatenate([self.domain_x.project(x), self.domain_y.project(y)])

    def default_start(self) -> np.ndarray:
        """Deterministic start: the all-ones vector projected into the domain,
        then halved (nonzero, never the saddle for the built-ins)."""
        return 0.5 * self.project(np.ones(self.dim))

    # -- oracle surface ----------------------------------------------------

    def value(self, x, y) -> float:
        raise NotImplementedError

    def grad_x(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def grad_y(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def phi(self, z) -> np.ndarray:
        """Saddle operator [grad_x f; -grad_y f] at z = [x; y]."""
        x, y = self.split(z)
        return np.concatenate([self.grad_x(x, y), -self.grad_y(x, y)])

    def phi_many(self, Z) -> np.ndarray:
        """phi applied to each row of ``Z``."""
        Z = np.asarray(Z, dtype=float)
        return np.stack([self.phi(z) for z in Z])

    def value_batch_x(self, X, ybar) -> np.ndarray:
        """f evaluated at each row of ``X`` with ``y = ybar``."""
        return np.array([self.value(x, ybar) for x in X])

    def value_batch_y(self, xbar, Y) -> np.ndarray:
        """f evaluated at ``x = xbar`` with each row of ``Y``."""
        return np.array([self.value(xbar, y) for y in Y])

    # -- duality gap -------------------------------------------------------

    def duality_gap(self, xbar, ybar, restriction: RestrictionBall | None = None) -> float:
        """Primal-dual gap max_y f(xbar, y) - min_x f(x, ybar).

        Maximization runs over the instance domains, or, when ``restriction``
        is given, over the slices of the restriction ball ({y : (xbar, y) in
        H} and {x : (x, ybar) in H}; the domain sets are then ignored).
        Raises ``ValueError("gap undefined...")`` when the maximization is
        unbounded.
        """
        xbar = _as_vector(xbar, self.dim_x, "xbar")
        ybar = _as_vector(ybar, self.dim_y, "ybar")
        if restriction is not None:
            if not restriction.contains(np.concatenate([xbar, ybar])):
                raise ValueError("point lies outside the restriction ball")
            rad_y, y_c = self._slice(restriction, xbar, block="y")
            rad_x, x_c = self._slice(restriction, ybar, block="x")
            hi = self._max_over_y_ball(xbar, y_c, rad_y)
            lo = self._min_over_x_ball(ybar, x_c, rad_x)
        else:
            if not self.domain_x.contains(xbar) or not self.domain_y.contains(ybar):
                raise ValueError("point lies outside the instance domain")
            hi = self._max_over_y_domain(xbar)
            lo = self._min_over_x_domain(ybar)
        gap = hi - lo
        # Mathematically >= 0; clamp float round-off at the saddle.
        return max(float(gap), 0.0)

    def _slice(self, restriction: RestrictionBall, fixed, block: str):
        """Radius and center of {v : (fixed, v) in H} (or the x-block analog)."""
        c_x = restriction.center[: self.dim_x]
        c_y = restriction.center[self.dim_x:]
        fixed_c = c_x if block == "y" else c_y
        d = fixed - fixed_c
        rem = restriction.radius_sq - float(d @ d)
        if rem < -1e-9 * max(restriction.radius_sq, 1.0):
            raise ValueError("point lies outside the restriction ball")
        rad = math.sqrt(max(rem, 0.0))
        return rad, (c_y if block == "y" else c_x)

    def _max_over_y_domain(self, xbar) -> float:
        raise NotImplementedError

    def _min_over_x_domain(self, ybar) -> float:
        raise NotImplementedError

    def _max_over_y_ball(self, xbar, center, radius) -> float:
        raise NotImplementedError

    def _min_over_x_ball(self, ybar, center, radius) -> float:
        raise NotImplementedError

    def config_echo(self) -> dict:
        return {
            "problem": self.name,
            "dim_x": self.dim_x,
            "dim_y": self.dim_y,
            "domain_x": self.domain_x.spec_string(),
            "domain_y": self.domain_y.spec_string(),
            "grad_bound": self.grad_bound,
            "grad_bound_raw": self.grad_bound_raw,
            "lipschitz": self.lipschitz,
            "lipschitz_raw": self.lipschitz_raw,
            "mu": self.mu,
            "diameter": self.diameter,
        }


class _BilinearFormProblem(SaddleProblem):
    """Shared machinery for f(x, y) = <x, A y> instances."""

    def __init__(self, A, domain_x, domain_y):
        A = np.array(A, dtype=float)
        if A.ndim != 2:
            raise ValueError("coupling matrix must be two-dimensional")
        dim_x, dim_y = A.shape
        if not (domain_x.contains(np.zeros(dim_x))
                and domain_y.contains(np.zeros(dim_y))):
            raise ValueError("domains must contain the origin (the saddle point)")
        sigma = largest_singular_value(A)
        grad_bound = max(sigma * domain_y.norm_bound(),
                         sigma * domain_x.norm_bound())
        super().__init__(dim_x, dim_y, domain_x, domain_y,
                         np.zeros(dim_x), np.zeros(dim_y),
                         grad_bound=grad_bound, lipschitz=sigma, mu=0.0)
        self.A = A
        self.A.setflags(write=False)
        self.sigma = sigma
        P = np.zeros((self.dim, self.dim))
        P[: dim_x, dim_x:] = A
        P[dim_x:, : dim_x] = -A.T
        self._P = P

    def value(self, x, y) -> float:
        return float(_as_vector(x, self.dim_x, "x")
                     @ (self.A @ _as_vector(y, self.dim_y, "y")))

    def grad_x(self, x, y) -> np.ndarray:
        return self.A @ _as_vector(y, self.dim_y, "y")

    def grad_y(self, x, y) -> np.ndarray:
        return self.A.T @ _as_vector(x, self.dim_x, "x")

    def phi(self, z) -> np.ndarray:
        return self._P @ _as_vector(z, self.dim, "iterate")

    def phi_many(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self._P.T

    def value_batch_x(self, X, ybar) -> np.ndarray:
        return np.asarray(X, dtype=float) @ (self.A @ ybar)

    def value_batch_y(self, xbar, Y) -> np.ndarray:
        return np.asarray(Y, dtype=float) @ (self.A.T @ xbar)

    def _max_over_y_domain(self, xbar) -> float:
        if not self.domain_y.bounded:
            raise ValueError("gap undefined: unbounded domain for the y block "
                             "(pass a restriction ball)")
        return self.domain_y.support(self.A.T @ xbar)

    def _min_over_x_domain(self, ybar) -> float:
        if not self.domain_x.bounded:
            raise ValueError("gap undefined: unbounded domain for the x block "
                             "(pass a restriction ball)")
        return -self.domain_x.support(-(self.A @ ybar))

    def _max_over_y_ball(self, xbar, center, radius) -> float:
        v = self.A.T @ xbar
        return float(v @ center) + radius * float(np.linalg.norm(v))

    def _min_over_x_ball(self, ybar, center, radius) -> float:
        w = self.A @ ybar
        return float(w @ center) - radius * float(np.linalg.norm(w))


class BilinearProblem(_BilinearFormProblem):
    """f(x, y) = <x, y> with optional box/ball domains (unbounded by default).

    Saddle point at the origin; L equals one before clamping; G is the
    supremum of the block norms over the opposite domain (infinite when
    unconstrained).
    """

    name = "bilinear"

    def __init__(self, dim, domain_x=None, domain_y=None):
        dim = int(dim)
        super().__init__(np.eye(dim),
                         domain_x or DomainSet.all_space(dim),
                         domain_y or DomainSet.all_space(dim))

    def config_echo(self) -> dict:
        echo = super().config_echo()
        echo["dim"] = self.dim_x
        return echo


class QuadraticCC(_BilinearFormProblem):
    """f(x, y) = <x, A y> over bounded box/ball domains containing the origin.

    L is the largest singular value of A; G is L times the domain norm bound.
    """

    name = "quadratic_cc"

    def __init__(self, A, domain_x, domain_y):
        if not (domain_x.bounded and domain_y.bounded):
            raise ValueError("QuadraticCC requires bounded domains")
        super().__init__(A, domain_x, domain_y)


class QuadraticSCSC(SaddleProblem):
    """f(x, y) = (mu/2)||x||^2 - (mu/2)||y||^2 + <x, A y>, unconstrained.

    Strongly convex-strongly concave with modulus mu; saddle at the origin;
    L = mu + sigma_max(A); the gradient norms are unbounded (G = inf).
    """

    name = "quadratic_scsc"

    def __init__(self, dim, mu, A=None):
        dim = int(dim)
        if not mu > 0:
            raise ValueError("mu must be strictly positive")
        A = np.eye(dim) if A is None else np.array(A, dtype=float)
        if A.ndim != 2:
            raise ValueError("coupling matrix must be two-dimensional")
        dim_x, dim_y = A.shape
        sigma = largest_singular_value(A)
        super().__init__(dim_x, dim_y,
                         DomainSet.all_space(dim_x), DomainSet.all_space(dim_y),
                         np.zeros(dim_x), np.zeros(dim_y),
                         grad_bound=math.inf, lipschitz=mu + sigma, mu=mu)
        self.A = A
        self.A.setflags(write=False)
        self.sigma = sigma
        P = np.zeros((self.dim, self.dim))
        P[: dim_x, : dim_x] = mu * np.eye(dim_x)
        P[: dim_x, dim_x:] = A
        P[dim_x:, : dim_x] = -A.T
        P[dim_x:, dim_x:] = mu * np.eye(dim_y)
        self._P = P

    def value(self, x, y) -> float:
        x = _as_vector(x, self.dim_x, "x")
        y = _as_vector(y, self.dim_y, "y")
        return float(0.5 * self.mu * (x @ x) - 0.5 * self.mu * (y @ y)
                     + x @ (self.A @ y))

    def grad_x(self, x, y) -> np.ndarray:
        return self.mu * _as_vector(x, self.dim_x, "x") \
            + self.A @ _as_vector(y, self.dim_y, "y")

    def grad_y(self, x, y) -> np.ndarray:
        return -self.mu * _as_vector(y, self.dim_y, "y") \
            + self.A.T @ _as_vector(x, self.dim_x, "x")

    def phi(self, z) -> np.ndarray:
        return self._P @ _as_vector(z, self.dim, "iterate")

    def phi_many(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self._P.T

    def value_batch_x(self, X, ybar) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (0.5 * self.mu * np.einsum("ij,ij->i", X, X)
                - 0.5 * self.mu * float(ybar @ ybar) + X @ (self.A @ ybar))

    def value_batch_y(self, xbar, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        return (0.5 * self.mu * float(xbar @ xbar)
                - 0.5 * self.mu * np.einsum("ij,ij->i", Y, Y)
                + Y @ (self.A.T @ xbar))

    # First-order conditions give the closed-form inner optima.
    def _max_over_y_domain(self, xbar) -> float:
        b = self.A.T @ xbar
        return float(0.5 * self.mu * (xbar @ xbar) + (b @ b) / (2.0 * self.mu))

    def _min_over_x_domain(self, ybar) -> float:
        c = self.A @ ybar
        return float(-(c @ c) / (2.0 * self.mu) - 0.5 * self.mu * (ybar @ ybar))

    def _max_over_y_ball(self, xbar, center, radius) -> float:
        # max of -(mu/2)||y||^2 + <b, y> over ||y - center|| <= radius,
        # radial in the shifted variable.
        b = self.A.T @ xbar
        b_shift = b - self.mu * center
        nb = float(np.linalg.norm(b_shift))
        t = min(nb / self.mu, radius)
        inner = -0.5 * self.mu * t * t + nb * t
        const = float(b @ center) - 0.5 * self.mu * float(center @ center)
        return 0.5 * self.mu * float(xbar @ xbar) + inner + const

    def _min_over_x_ball(self, ybar, center, radius) -> float:
        c = self.A @ ybar
        c_shift = c + self.mu * center
        nc = float(np.linalg.norm(c_shift))
        t = min(nc / self.mu, radius)
        inner = 0.5 * self.mu * t * t - nc * t
        const = float(c @ center) + 0.5 * self.mu * float(center @ center)
        return inner + const - 0.5 * self.mu * float(ybar @ ybar)

    def config_echo(self) -> dict:
        echo = super().config_echo()
        echo["dim"] = self.dim_x
        return echo


# -- operation-style wrappers ----------------------------------------------

def project(domain: DomainSet, p) -> np.ndarray:
    """Euclidean projection of ``p`` onto ``domain``."""
    return domain.project(p)


def phi(problem: SaddleProblem, z) -> np.ndarray:
    """Saddle operator [grad_x f; -grad_y f] of ``problem`` at ``z``."""
    return problem.phi(z)


def duality_gap(problem: SaddleProblem, xbar, ybar,
                restriction: RestrictionBall | None = None) -> float:
    """Closed-form primal-dual gap; see ``SaddleProblem.duality_gap``."""
    return problem.duality_gap(xbar, ybar, restriction=restriction)


def _grid_axes(lo, hi, resolution):
    axes = []
    for a, b in zip(lo, hi):
        n = max(2, int(math.ceil((b - a) / resolution)) + 1)
        axes.append(np.linspace(a, b, n))
    total = math.prod(len(ax) for ax in axes)
    if total > _ORACLE_MAX_POINTS:
        raise ValueError(
            f"oracle grid would need {total} points; coarsen the resolution")
    return axes


def _grid_points(domain: DomainSet | None, center, radius, resolution):
    """Grid covering either a ball (center/radius) or a bounded domain."""
    if center is not None:
        lo = center - radius
        hi = center + radius
        axes = _grid_axes(lo, hi, resolution)
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        keep = np.linalg.norm(pts - center, axis=1) <= radius + 1e-12
        pts = pts[keep]
    elif domain is not None and domain.kind == "box":
        lo = domain.center - domain.halfwidth
        hi = domain.center + domain.halfwidth
        axes = _grid_axes(lo, hi, resolution)
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    elif domain is not None and domain.kind == "ball":
        lo = domain.center - domain.radius
        hi = domain.center + domain.radius
        axes = _grid_axes(lo, hi, resolution)
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        keep = np.linalg.norm(pts - domain.center, axis=1) <= domain.radius + 1e-12
        pts = pts[keep]
    else:
        raise ValueError(
            "gap oracle requires a bounded domain or an explicit restriction")
    if pts.shape[0] == 0:
        raise ValueError("oracle grid is empty; refine the resolution")
    return pts


def gap_oracle_bruteforce(problem: SaddleProblem, xbar, ybar,
                          grid_resolution: float,
                          restriction: RestrictionBall | None = None) -> float:
    """Grid-search approximation of the duality gap.

    Independent of the closed forms: enumerates grid points over the
    (bounded) domains or over the restriction-ball slices and takes the
    best value.  Exponential in the dimension; limited to dim_x + dim_y <= 4.
    """
    if problem.dim > 4:
        raise ValueError("dimension too large for the brute-force gap oracle")
    xbar = _as_vector(xbar, problem.dim_x, "xbar")
    ybar = _as_vector(ybar, problem.dim_y, "ybar")
    if restriction is not None:
        rad_y, y_c = problem._slice(restriction, xbar, block="y")
        rad_x, x_c = problem._slice(restriction, ybar, block="x")
        Y = _grid_points(None, y_c, rad_y, grid_resolution)
        X = _grid_points(None, x_c, rad_x, grid_resolution)
    else:
        Y = _grid_points(problem.domain_y, None, None, grid_resolution)
        X = _grid_points(problem.domain_x, None, None, grid_resolution)
    hi = float(np.max(problem.value_batch_y(xbar, Y)))
    lo = float(np.min(problem.value_batch_x(X, ybar)))
    return hi - lo
