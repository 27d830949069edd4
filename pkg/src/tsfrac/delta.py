"""Delta integrals, delta derivatives and L^p norms on a mesh."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BadExponentError
from .timescale import Mesh


class QuadraturePolicy(enum.Enum):
    """Rule used on dense cells.  Scattered cells always weight the left node by mu."""

    LEFT_RECTANGLE = "left"
    TRAPEZOID = "trapezoid"


@dataclass(frozen=True, eq=False)
class GridFunction:
    mesh: Mesh
    values: np.ndarray
    extrapolated: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.n,):
            raise ValueError(f"expected {self.mesh.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, mesh: Mesh, func: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
        return cls(mesh, np.broadcast_to(np.asarray(func(mesh.nodes), dtype=float), (mesh.n,)).copy())

    @classmethod
    def constant(cls, mesh: Mesh, c: float) -> GridFunction:
        return cls(mesh, np.full(mesh.n, float(c)))

    def with_values(self, values: np.ndarray) -> GridFunction:
        return GridFunction(self.mesh, values)

    def __len__(self) -> int:
        return self.mesh.n

    def __neg__(self) -> GridFunction:
        return self.with_values(-self.values)

    def __abs__(self) -> GridFunction:
        return self.with_values(np.abs(self.values))

    def __add__(self, other):
        return self.with_values(self.values + _raw(other))

    def __sub__(self, other):
        return self.with_values(self.values - _raw(other))

    def __mul__(self, other):
        return self.with_values(self.values * _raw(other))

    __radd__ = __add__
    __rmul__ = __mul__


def _raw(x):
    return x.values if isinstance(x, GridFunction) else x


def quadrature_weights(
    mesh: Mesh,
    policy: QuadraturePolicy = QuadraturePolicy.TRAPEZOID,
    lo: int = 0,
    hi: int | None = None,
) -> np.ndarray:
    """Node weights ``w`` with ``w @ f`` the delta integral over cells ``[lo, hi)``."""
    hi = mesh.n - 1 if hi is None else hi
    w = np.zeros(mesh.n)
    if hi <= lo:
        return w
    cells = np.arange(lo, hi)
    mu = mesh.mu[cells]
    if policy is QuadraturePolicy.LEFT_RECTANGLE:
        w[cells] = mu
        return w
    scat = mesh.scattered[cells]
    w[cells] += np.where(scat, mu, 0.5 * mu)
    np.add.at(w, cells + 1, np.where(scat, 0.0, 0.5 * mu))
    return w


def delta_integral(
    f: GridFunction,
    lo: float | None = None,
    hi: float | None = None,
    policy: QuadraturePolicy = QuadraturePolicy.TRAPEZOID,
) -> float:
    """Delta integral of ``f`` from node ``lo`` to node ``hi`` (defaults: ``a`` and ``b``).

    Raises :class:`~tsfrac.errors.NotANodeError` when an endpoint is not a node.
    """
    mesh = f.mesh
    i0 = 0 if lo is None else mesh.index(lo)
    i1 = mesh.n - 1 if hi is None else mesh.index(hi)
    if i1 < i0:
        raise ValueError("delta_integral needs lo <= hi")
    return float(quadrature_weights(mesh, policy, i0, i1) @ f.values)


def cumulative_integral(f: GridFunction) -> GridFunction:
    """``t -> integral_a^t f`` at every node (left-rectangle rule)."""
    out = np.concatenate(([0.0], np.cumsum(f.mesh.mu[:-1] * f.values[:-1])))
    return f.with_values(out)


def derivative_matrix(mesh: Mesh) -> np.ndarray:
    """Forward-difference matrix; the last row repeats the previous one."""
    n = mesh.n
    inv = 1.0 / mesh.mu[:-1]
    d = np.zeros((n, n))
    idx = np.arange(n - 1)
    d[idx, idx] = -inv
    d[idx, idx + 1] = inv
    d[n - 1] = d[n - 2]
    return d


def delta_derivative(f: GridFunction) -> GridFunction:
    """Hilger derivative: exact quotient on scattered cells, forward difference on dense ones.

    The value at the last node is copied from the previous cell and the result
    is flagged ``extrapolated``.
    """
    mesh = f.mesh
    if mesh.n < 2:
        raise ValueError("delta_derivative needs at least two nodes")
    d = np.diff(f.values) / mesh.mu[:-1]
    return GridFunction(mesh, np.append(d, d[-1]), extrapolated=True)


def shift_sigma(f: GridFunction) -> GridFunction:
    """``f(sigma(t))``: successor value on scattered cells, ``f`` itself elsewhere."""
    v = f.values.copy()
    scat = np.append(f.mesh.scattered, False)
    v[:-1][scat[:-1]] = f.values[1:][scat[:-1]]
    return f.with_values(v)


def lp_norm(
    f: GridFunction,
    p: float,
    policy: QuadraturePolicy = QuadraturePolicy.TRAPEZOID,
    hi: float | None = None,
) -> float:
    if not p >= 1:
        raise BadExponentError(f"p must be >= 1, got {p}")
    return delta_integral(f.with_values(np.abs(f.values) ** p), None, hi, policy) ** (1.0 / p)


def sup_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values)))
