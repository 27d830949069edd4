r"""Riemann-Liouville and Caputo fractional operators on a mesh.

The left fractional integral

.. math::

    ({}_a I^\alpha_t f)(t) = \frac{1}{\Gamma(\alpha)}
        \int_a^t (t - \sigma(s))^{\alpha - 1} f(s) \,\Delta s

is discretized cell by cell.  With :attr:`KernelPolicy.CELL_AVERAGED` the
kernel is replaced by its exact integral over each cell, which is product
integration against piecewise-constant data.  :attr:`KernelPolicy.LEFT_ENDPOINT`
keeps the literal kernel sample and therefore blows up on any scattered cell
whose successor is the evaluation point.

Right-side integrals are the adjoints of the left matrices with respect to the
left-rectangle Delta-quadrature weights, so fractional integration by parts is
an exact discrete identity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .delta import GridFunction, delta_derivative, derivative_matrix
from .errors import DomainError, ResolutionError, SingularKernelError
from .timescale import Mesh

MATRIX_NODE_CAP = 20_000
_ROW_BLOCK = 512


class KernelPolicy(enum.Enum):
    CELL_AVERAGED = "cell_averaged"
    LEFT_ENDPOINT = "left_endpoint"


class OpSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


def gamma_fn(x: float) -> float:
    """Gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    return math.gamma(x)


def _check_integral_order(alpha: float) -> None:
    if not alpha > 0:
        raise DomainError(f"integral order must be > 0, got {alpha}")


def _check_derivative_order(alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise DomainError(f"derivative order must lie in (0, 1], got {alpha}")


def _left_rows(mesh: Mesh, alpha: float, policy: KernelPolicy, rows: np.ndarray) -> np.ndarray:
    """Rows ``rows`` of the left fractional-integral matrix."""
    t = mesh.nodes[rows][:, None]
    s = mesh.nodes[None, :-1]
    nxt = mesh.nodes[None, 1:]
    # cell j contributes to row i only once its successor has been reached
    active = nxt <= t
    block = np.zeros((len(rows), mesh.n))
    if policy is KernelPolicy.CELL_AVERAGED:
        with np.errstate(invalid="ignore"):
            upper = np.where(active, t - s, 0.0) ** alpha
            lower = np.where(active, t - nxt, 0.0) ** alpha
        block[:, :-1] = np.where(active, upper - lower, 0.0) / gamma_fn(alpha + 1)
        return block
    scat = mesh.scattered[None, :]
    base = np.where(scat, t - nxt, t - s)
    if alpha < 1:
        hit = active & scat & (base == 0)
        if hit.any():
            i, j = np.argwhere(hit)[0]
            raise SingularKernelError(
                f"literal kernel (t - sigma(s))^{alpha - 1:g} is singular at t={mesh.nodes[rows[i]]!r}, "
                f"s={mesh.nodes[j]!r}: scattered cell ends at the evaluation point"
            )
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = np.where(active, np.where(active, base, 1.0) ** (alpha - 1), 0.0)
    block[:, :-1] = kern * mesh.mu[None, :-1] / gamma_fn(alpha)
    return block


def _blocks(n: int):
    for start in range(0, n, _ROW_BLOCK):
        yield np.arange(start, min(start + _ROW_BLOCK, n))


def _apply_left(mesh: Mesh, alpha: float, policy: KernelPolicy, v: np.ndarray) -> np.ndarray:
    out = np.empty(mesh.n)
    for rows in _blocks(mesh.n):
        out[rows] = _left_rows(mesh, alpha, policy, rows) @ v
    return out


def _apply_left_transpose(mesh: Mesh, alpha: float, policy: KernelPolicy, v: np.ndarray) -> np.ndarray:
    out = np.zeros(mesh.n)
    for rows in _blocks(mesh.n):
        out += _left_rows(mesh, alpha, policy, rows).T @ v[rows]
    return out


def _adjoint_weights(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    w = mesh.mu
    inv = np.divide(1.0, w, out=np.zeros_like(w), where=w > 0)
    return w, inv


def frac_integral(
    f: GridFunction,
    alpha: float,
    side: OpSide | str = OpSide.LEFT,
    policy: KernelPolicy = KernelPolicy.CELL_AVERAGED,
) -> GridFunction:
    """Left or right fractional integral of order ``alpha > 0`` at every node.

    The right integral is ``W^{-1} L^T W f`` with ``W`` the cell measures; its
    value at the last node is zero.
    """
    _check_integral_order(alpha)
    side = OpSide(side)
    mesh = f.mesh
    if side is OpSide.LEFT:
        return f.with_values(_apply_left(mesh, alpha, policy, f.values))
    w, inv = _adjoint_weights(mesh)
    return f.with_values(inv * _apply_left_transpose(mesh, alpha, policy, w * f.values))


def frac_integral_at(
    f: GridFunction,
    alpha: float,
    t: float,
    policy: KernelPolicy = KernelPolicy.CELL_AVERAGED,
) -> float:
    """Left fractional integral evaluated at the single node ``t``."""
    _check_integral_order(alpha)
    i = f.mesh.index(t)
    return float(_left_rows(f.mesh, alpha, policy, np.array([i]))[0] @ f.values)


def rl_derivative(
    f: GridFunction,
    alpha: float,
    side: OpSide | str = OpSide.LEFT,
    policy: KernelPolicy = KernelPolicy.CELL_AVERAGED,
) -> GridFunction:
    """Riemann-Liouville derivative: Delta-derivative of the ``1 - alpha`` integral.

    The right derivative carries a minus sign.  ``alpha == 1`` is the plain
    Delta-derivative.
    """
    _check_derivative_order(alpha)
    side = OpSide(side)
    sign = 1.0 if side is OpSide.LEFT else -1.0
    if alpha == 1:
        inner = f
    else:
        inner = frac_integral(f, 1 - alpha, side, policy)
    d = delta_derivative(inner)
    return GridFunction(f.mesh, sign * d.values, extrapolated=True)


def caputo_derivative(
    f: GridFunction,
    alpha: float,
    side: OpSide | str = OpSide.LEFT,
    policy: KernelPolicy = KernelPolicy.CELL_AVERAGED,
) -> GridFunction:
    """Caputo derivative: ``1 - alpha`` integral of the Delta-derivative."""
    _check_derivative_order(alpha)
    side = OpSide(side)
    sign = 1.0 if side is OpSide.LEFT else -1.0
    df = delta_derivative(f)
    if alpha == 1:
        return GridFunction(f.mesh, sign * df.values, extrapolated=True)
    return f.with_values(sign * frac_integral(df, 1 - alpha, side, policy).values)


def literal_right_integral(f: GridFunction, alpha: float) -> GridFunction:
    """Right fractional integral with the literal kernel ``(s - sigma(t))^(alpha-1)``.

    The sum starts at the first cell after ``t``.  Only meaningful on dense
    meshes; a scattered successor cell makes the kernel singular for
    ``alpha < 1``.
    """
    _check_integral_order(alpha)
    mesh = f.mesh
    n = mesh.n
    sig = np.where(np.append(mesh.scattered, False), mesh.successor, mesh.nodes)
    s = mesh.nodes[None, :-1]
    active = np.arange(n - 1)[None, :] > np.arange(n)[:, None]
    base = s - sig[:, None]
    if alpha < 1 and (active & (base == 0)).any():
        raise SingularKernelError("literal right kernel is singular on a scattered cell")
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = np.where(active, np.where(active, base, 1.0) ** (alpha - 1), 0.0)
    vals = kern @ (mesh.mu[:-1] * f.values[:-1]) / gamma_fn(alpha)
    return f.with_values(vals)


@dataclass(frozen=True, eq=False)
class FracOperator:
    """Assembled operator matrix acting on node values."""

    matrix: np.ndarray
    alpha: float
    kind: str
    policy: KernelPolicy
    mesh: Mesh

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def side(self) -> OpSide:
        return OpSide.RIGHT if "right" in self.kind else OpSide.LEFT

    def apply(self, f: GridFunction) -> GridFunction:
        return GridFunction(self.mesh, self.matrix @ f.values)

    def __matmul__(self, v):
        if isinstance(v, GridFunction):
            return self.apply(v)
        return self.matrix @ v


OPERATOR_KINDS = ("integral-left", "integral-right-adjoint", "rl-derivative-left")


def operator_matrix(
    mesh: Mesh,
    alpha: float,
    kind: str = "integral-left",
    policy: KernelPolicy = KernelPolicy.CELL_AVERAGED,
    node_cap: int = MATRIX_NODE_CAP,
) -> FracOperator:
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    if mesh.n > node_cap:
        raise ResolutionError(f"dense {mesh.n}x{mesh.n} operator exceeds cap of {node_cap} nodes")
    everything = np.arange(mesh.n)
    if kind == "integral-left":
        _check_integral_order(alpha)
        m = _left_rows(mesh, alpha, policy, everything)
    elif kind == "integral-right-adjoint":
        _check_integral_order(alpha)
        w, inv = _adjoint_weights(mesh)
        m = inv[:, None] * _left_rows(mesh, alpha, policy, everything).T * w[None, :]
    else:
        _check_derivative_order(alpha)
        d = derivative_matrix(mesh)
        m = d if alpha == 1 else d @ _left_rows(mesh, 1 - alpha, policy, everything)
    return FracOperator(matrix=np.ascontiguousarray(m), alpha=alpha, kind=kind, policy=policy, mesh=mesh)
