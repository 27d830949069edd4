"""Fractional Sobolev norms and the embedding constants that control them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .delta import GridFunction, QuadraturePolicy, lp_norm, sup_norm
from .errors import DomainError
from .fractional import frac_integral, gamma_fn, rl_derivative

NORM_POLICY = QuadraturePolicy.LEFT_RECTANGLE
SLACK = 1e-9


@dataclass(frozen=True)
class SobolevParams:
    alpha: float
    p: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @property
    def embeds_in_continuous(self) -> bool:
        return self.alpha > 1 / self.p

    def require_continuous(self) -> None:
        if not self.embeds_in_continuous:
            raise DomainError(f"sup-norm bounds need alpha > 1/p (alpha={self.alpha}, p={self.p})")


def sobolev_norm(u: GridFunction, params: SobolevParams) -> tuple[float, float]:
    """Return ``(full, seminorm)``.

    ``seminorm`` is the L^p norm of the left RL derivative, the norm used by
    the solver; ``full`` adds the L^p norm of ``u`` itself.
    """
    d = rl_derivative(u, params.alpha)
    semi = lp_norm(d, params.p, NORM_POLICY)
    base = lp_norm(u, params.p, NORM_POLICY)
    full = (base**params.p + semi**params.p) ** (1 / params.p)
    return full, semi


def equivalent_norm(u: GridFunction, params: SobolevParams) -> float:
    """Norm built from the trace of ``I^{1-alpha} u`` at the successor of ``a`` plus the seminorm.

    For ``alpha == 1`` the trace term vanishes.
    """
    _, semi = sobolev_norm(u, params)
    if params.alpha == 1 or u.mesh.n < 2:
        trace = 0.0
    else:
        trace = abs(frac_integral(u, 1 - params.alpha).values[1])
    return (trace**params.p + semi**params.p) ** (1 / params.p)


@dataclass(frozen=True)
class EmbeddingConstants:
    """Constants of the L^p and sup-norm embeddings on ``[a, b]``.

    ``c_lp``/``c_sup`` use powers of ``b``; the ``*_shifted`` variants use
    ``b - a``.  Both are reported because they only agree when ``a == 0``.
    """

    alpha: float
    p: float
    a: float
    b: float
    c_lp: float
    c_lp_shifted: float
    c_sup: float | None
    c_sup_shifted: float | None
    note: str = ""


def _sup_constant(alpha: float, p: float, length: float) -> float:
    q = p / (p - 1)
    return length ** (alpha - 1 / p) / (gamma_fn(alpha) * ((alpha - 1) * q + 1) ** (1 / q))


def embedding_bounds(params: SobolevParams, a: float, b: float, require_sup: bool = False) -> EmbeddingConstants:
    if not b > a:
        raise DomainError(f"need b > a, got a={a}, b={b}")
    if require_sup:
        params.require_continuous()
    alpha, p = params.alpha, params.p
    note = "" if a > 0 else "a <= 0: checks use the (b - a) constants"
    c_lp = b**alpha / gamma_fn(alpha + 1) if b > 0 else math.nan
    c_lp_shift = (b - a) ** alpha / gamma_fn(alpha + 1)
    c_sup = c_sup_shift = None
    if params.embeds_in_continuous:
        c_sup = _sup_constant(alpha, p, b) if b > 0 else math.nan
        c_sup_shift = _sup_constant(alpha, p, b - a)
    return EmbeddingConstants(alpha, p, a, b, c_lp, c_lp_shift, c_sup, c_sup_shift, note)


def holder_modulus(params: SobolevParams, seminorm: float) -> float:
    """Constant ``C`` with ``|u(t1) - u(t2)| <= C |t2 - t1|^(alpha - 1/p)``."""
    params.require_continuous()
    q = params.q
    return 2 * seminorm / (gamma_fn(params.alpha) * (1 + (params.alpha - 1) * q) ** (1 / q))


@dataclass
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    constant: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * (1 + SLACK)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass
class EmbeddingReport:
    params: SobolevParams
    seminorm: float
    constants: EmbeddingConstants
    checks: list[InequalityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def slack(self) -> float:
        return min((c.slack for c in self.checks), default=0.0)


def verify_embeddings(
    u: GridFunction, params: SobolevParams, check_sup: bool = True, density: GridFunction | None = None
) -> EmbeddingReport:
    """Check the L^p, sup-norm and Hoelder bounds for ``u`` against its seminorm.

    The sup-norm and Hoelder checks need ``alpha > 1/p`` and ``u(a) == 0``.
    When ``u = I^alpha density`` is known, pass ``density`` and its L^p norm
    replaces the seminorm computed from the discrete derivative of ``u``.
    """
    mesh = u.mesh
    if check_sup:
        params.require_continuous()
        if u.values[0] != 0:
            raise ValueError("sup-norm embedding is stated for u(a) = 0")
    if density is None:
        _, semi = sobolev_norm(u, params)
    else:
        semi = lp_norm(density, params.p, NORM_POLICY)
    consts = embedding_bounds(params, mesh.a, mesh.b)
    report = EmbeddingReport(params, semi, consts)
    report.checks.append(InequalityCheck("lp", lp_norm(u, params.p, NORM_POLICY), consts.c_lp_shifted * semi, consts.c_lp_shifted))
    if check_sup:
        report.checks.append(InequalityCheck("sup", sup_norm(u), consts.c_sup_shifted * semi, consts.c_sup_shifted))
        c = holder_modulus(params, semi)
        t = mesh.nodes
        gap = np.abs(t[:, None] - t[None, :])
        diff = np.abs(u.values[:, None] - u.values[None, :])
        bound = c * gap ** (params.alpha - 1 / params.p)
        # the worst pair by ratio; equal nodes have zero on both sides
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(gap > 0, diff / bound, 0.0) if c > 0 else np.where(diff > 0, np.inf, 0.0)
        i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
        report.checks.append(InequalityCheck("holder", float(diff[i, j]), float(bound[i, j]), c))
    return report
