r"""Variational solver for the Kirchhoff-type fractional p-Laplacian problem.

Weak solutions with ``u(a) = u(b) = 0`` are critical points of

.. math::

    E(u) = \frac{(\beta + \varrho S(u))^p - \beta^p}{\varrho p^2}
           - \int \lambda(t) G(t, u(t)) \,\Delta t,
    \qquad S(u) = \int |D^\alpha u|^p \,\Delta t .

The discrete energy uses the left RL-derivative matrix restricted to interior
nodes and left-rectangle weights, and :func:`gradient` is its exact gradient.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import threading
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import linalg

from .delta import GridFunction, QuadraturePolicy, quadrature_weights
from .errors import DomainError, EndpointNotFound, LineSearchFailure, SolverError
from .fractional import KernelPolicy, operator_matrix
from .timescale import Mesh

log = logging.getLogger(__name__)


def phi_p(y, p: float):
    """p-Laplacian map ``|y|^(p-2) y`` with ``phi_p(0) = 0``."""
    y = np.asarray(y, dtype=float)
    out = np.abs(y) ** (p - 1) * np.sign(y)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# nonlinearities


@dataclass(frozen=True)
class Power:
    """``G(t, x) = c |x|^mu / mu``; superlinear when ``mu > p**2``."""

    c: float
    ar_exponent: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError("Power nonlinearity needs c > 0")

    def potential(self, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return self.c * np.abs(x) ** self.ar_exponent / self.ar_exponent

    def grad(self, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return self.c * np.abs(x) ** (self.ar_exponent - 1) * np.sign(x)

    def curvature(self, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return self.c * (self.ar_exponent - 1) * np.abs(x) ** (self.ar_exponent - 2)

    def check(self, p: float) -> None:
        if not self.ar_exponent > p * p:
            raise DomainError(f"ar_exponent must exceed p^2 = {p * p:g}, got {self.ar_exponent:g}")


@dataclass(frozen=True, eq=False)
class WeightedPower:
    """``G(t, x) = d(t) |x|^r`` with ``1 < r < p**2`` and ``d >= 0``, ``d != 0``."""

    d: np.ndarray
    r: float

    def __post_init__(self):
        d = np.asarray(self.d.values if isinstance(self.d, GridFunction) else self.d, dtype=float)
        if np.any(d < 0) or not np.any(d > 0):
            raise DomainError("weight d must be nonnegative and not identically zero")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    def potential(self, x, idx):
        return self.d[idx] * np.abs(x) ** self.r

    def grad(self, x, idx):
        return self.r * self.d[idx] * np.abs(x) ** (self.r - 1) * np.sign(x)

    def curvature(self, x, idx):
        with np.errstate(divide="ignore"):
            return self.r * (self.r - 1) * self.d[idx] * np.abs(x) ** (self.r - 2)

    def check(self, p: float) -> None:
        if not 1 < self.r < p * p:
            raise DomainError(f"r must lie in (1, p^2 = {p * p:g}), got {self.r:g}")


Nonlinearity = Union[Power, WeightedPower]


# --------------------------------------------------------------------------
# problem and model


@dataclass(frozen=True, eq=False)
class BvpProblem:
    mesh: Mesh
    alpha: float
    p: float
    beta: float
    kirchhoff_rho: float
    lam: np.ndarray
    nonlinearity: Nonlinearity
    diagnostic: bool = False
    """Allow ``lambda == 0`` (drops the nonlinear term) for diagnostics."""

    def __post_init__(self):
        lam = self.lam
        if isinstance(lam, GridFunction):
            lam = lam.values
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (self.mesh.n,)).copy()
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if not 1 / self.p < self.alpha <= 1:
            raise DomainError(f"alpha must lie in (1/p, 1] = ({1 / self.p:g}, 1], got {self.alpha}")
        if not self.beta > 0 or not self.kirchhoff_rho > 0:
            raise DomainError("beta and kirchhoff_rho must be positive")
        if self.diagnostic:
            if np.any(lam < 0):
                raise DomainError("lambda must be nonnegative")
        elif not lam.min() > 0:
            raise DomainError("lambda must have a positive minimum over the nodes")
        self.nonlinearity.check(self.p)
        if self.mesh.n < 3:
            raise DomainError("mesh needs an interior node")


@dataclass(frozen=True, eq=False)
class EnergyModel:
    problem: BvpProblem
    D: np.ndarray
    w: np.ndarray
    lam_w: np.ndarray
    interior: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.interior)

    @property
    def mesh(self) -> Mesh:
        return self.problem.mesh

    def embed(self, u: np.ndarray) -> GridFunction:
        full = np.zeros(self.mesh.n)
        full[self.interior] = u
        return GridFunction(self.mesh, full)

    def restrict(self, f: GridFunction | np.ndarray) -> np.ndarray:
        v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
        return v[self.interior].copy()

    def S(self, u: np.ndarray) -> float:
        return float(self.w @ np.abs(self.D @ u) ** self.problem.p)

    def seminorm(self, u: np.ndarray) -> float:
        return self.S(u) ** (1 / self.problem.p)

    def gram(self) -> np.ndarray:
        """Gram matrix ``D^T W D`` of the p = 2 seminorm."""
        return self.D.T @ (self.w[:, None] * self.D)


def assemble(problem: BvpProblem) -> EnergyModel:
    mesh = problem.mesh
    op = operator_matrix(mesh, problem.alpha, "rl-derivative-left", KernelPolicy.CELL_AVERAGED)
    interior = np.arange(1, mesh.n - 1)
    D = np.ascontiguousarray(op.matrix[:, interior])
    w = quadrature_weights(mesh, QuadraturePolicy.LEFT_RECTANGLE)
    for arr in (D, w, interior):
        arr.setflags(write=False)
    lam_w = (w * problem.lam)[interior]
    lam_w.setflags(write=False)
    return EnergyModel(problem=problem, D=D, w=w, lam_w=lam_w, interior=interior)


def _kirchhoff_excess(beta: float, rho: float, p: float, S: float) -> float:
    """``(beta + rho S)^p - beta^p`` without cancellation for small ``S``."""
    return beta**p * math.expm1(p * math.log1p(rho * S / beta))


def energy(model: EnergyModel, u: np.ndarray) -> float:
    pr = model.problem
    S = model.S(u)
    kirch = _kirchhoff_excess(pr.beta, pr.kirchhoff_rho, pr.p, S) / (pr.kirchhoff_rho * pr.p**2)
    return kirch - float(model.lam_w @ pr.nonlinearity.potential(u, model.interior))


def _pairing(model: EnergyModel, u: np.ndarray) -> tuple[float, np.ndarray]:
    Du = model.D @ u
    S = float(model.w @ np.abs(Du) ** model.problem.p)
    return S, model.D.T @ (model.w * phi_p(Du, model.problem.p))


def gradient(model: EnergyModel, u: np.ndarray) -> np.ndarray:
    pr = model.problem
    S, v = _pairing(model, u)
    k = (pr.beta + pr.kirchhoff_rho * S) ** (pr.p - 1)
    return k * v - model.lam_w * pr.nonlinearity.grad(u, model.interior)


def hessian(model: EnergyModel, u: np.ndarray, floor: float = 1e-300) -> np.ndarray:
    """Hessian of the discrete energy (``|Du|^(p-2)`` floored where ``Du == 0`` and ``p < 2``)."""
    pr = model.problem
    p, beta, rho = pr.p, pr.beta, pr.kirchhoff_rho
    Du = model.D @ u
    S = float(model.w @ np.abs(Du) ** p)
    v = model.D.T @ (model.w * phi_p(Du, p))
    base = beta + rho * S
    diag = (p - 1) * model.w * np.maximum(np.abs(Du), floor) ** (p - 2) if p < 2 else (p - 1) * model.w * np.abs(Du) ** (p - 2)
    h = base ** (p - 1) * (model.D.T @ (diag[:, None] * model.D))
    h += rho * p * (p - 1) * base ** (p - 2) * np.outer(v, v)
    curv = pr.nonlinearity.curvature(u, model.interior)
    h -= np.diag(model.lam_w * np.where(np.isfinite(curv), curv, 0.0))
    return h


def pairing_identity(model: EnergyModel, u: np.ndarray) -> float:
    """``<E'(u), u>`` evaluated from the seminorm and the nonlinearity directly."""
    pr = model.problem
    S = model.S(u)
    return (pr.beta + pr.kirchhoff_rho * S) ** (pr.p - 1) * S - float(
        model.lam_w @ (pr.nonlinearity.grad(u, model.interior) * u)
    )


def fd_gradient_check(model: EnergyModel, u: np.ndarray, epsilon: float = 1e-6) -> float:
    """Largest central-difference error relative to ``max |gradient|``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    u = np.asarray(u, dtype=float)
    step = epsilon * max(1.0, float(np.max(np.abs(u), initial=0.0)))
    g = gradient(model, u)
    fd = np.empty_like(u)
    for i in range(len(u)):
        e = np.zeros_like(u)
        e[i] = step
        fd[i] = (energy(model, u + e) - energy(model, u - e)) / (2 * step)
    err = float(np.max(np.abs(fd - g)))
    scale = float(np.max(np.abs(g)))
    if err == 0:
        return 0.0
    return err / max(scale, np.finfo(float).tiny)


def weak_residual(model: EnergyModel, u: np.ndarray) -> float:
    """``max_i |<E'(u), e_i>| / ||e_i||`` over interior coordinate directions."""
    g = gradient(model, u)
    p = model.problem.p
    col_norms = (model.w @ np.abs(model.D) ** p) ** (1 / p)
    return float(np.max(np.abs(g) / col_norms))


# --------------------------------------------------------------------------
# searches


@dataclass
class SolverConfig:
    tol_grad: float = 1e-6
    max_iter: int = 5000
    c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    path_points: int = 21
    max_doublings: int = 60
    triviality: float = 1e-3
    newton_polish: bool = True
    polish_switch: float = 1e-3
    dedup_tol: float = 1e-3
    workers: int = 1


@dataclass
class SolverResult:
    u: GridFunction
    interior: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    status: str
    classification: str
    method: str = ""
    pair: int | None = None
    sign: int = 1

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def classify_result(energy_value: float, u: np.ndarray, threshold: float) -> str:
    if float(np.max(np.abs(u), initial=0.0)) <= threshold:
        return "trivial"
    if energy_value > 0:
        return "mountain-pass"
    if energy_value < 0:
        return "minimizer"
    return "trivial"


def _result(model, u, iterations, status, cfg, method) -> SolverResult:
    e = energy(model, u)
    g = gradient(model, u)
    return SolverResult(
        u=model.embed(u),
        interior=u.copy(),
        energy=e,
        grad_norm=float(np.linalg.norm(g)),
        iterations=iterations,
        status=status,
        classification=classify_result(e, u, cfg.triviality),
        method=method,
    )


class _Preconditioner:
    """Riesz map of the p = 2 seminorm, factorized once per model."""

    def __init__(self, model: EnergyModel):
        gram = model.gram()
        gram += 1e-14 * np.trace(gram) / len(gram) * np.eye(len(gram))
        self._factor = linalg.cho_factor(gram)
        self.gram = gram

    def __call__(self, g: np.ndarray) -> np.ndarray:
        return linalg.cho_solve(self._factor, g)

    def norm(self, v: np.ndarray) -> float:
        return math.sqrt(max(float(v @ self.gram @ v), 0.0))


_PRECONDITIONERS: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()
_CACHE_LOCK = threading.Lock()


def _preconditioner(model: EnergyModel) -> _Preconditioner:
    with _CACHE_LOCK:
        pre = _PRECONDITIONERS.get(model)
        if pre is None:
            pre = _PRECONDITIONERS[model] = _Preconditioner(model)
        return pre


def _armijo(model, u, e0, g, d, step, cfg) -> tuple[np.ndarray, float, float]:
    slope = float(g @ d)
    if not slope < 0:
        raise LineSearchFailure("search direction is not a descent direction")
    for _ in range(cfg.max_backtracks):
        trial = u + step * d
        with np.errstate(over="ignore", invalid="ignore"):
            e1 = energy(model, trial)
        if np.isfinite(e1) and e1 <= e0 + cfg.c1 * step * slope:
            return trial, e1, step
        step *= cfg.backtrack
    raise LineSearchFailure(f"Armijo backtracking failed after {cfg.max_backtracks} reductions")


def _newton_polish(model, u, cfg, max_steps: int = 50) -> np.ndarray | None:
    """Newton iteration on the gradient with backtracking on ``|grad|``.

    Returns ``None`` if it does not reach ``tol_grad``.
    """
    g = gradient(model, u)
    gn = float(np.linalg.norm(g))
    for _ in range(max_steps):
        if gn <= cfg.tol_grad:
            return u
        try:
            d = -np.linalg.solve(hessian(model, u), g)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(d)):
            return None
        step = 1.0
        for _ in range(cfg.max_backtracks):
            trial = u + step * d
            with np.errstate(over="ignore", invalid="ignore"):
                g1 = gradient(model, trial)
            g1n = float(np.linalg.norm(g1))
            if np.isfinite(g1n) and g1n <= (1 - cfg.c1 * step) * gn:
                break
            step *= cfg.backtrack
        else:
            return None
        u, g, gn = trial, g1, g1n
    return u if gn <= cfg.tol_grad else None


def minimize(model: EnergyModel, u0: np.ndarray, cfg: SolverConfig | None = None) -> SolverResult:
    """Steepest descent in the seminorm metric with Armijo backtracking.

    The initial trial step of each iteration is a Barzilai-Borwein estimate.
    Once the gradient is below ``polish_switch`` a Newton polish is attempted
    and accepted only if it lowers the energy.
    """
    cfg = cfg or SolverConfig()
    pre = _preconditioner(model)
    u = np.array(u0, dtype=float)
    e = energy(model, u)
    g = gradient(model, u)
    best = (e, u)
    step, prev = 1.0, None
    for it in range(cfg.max_iter):
        gn = float(np.linalg.norm(g))
        if gn <= cfg.tol_grad:
            return _result(model, u, it, "converged", cfg, "minimize")
        if cfg.newton_polish and gn <= cfg.polish_switch:
            polished = _newton_polish(model, u, cfg)
            if polished is not None and energy(model, polished) <= e + 1e-12 * max(1.0, abs(e)):
                return _result(model, polished, it + 1, "converged", cfg, "minimize")
        d = -pre(g)
        if prev is not None:
            s, y = u - prev[0], g - prev[1]
            sy = float(s @ y)
            if sy > 0:
                step = float(s @ pre.gram @ s) / sy
        prev = (u, g)
        u, e, step = _armijo(model, u, e, g, d, step, cfg)
        g = gradient(model, u)
        if e < best[0]:
            best = (e, u)
    u = best[1]
    status = "converged" if np.linalg.norm(gradient(model, u)) <= cfg.tol_grad else "max-iter"
    return _result(model, u, cfg.max_iter, status, cfg, "minimize")


def default_direction(model: EnergyModel) -> np.ndarray:
    """Sine bump over ``[a, b]`` at interior nodes, scaled to unit seminorm."""
    mesh = model.mesh
    t = mesh.nodes[model.interior]
    v = np.sin(np.pi * (t - mesh.a) / (mesh.b - mesh.a))
    return v / model.seminorm(v)


def find_endpoint(model: EnergyModel, direction: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    """Double ``xi`` along ``xi * direction`` until the energy is nonpositive."""
    xi = 1.0
    for _ in range(cfg.max_doublings):
        e = xi * direction
        if energy(model, e) <= 0:
            return e
        xi *= 2
    raise EndpointNotFound(
        f"energy stayed positive along the ray up to xi = {xi / 2:g}; the nonlinearity does not look superlinear"
    )


def _respace_polyline(path: list[np.ndarray], norm) -> list[np.ndarray]:
    seg = np.array([norm(path[i + 1] - path[i]) for i in range(len(path) - 1)])
    arc = np.concatenate(([0.0], np.cumsum(seg)))
    if len(path) < 3 or arc[-1] == 0:
        return list(path)
    out = [path[0]]
    for s in np.linspace(0.0, arc[-1], len(path))[1:-1]:
        k = min(int(np.searchsorted(arc, s, side="right")) - 1, len(seg) - 1)
        lam = 0.0 if seg[k] == 0 else (s - arc[k]) / seg[k]
        out.append((1 - lam) * path[k] + lam * path[k + 1])
    out.append(path[-1])
    return out


def _respace(path: list[np.ndarray], norm, pinned: int) -> list[np.ndarray]:
    """Equalize arc length on each side of ``path[pinned]``, which stays put."""
    left = _respace_polyline(path[: pinned + 1], norm)
    right = _respace_polyline(path[pinned:], norm)
    return left + right[1:]


_STALL_WINDOW = 25


def mountain_pass(
    model: EnergyModel,
    cfg: SolverConfig | None = None,
    direction: np.ndarray | None = None,
) -> SolverResult:
    """Discretized mountain-pass search between 0 and a low-energy endpoint.

    The path maximum is pushed along the preconditioned negative gradient with
    Armijo steps and the path is re-spaced by seminorm arc length after every
    deformation.  Once the path-maximum gradient falls below ``polish_switch``
    a Newton polish is attempted; it is kept only if it stays nontrivial at
    positive energy.
    """
    cfg = cfg or SolverConfig()
    if direction is None:
        direction = default_direction(model)
    else:
        direction = np.asarray(direction, dtype=float)
        direction = direction / model.seminorm(direction)
    endpoint = find_endpoint(model, direction, cfg)
    pre = _preconditioner(model)
    m = max(cfg.path_points, 3)
    path = [s * endpoint for s in np.linspace(0.0, 1.0, m)]
    energies = np.array([energy(model, v) for v in path])
    steps = np.ones(m)
    switch = cfg.polish_switch
    best, stalled = np.inf, 0
    for it in range(cfg.max_iter):
        k = 1 + int(np.argmax(energies[1:-1]))
        u = path[k]
        g = gradient(model, u)
        gn = float(np.linalg.norm(g))
        if gn <= cfg.tol_grad:
            return _result(model, u, it, "converged", cfg, "mountain-pass")
        if energies[k] < best - 1e-9 * abs(best):
            best, stalled = energies[k], 0
        else:
            stalled += 1
        if cfg.newton_polish and (gn <= switch or stalled >= _STALL_WINDOW):
            polished = _newton_polish(model, u, cfg)
            if polished is not None and energy(model, polished) > 0 and np.max(np.abs(polished)) > cfg.triviality:
                return _result(model, polished, it + 1, "converged", cfg, "mountain-pass")
            if gn <= switch:
                switch *= 0.1
            stalled = 0
        d = -pre(g)
        # keep the deformed point within half a path spacing so the path stays connected
        spacing = min(pre.norm(path[k] - path[k - 1]), pre.norm(path[k + 1] - path[k]))
        cap = 0.5 * spacing / max(pre.norm(d), np.finfo(float).tiny)
        new, _, used = _armijo(model, u, energies[k], g, d, min(2 * steps[k], cap), cfg)
        steps[k] = used
        path[k] = new
        path = _respace(path, pre.norm, k)
        energies = np.array([energy(model, v) for v in path])
        steps = np.full(m, float(np.median(steps)))
    k = 1 + int(np.argmax(energies[1:-1]))
    return _result(model, path[k], cfg.max_iter, "max-iter", cfg, "mountain-pass")


def random_start(model: EnergyModel, rng: np.random.Generator) -> np.ndarray:
    """Uniform noise on ``[-1, 1]``, one three-point averaging pass, unit seminorm."""
    v = rng.uniform(-1.0, 1.0, model.dim)
    padded = np.concatenate(([0.0], v, [0.0]))
    v = (padded[:-2] + padded[1:-1] + padded[2:]) / 3
    s = model.seminorm(v)
    return v / s if s > 0 else v


def _sign_normalize(u: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(u)))
    return -u if u[k] < 0 else u


def multistart(
    model: EnergyModel,
    k: int,
    seed: int = 0,
    cfg: SolverConfig | None = None,
) -> list[SolverResult]:
    """Seeded multistart search reporting nontrivial solutions as symmetric pairs.

    Returns ``[u1, -u1, u2, -u2, ...]``; both members of a pair share
    :attr:`SolverResult.pair` and differ in :attr:`SolverResult.sign`.
    Failed starts are logged and skipped.
    """
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(seed)
    starts = [random_start(model, rng) for _ in range(k)]
    superlinear = isinstance(model.problem.nonlinearity, Power)

    def run(start):
        try:
            if superlinear:
                return mountain_pass(model, cfg, direction=start)
            return minimize(model, start, cfg)
        except SolverError as exc:
            log.warning("multistart: start failed: %s", exc)
            return None

    _preconditioner(model)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            outcomes = list(pool.map(run, starts))
    else:
        outcomes = [run(s) for s in starts]

    kept: list[np.ndarray] = []
    out: list[SolverResult] = []
    for res in outcomes:
        if res is None or not res.converged or res.classification == "trivial":
            continue
        u = _sign_normalize(res.interior)
        if any(np.max(np.abs(u - v)) <= cfg.dedup_tol for v in kept):
            continue
        mirror = _result(model, -u, 0, "converged", cfg, res.method)
        if mirror.grad_norm > cfg.tol_grad:
            mirror.status = "max-iter"
            log.warning("multistart: mirror of a solution failed the gradient tolerance")
            continue
        pair = len(kept)
        kept.append(u)
        primary = _result(model, u, res.iterations, "converged", cfg, res.method)
        primary.pair, mirror.pair = pair, pair
        mirror.sign = -1
        out.extend([primary, mirror])
    return out


def with_overrides(cfg: SolverConfig, **kw) -> SolverConfig:
    return dataclasses.replace(cfg, **kw)
