"""Invariant suites run by ``tsfrac verify``.

Each property returns one or more :class:`Outcome` rows: a measured error, the
bound it is held to, and whether it passed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .delta import (
    GridFunction,
    QuadraturePolicy,
    delta_derivative,
    delta_integral,
    lp_norm,
    quadrature_weights,
    shift_sigma,
)
from .errors import SingularKernelError
from .fractional import KernelPolicy, frac_integral, frac_integral_at, rl_derivative
from .sobolev import SobolevParams, embedding_bounds, holder_modulus
from .solver import BvpProblem, Power, WeightedPower, assemble, energy, fd_gradient_check, gradient
from .timescale import PRESETS, Mesh, build_mesh, build_time_scale, classify, graininess, preset

LEFT = QuadraturePolicy.LEFT_RECTANGLE
PRESET_H = {"unit-interval": 1 / 64, "integer-4": 1.0, "mixed": 0.25}


@dataclass
class Outcome:
    name: str
    scale: str
    error: float
    bound: float
    passed: bool
    params: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        self.error, self.bound, self.passed = float(self.error), float(self.bound), bool(self.passed)

    def line(self) -> str:
        d = asdict(self)
        for k in ("error", "bound"):
            if not math.isfinite(d[k]):
                d[k] = str(d[k])
        return json.dumps(d, sort_keys=False)


def preset_mesh(name: str, h: float | None = None) -> Mesh:
    return build_mesh(preset(name), PRESET_H[name] if h is None else h)


def random_time_scale(rng: np.random.Generator, max_parts: int = 4):
    """Random union of intervals and points starting at 0."""
    segs, x = [], 0.0
    for _ in range(int(rng.integers(1, max_parts + 1))):
        if rng.random() < 0.5:
            segs.append((x, x))
            x += rng.uniform(0.05, 1.0)
        else:
            length = rng.uniform(0.1, 1.0)
            segs.append((x, x + length))
            x += length + rng.uniform(0.05, 1.0)
    segs.append((x, x))
    return build_time_scale(segs)


def random_mesh(rng: np.random.Generator) -> Mesh:
    kind = rng.integers(3)
    if kind == 0:
        return build_mesh(build_time_scale([(0.0, rng.uniform(0.5, 2.0))]), rng.uniform(0.02, 0.2))
    if kind == 1:
        pts = np.cumsum(rng.uniform(0.1, 1.0, int(rng.integers(3, 12))))
        return build_mesh(build_time_scale([(0.0, 0.0)] + [(t, t) for t in pts]), 1.0)
    return build_mesh(random_time_scale(rng), rng.uniform(0.05, 0.3))


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _ratio_ok(errs: list[float], lo: float, hi: float = math.inf) -> tuple[float, bool]:
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    worst = min(ratios)
    return worst, all(lo <= r <= hi for r in ratios)


# ---------------------------------------------------------------- mesh / delta


def prop_mesh_measure(**_) -> list[Outcome]:
    out = []
    for name in PRESETS:
        m = preset_mesh(name)
        err = _rel(float(m.mu.sum()), m.b - m.a)
        ok_cls = all(
            classify(m.scale, t).right_scattered == (graininess(m.scale, t) > 0) for t in m.nodes
        )
        out.append(Outcome("mesh_measure", name, err, 1e-12, err <= 1e-12 and ok_cls))
    return out


def prop_delta_identities(draws: int = 200, seed: int = 0, **_) -> list[Outcome]:
    rng = np.random.default_rng(seed)
    worst = {"additivity": 0.0, "constant_rule": 0.0, "triangle": 0.0, "holder": 0.0}
    for _ in range(draws):
        m = random_mesh(rng)
        pol = QuadraturePolicy.TRAPEZOID if rng.random() < 0.5 else LEFT
        f = GridFunction(m, rng.normal(size=m.n))
        c = m.nodes[int(rng.integers(m.n))]
        whole = delta_integral(f, policy=pol)
        parts = delta_integral(f, m.a, c, pol) + delta_integral(f, c, m.b, pol)
        scale = delta_integral(abs(f), policy=pol)
        worst["additivity"] = max(worst["additivity"], abs(whole - parts) / max(scale, 1e-300))
        k = rng.normal()
        worst["constant_rule"] = max(worst["constant_rule"], _rel(delta_integral(GridFunction.constant(m, k), policy=pol), k * (m.b - m.a)))
        worst["triangle"] = max(worst["triangle"], (abs(whole) - scale) / max(scale, 1e-300))
        p = rng.uniform(1.05, 5.0)
        q = p / (p - 1)
        g = GridFunction(m, rng.normal(size=m.n))
        lhs = lp_norm(f * g, 1, LEFT)
        rhs = lp_norm(f, p, LEFT) * lp_norm(g, q, LEFT)
        worst["holder"] = max(worst["holder"], (lhs - rhs) / max(rhs, 1e-300))
    return [Outcome(k, "random", v, 1e-12, v <= 1e-12, {"draws": draws}) for k, v in worst.items()]


def prop_delta_ibp(**_) -> list[Outcome]:
    rng = np.random.default_rng(1)
    m = preset_mesh("integer-4")
    worst = 0.0
    for _ in range(100):
        f, g = GridFunction(m, rng.normal(size=m.n)), GridFunction(m, rng.normal(size=m.n))
        lhs = float(LEFT_WEIGHTS(m) @ (shift_sigma(f).values * delta_derivative(g).values))
        rhs = f.values[-1] * g.values[-1] - f.values[0] * g.values[0] - float(
            LEFT_WEIGHTS(m) @ (delta_derivative(f).values * g.values)
        )
        worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
    return [Outcome("delta_ibp", "integer-4", worst, 1e-12, worst <= 1e-12)]


def LEFT_WEIGHTS(m: Mesh) -> np.ndarray:
    return quadrature_weights(m, LEFT)


# ---------------------------------------------------------------- fractional


def prop_closed_form(**_) -> list[Outcome]:
    m = build_mesh(preset("unit-interval"), 1 / 2000)
    v = frac_integral(GridFunction.constant(m, 1.0), 0.5).values
    err = float(np.max(np.abs(v - m.nodes**0.5 / math.gamma(1.5))))
    return [Outcome("closed_form", "unit-interval", err, 1e-12, err <= 1e-12, {"alpha": 0.5, "n": m.n})]


def prop_semigroup(**_) -> list[Outcome]:
    errs = []
    for k in (128, 256, 512):
        m = build_mesh(preset("unit-interval"), 1 / k)
        c = GridFunction.sample(m, np.cos)
        errs.append(float(np.max(np.abs(frac_integral(frac_integral(c, 0.4), 0.3).values - frac_integral(c, 0.7).values))))
    worst, ok = _ratio_ok(errs, 1.6, 2.4)
    return [Outcome("semigroup", "unit-interval", worst, 1.6, ok, {"errors": errs}, "min error ratio per halving")]


def prop_left_inverse(**_) -> list[Outcome]:
    errs = []
    for k in (128, 256, 512):
        m = build_mesh(preset("unit-interval"), 1 / k)
        c = GridFunction.sample(m, np.cos)
        d = rl_derivative(frac_integral(c, 0.5), 0.5)
        sel = m.nodes >= 0.1
        errs.append(float(np.max(np.abs(d.values - c.values)[sel])))
    worst, ok = _ratio_ok(errs, 1.6)
    out = [Outcome("left_inverse", "unit-interval", worst, 1.6, ok, {"errors": errs}, "min error ratio per halving")]
    m = preset_mesh("integer-4")
    rng = np.random.default_rng(2)
    ex = 0.0
    for _ in range(100):
        h = GridFunction(m, rng.normal(size=m.n))
        back = rl_derivative(frac_integral(h, 1.0), 1.0)
        ex = max(ex, float(np.max(np.abs(back.values[:-1] - h.values[:-1]))))
    out.append(Outcome("left_inverse", "integer-4", ex, 1e-12, ex <= 1e-12, {"alpha": 1.0}))
    return out


def prop_right_inverse(**_) -> list[Outcome]:
    errs = []
    for k in (128, 256, 512):
        m = build_mesh(preset("unit-interval"), 1 / k)
        f = frac_integral(GridFunction.sample(m, np.cos), 0.5)
        back = frac_integral(rl_derivative(f, 0.5), 0.5)
        errs.append(float(np.max(np.abs(back.values - f.values))))
    worst, ok = _ratio_ok(errs, 1.2)
    return [Outcome("right_inverse", "unit-interval", worst, 1.2, ok, {"errors": errs}, "min error ratio per halving")]


def prop_ibp_adjoint(draws: int = 100, **_) -> list[Outcome]:
    rng = np.random.default_rng(3)
    out = []
    for name in PRESETS:
        m = preset_mesh(name)
        w = LEFT_WEIGHTS(m)
        worst = 0.0
        for _ in range(draws):
            a = rng.uniform(0.05, 2.0)
            phi, psi = GridFunction(m, rng.normal(size=m.n)), GridFunction(m, rng.normal(size=m.n))
            lhs = float(w @ (phi.values * frac_integral(psi, a).values))
            rhs = float(w @ (psi.values * frac_integral(phi, a, "right").values))
            scale = float(w @ np.abs(phi.values * frac_integral(abs(psi), a).values))
            worst = max(worst, abs(lhs - rhs) / max(scale, 1e-300))
        out.append(Outcome("ibp_adjoint", name, worst, 1e-12, worst <= 1e-12, {"draws": draws}))
    return out


def cauchy_gap(f: GridFunction) -> float:
    """Iterated double Delta-sum versus the single sum with kernel ``t - successor(s)``."""
    m = f.mesh
    inner = np.concatenate(([0.0], np.cumsum(m.mu[:-1] * f.values[:-1])))
    double = np.concatenate(([0.0], np.cumsum(m.mu[:-1] * inner[:-1])))
    succ = m.nodes[1:]
    single = np.array([np.sum(np.where(succ <= t, (t - succ) * f.values[:-1] * m.mu[:-1], 0.0)) for t in m.nodes])
    scale = 1 + np.max(np.abs(double))
    return float(np.max(np.abs(double - single)) / scale)


def prop_cauchy(draws: int = 100, **_) -> list[Outcome]:
    rng = np.random.default_rng(4)
    out = []
    for name in ("integer-4", "mixed"):
        m = preset_mesh(name)
        worst = 0.0
        for _ in range(draws):
            f = GridFunction(m, rng.normal(size=m.n))
            worst = max(worst, cauchy_gap(f))
            if m.purely_scattered:
                lit = frac_integral(f, 2.0, policy=KernelPolicy.LEFT_ENDPOINT).values
                inner = np.concatenate(([0.0], np.cumsum(m.mu[:-1] * f.values[:-1])))
                double = np.concatenate(([0.0], np.cumsum(m.mu[:-1] * inner[:-1])))
                worst = max(worst, float(np.max(np.abs(lit - double)) / (1 + np.max(np.abs(double)))))
        out.append(Outcome("cauchy", name, worst, 1e-12, worst <= 1e-12, {"draws": draws}))
    return out


def prop_boundedness(draws: int = 500, seed: int = 5, **_) -> list[Outcome]:
    """Fractional integral bound on ``[a, t]``; draws restricted to ``alpha * p >= 1``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        m = random_mesh(rng)
        p = rng.uniform(1.0, 4.0)
        a = rng.uniform(max(0.05, 1 / p), 1.0)
        ti = int(rng.integers(1, m.n))
        t = m.nodes[ti]
        phi = GridFunction(m, rng.normal(size=m.n))
        lhs = lp_norm(frac_integral(phi, a), p, LEFT, hi=t)
        rhs = (t - m.a) ** a / math.gamma(a + 1) * lp_norm(phi, p, LEFT, hi=t)
        if rhs > 0:
            worst = max(worst, lhs / rhs - 1)
    return [Outcome("boundedness", "random", worst, 1e-9, worst <= 1e-9, {"draws": draws, "alpha_p": ">= 1"})]


def image_space_checks(phi: GridFunction, params: SobolevParams) -> dict[str, tuple[float, float]]:
    """``(lhs, rhs)`` of the L^p, sup and Hoelder bounds for ``u = I^alpha phi``.

    The seminorm of ``u`` is taken as ``||phi||_p``.
    """
    m = phi.mesh
    u = frac_integral(phi, params.alpha)
    semi = lp_norm(phi, params.p, LEFT)
    c = embedding_bounds(params, m.a, m.b)
    out = {"lp": (lp_norm(u, params.p, LEFT), c.c_lp_shifted * semi)}
    if params.embeds_in_continuous:
        out["sup"] = (float(np.max(np.abs(u.values))), c.c_sup_shifted * semi)
        mod = holder_modulus(params, semi)
        gap = np.abs(m.nodes[:, None] - m.nodes[None, :])
        diff = np.abs(u.values[:, None] - u.values[None, :])
        bound = mod * gap ** (params.alpha - 1 / params.p)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(gap > 0, diff / np.where(bound > 0, bound, np.inf), 0.0)
        i, j = np.unravel_index(np.argmax(r), r.shape)
        out["holder"] = (float(diff[i, j]), float(bound[i, j]))
    return out


def prop_embeddings(draws: int = 100, **_) -> list[Outcome]:
    rng = np.random.default_rng(6)
    out = []
    for name in PRESETS:
        m = preset_mesh(name)
        worst = 0.0
        for alpha in (0.6, 0.8, 1.0):
            params = SobolevParams(alpha, 2.0)
            for _ in range(draws):
                phi = GridFunction(m, rng.normal(size=m.n))
                for lhs, rhs in image_space_checks(phi, params).values():
                    if rhs > 0:
                        worst = max(worst, lhs / rhs - 1)
        out.append(Outcome("embeddings", name, worst, 1e-9, worst <= 1e-9, {"alpha": [0.6, 0.8, 1.0], "p": 2}))
    return out


def prop_literal_kernel(**_) -> list[Outcome]:
    m = preset_mesh("integer-4")
    f = GridFunction.constant(m, 1.0)
    raised = 0
    for t in m.nodes[1:]:
        try:
            frac_integral_at(f, 0.5, t, KernelPolicy.LEFT_ENDPOINT)
        except SingularKernelError:
            raised += 1
    expected = m.n - 1
    return [
        Outcome(
            "literal_kernel",
            "integer-4",
            float(expected - raised),
            0.0,
            raised == expected,
            {"alpha": 0.5, "policy": "left_endpoint"},
            "expected failure: SingularKernelError at every node past the first cell",
        )
    ]


# ---------------------------------------------------------------- solver


def random_problem(rng: np.random.Generator, p: float, alpha: float, superlinear: bool) -> BvpProblem:
    kind = int(rng.integers(3))
    if kind == 0:
        m = build_mesh(preset("unit-interval"), 1 / int(rng.integers(8, 24)))
    elif kind == 1:
        m = build_mesh(build_time_scale([(float(i), float(i)) for i in range(int(rng.integers(4, 10)))]), 1.0)
    else:
        m = build_mesh(preset("mixed"), rng.choice([0.5, 0.25, 0.125]))
    lam = rng.uniform(0.5, 2.0, m.n)
    if superlinear:
        nl = Power(rng.uniform(0.5, 2.0), p * p + rng.uniform(0.5, 3.0))
    else:
        nl = WeightedPower(rng.uniform(0.0, 2.0, m.n) + 0.1, rng.uniform(1.1, p * p - 0.1))
    return BvpProblem(m, alpha, p, rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), lam, nl)


def prop_gradient(draws: int = 100, **_) -> list[Outcome]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(draws):
        p = (2.0, 3.0)[i % 2]
        alpha = (0.7, 0.9)[(i // 2) % 2]
        model = assemble(random_problem(rng, p, alpha, superlinear=(i // 4) % 2 == 0))
        u = rng.uniform(-1, 1, model.dim)
        worst = max(worst, fd_gradient_check(model, u))
    return [Outcome("gradient_fd", "random", worst, 1e-6, worst <= 1e-6, {"draws": draws})]


def prop_evenness(draws: int = 50, **_) -> list[Outcome]:
    rng = np.random.default_rng(8)
    worst = 0.0
    for i in range(draws):
        model = assemble(random_problem(rng, 2.0 + i % 2, 0.8, superlinear=i % 3 == 0))
        u = rng.uniform(-1, 1, model.dim)
        worst = max(worst, _rel(energy(model, u), energy(model, -u)))
        g1, g2 = gradient(model, u), gradient(model, -u)
        worst = max(worst, float(np.max(np.abs(g1 + g2)) / max(np.max(np.abs(g1)), 1e-300)))
    return [Outcome("evenness", "random", worst, 1e-12, worst <= 1e-12, {"draws": draws})]


PROPERTIES: dict[str, Callable[..., list[Outcome]]] = {
    "mesh_measure": prop_mesh_measure,
    "delta_identities": prop_delta_identities,
    "delta_ibp": prop_delta_ibp,
    "closed_form": prop_closed_form,
    "semigroup": prop_semigroup,
    "left_inverse": prop_left_inverse,
    "right_inverse": prop_right_inverse,
    "ibp_adjoint": prop_ibp_adjoint,
    "cauchy": prop_cauchy,
    "boundedness": prop_boundedness,
    "embeddings": prop_embeddings,
    "literal_kernel": prop_literal_kernel,
    "gradient_fd": prop_gradient,
    "evenness": prop_evenness,
}


def run_properties(only: Iterable[str] | None = None) -> list[Outcome]:
    names = list(PROPERTIES) if not only else list(only)
    unknown = [n for n in names if n not in PROPERTIES]
    if unknown:
        raise KeyError(f"unknown property {unknown[0]!r}; choose from {sorted(PROPERTIES)}")
    out: list[Outcome] = []
    for n in names:
        out.extend(PROPERTIES[n]())
    return out
