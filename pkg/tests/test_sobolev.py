import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsfrac.delta import GridFunction
from tsfrac.errors import DomainError
from tsfrac.fractional import frac_integral, operator_matrix
from tsfrac.sobolev import (
    SobolevParams,
    embedding_bounds,
    equivalent_norm,
    holder_modulus,
    sobolev_norm,
    verify_embeddings,
)
from tsfrac.timescale import build_mesh, preset
from tsfrac.verification import random_mesh


def test_params_validation():
    with pytest.raises(DomainError):
        SobolevParams(1.5, 2.0)
    with pytest.raises(DomainError):
        SobolevParams(0.5, 1.0)
    assert SobolevParams(0.8, 2.0).embeds_in_continuous
    assert not SobolevParams(0.5, 2.0).embeds_in_continuous


def test_norm_examples():
    m = build_mesh(preset("integer-4"), 1.0)
    assert sobolev_norm(GridFunction.constant(m, 0.0), SobolevParams(0.7, 2.0)) == (0.0, 0.0)
    full, semi = sobolev_norm(GridFunction(m, [0.0, 1.0, 1.0, 0.0]), SobolevParams(1.0, 2.0))
    assert math.isclose(semi, math.sqrt(2), rel_tol=1e-15)
    assert full >= semi


def test_seminorm_of_image_of_one():
    errs = []
    for k in (128, 512, 2048):
        m = build_mesh(preset("unit-interval"), 1 / k)
        u = frac_integral(GridFunction.constant(m, 1.0), 0.5)
        errs.append(abs(sobolev_norm(u, SobolevParams(0.5, 2.0))[1] - 1.0))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 0.05


def test_equivalent_norm():
    p8 = SobolevParams(0.8, 2.0)
    m = build_mesh(preset("unit-interval"), 1 / 64)
    assert equivalent_norm(GridFunction.constant(m, 0.0), p8) == 0.0
    # u(a) = 0: the trace at the first successor is an empty left-point sum
    u = GridFunction.sample(m, lambda t: np.sin(np.pi * t))
    assert equivalent_norm(u, p8) == sobolev_norm(u, p8)[1]
    v = GridFunction.sample(m, np.cos)
    trace = frac_integral(v, 0.2).values[1]
    assert trace > 0
    assert math.isclose(equivalent_norm(v, p8), math.hypot(trace, sobolev_norm(v, p8)[1]), rel_tol=1e-14)
    assert equivalent_norm(v, SobolevParams(1.0, 2.0)) == sobolev_norm(v, SobolevParams(1.0, 2.0))[1]


def test_embedding_constants():
    c = embedding_bounds(SobolevParams(0.5, 2.0), 0.0, 1.0)
    assert math.isclose(c.c_lp, 1 / math.gamma(1.5), rel_tol=1e-15)
    assert abs(c.c_lp - 1.1283792) < 1e-7
    assert c.c_sup is None
    c = embedding_bounds(SobolevParams(0.8, 2.0), 0.0, 1.0)
    assert math.isclose(c.c_sup, 1 / (math.gamma(0.8) * math.sqrt(0.6)), rel_tol=1e-15)
    assert abs(c.c_sup - 1.10889) < 1e-5
    assert math.isclose(c.c_lp, 1 / math.gamma(1.8), rel_tol=1e-15)
    assert embedding_bounds(SobolevParams(1.0, 3.0), 0.0, 1.0).c_lp == 1.0
    with pytest.raises(DomainError):
        embedding_bounds(SobolevParams(0.5, 2.0), 0.0, 1.0, require_sup=True)
    shifted = embedding_bounds(SobolevParams(0.8, 2.0), 1.0, 3.0)
    assert shifted.c_lp_shifted == 2.0**0.8 / math.gamma(1.8)
    assert shifted.c_lp == 3.0**0.8 / math.gamma(1.8)


def test_holder_modulus():
    p8 = SobolevParams(0.8, 2.0)
    assert holder_modulus(p8, 0.0) == 0.0
    assert math.isclose(holder_modulus(p8, 1.0), 2 / (math.gamma(0.8) * math.sqrt(0.6)), rel_tol=1e-15)
    assert abs(holder_modulus(p8, 1.0) - 2.21778) < 2e-5
    with pytest.raises(DomainError):
        holder_modulus(SobolevParams(0.5, 2.0), 1.0)


def test_verify_trivial_and_preconditions():
    m = build_mesh(preset("unit-interval"), 0.1)
    rep = verify_embeddings(GridFunction.constant(m, 0.0), SobolevParams(0.8, 2.0))
    assert rep.passed and rep.slack == 0.0
    with pytest.raises(DomainError):
        verify_embeddings(GridFunction.constant(m, 0.0), SobolevParams(0.5, 2.0))
    with pytest.raises(ValueError):
        verify_embeddings(GridFunction.constant(m, 1.0), SobolevParams(0.8, 2.0))


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.6, 0.8, 1.0]))
def test_embeddings_image_space_random_meshes(seed, alpha):
    rng = np.random.default_rng(seed)
    m = random_mesh(rng)
    phi = GridFunction(m, rng.normal(size=m.n))
    u = frac_integral(phi, alpha)
    rep = verify_embeddings(u, SobolevParams(alpha, 2.0), density=phi)
    assert rep.passed, [(c.name, c.lhs, c.rhs) for c in rep.checks]


def test_embeddings_discrete_seminorm_unit_interval():
    """With the seminorm taken from the discrete derivative, the bounds hold on [0, 1]."""
    rng = np.random.default_rng(8)
    m = build_mesh(preset("unit-interval"), 1 / 64)
    for _ in range(500):
        u = frac_integral(GridFunction(m, rng.normal(size=m.n)), 0.8)
        assert verify_embeddings(u, SobolevParams(0.8, 2.0)).passed


def test_seminorm_zero_implies_zero_off_the_last_cell():
    """On the image space, ``D^alpha u = 0`` forces ``u = 0`` except through the final cell of ``phi``."""
    for name, h in (("unit-interval", 1 / 32), ("integer-4", 1.0), ("mixed", 0.25)):
        m = build_mesh(preset(name), h)
        for alpha in (0.6, 0.8, 1.0):
            L = operator_matrix(m, alpha).matrix
            D = operator_matrix(m, alpha, "rl-derivative-left").matrix
            # densities with no weight on the last cell (the final node never acts as a left value)
            basis = np.eye(m.n)[:, : m.n - 2]
            _, s, vt = np.linalg.svd(D @ L @ basis)
            null = vt[s <= 1e-10 * s.max()]
            for phi in null:
                assert np.max(np.abs(L @ basis @ phi)) <= 1e-10


def test_seminorm_blind_to_value_at_b():
    """The discrete derivative never reads u(b) for alpha < 1: a spike at b has zero seminorm."""
    m = build_mesh(preset("mixed"), 0.25)
    spike = np.zeros(m.n)
    spike[-1] = 1.0
    _, semi = sobolev_norm(GridFunction(m, spike), SobolevParams(0.8, 2.0))
    assert semi == 0.0


@given(st.integers(0, 2**32 - 1))
def test_full_norm_dominates(seed):
    rng = np.random.default_rng(seed)
    m = random_mesh(rng)
    full, semi = sobolev_norm(GridFunction(m, rng.normal(size=m.n)), SobolevParams(rng.uniform(0.1, 1.0), rng.uniform(1.1, 4)))
    assert full >= semi
