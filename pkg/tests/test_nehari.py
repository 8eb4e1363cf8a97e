import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kirchhoff_nehari import EnergyContext, build_mesh, builtin_log_power, builtin_pure_power
from kirchhoff_nehari.energy import phi, phi_dir
from kirchhoff_nehari.errors import DegenerateDirectionError, FiberingFailureError
from kirchhoff_nehari.mesh import h1_inner, h1_norm, lp_norm
from kirchhoff_nehari.nehari import (
    TOL_FIBER, fibering_deriv, fibering_monotone_part, nehari_residual, project_to_nehari,
    sphere_inverse,
)
from kirchhoff_nehari.nonlinearity import NonlinearitySpec
from kirchhoff_nehari.oracle import closed_form_tu_check
from kirchhoff_nehari.solver import initial_field

log = logging.getLogger(__name__)


def unit(mesh, seed):
    return initial_field(mesh, "random_seeded", seed)


@pytest.fixture(params=["log", "pow"])
def ctx(request, ctx_log63, ctx_pow63):
    return ctx_log63 if request.param == "log" else ctx_pow63


def test_fibering_deriv_matches_phi_dir(ctx, mesh63):
    for seed in range(5):
        u = 2.0 * unit(mesh63, seed)
        for t in (0.3, 1.0, 4.0):
            ref = phi_dir(ctx, t * u, u)
            assert fibering_deriv(ctx, u, t) == pytest.approx(ref, rel=1e-12, abs=1e-12 * abs(t))


def test_power_fibering_polynomial(ctx_pow63, mesh63):
    u = 1.7 * unit(mesh63, 3)
    s = h1_inner(mesh63, u, u)
    m = lp_norm(mesh63, u, 6) ** 6
    for t in (0.25, 1.0, 3.0):
        direct = s * t + s**2 * t**3 - m * t**5
        scale = s * t + s**2 * t**3 + m * t**5
        assert abs(fibering_deriv(ctx_pow63, u, t) - direct) <= 1e-12 * scale


def test_small_t_positive(ctx, mesh63):
    for seed in range(10):
        assert fibering_deriv(ctx, unit(mesh63, seed), 1e-4) > 0


def test_zero_direction_rejected(ctx, mesh63):
    z = mesh63.zeros()
    for fn in (lambda: fibering_deriv(ctx, z, 1.0), lambda: project_to_nehari(ctx, z),
               lambda: nehari_residual(ctx, z), lambda: sphere_inverse(mesh63, z)):
        with pytest.raises(DegenerateDirectionError):
            fn()


def test_closed_form_power_maximizer(ctx_pow63, mesh63):
    for seed in range(10):
        u = unit(mesh63, seed)
        s = h1_inner(mesh63, u, u)
        m = lp_norm(mesh63, u, 6) ** 6
        t = project_to_nehari(ctx_pow63, u).t_u
        assert t == pytest.approx(closed_form_tu_check(1.0, 1.0, s, m), rel=1e-10)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_ray_homogeneity(ctx, mesh63, c):
    u = unit(mesh63, 11)
    t = project_to_nehari(ctx, u).t_u
    assert project_to_nehari(ctx, c * u).t_u == pytest.approx(t / c, rel=1e-10)


def test_projection_is_fixed_on_nehari_set(ctx, mesh63):
    w = project_to_nehari(ctx, unit(mesh63, 4)).projected
    assert project_to_nehari(ctx, w).t_u == pytest.approx(1.0, abs=1e-8)


def test_result_invariants(ctx, mesh63):
    for seed in range(10):
        u = unit(mesh63, seed)
        r = project_to_nehari(ctx, u)
        lo, hi = r.bracket
        assert lo <= r.t_u <= hi
        assert fibering_deriv(ctx, u, lo) > 0 > fibering_deriv(ctx, u, hi)
        assert r.relative_residual <= TOL_FIBER
        w = r.projected
        scale = ctx.a * h1_inner(mesh63, w, w) + ctx.b * h1_inner(mesh63, w, w) ** 2
        assert abs(nehari_residual(ctx, w)) <= 1e-9 * scale


def test_nehari_residual_signs(ctx, mesh63):
    u = unit(mesh63, 2)
    t = project_to_nehari(ctx, u).t_u
    assert nehari_residual(ctx, 1e-3 * t * u) > 0
    assert nehari_residual(ctx, 10.0 * t * u) < 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sphere_round_trips(seed):
    mesh = build_mesh(1, 1.0, 31)
    ctx = EnergyContext(mesh, builtin_log_power(), 1.0, 1.0)
    u = unit(mesh, seed)
    assert h1_norm(mesh, sphere_inverse(mesh, 5.0 * u)) == pytest.approx(1.0, abs=1e-14)
    w = project_to_nehari(ctx, u).projected
    np.testing.assert_allclose(sphere_inverse(mesh, w), u, rtol=0, atol=1e-10 * np.max(np.abs(u)))
    w2 = project_to_nehari(ctx, sphere_inverse(mesh, w)).projected
    np.testing.assert_allclose(w2, w, rtol=0, atol=1e-8 * np.max(np.abs(w)))


def test_monotone_reformulation_and_maximizer(ctx, mesh63):
    for seed in range(5):
        u = unit(mesh63, seed)
        t_u = project_to_nehari(ctx, u).t_u
        ts = np.geomspace(t_u / 100, 100 * t_u, 50)
        g = np.array([fibering_monotone_part(ctx, u, t) for t in ts])
        assert np.all(np.diff(g) > 0)
        best = phi(ctx, t_u * u)
        assert all(best >= phi(ctx, t * u) for t in ts)


def test_tu_lower_bound(ctx, mesh63):
    ts = [project_to_nehari(ctx, unit(mesh63, s)).t_u for s in range(100)]
    log.info("%s: empirical min t_u over 100 unit fields = %.6g", ctx.nl.name, min(ts))
    assert min(ts) > 0


def test_non_superquartic_nonlinearity_fails(mesh63):
    # f = eps u^3 never overtakes the b|u|^4 t^3 term, so alpha' stays positive
    weak = NonlinearitySpec(f=lambda x, u: 1e-3 * np.asarray(u) ** 3,
                            F=lambda x, u: 2.5e-4 * np.asarray(u) ** 4,
                            fu=lambda x, u: 3e-3 * np.asarray(u) ** 2, p=4.0, odd=True, name="weak")
    ctx = EnergyContext(mesh63, weak, 1.0, 1.0)
    with pytest.raises(FiberingFailureError):
        project_to_nehari(ctx, unit(mesh63, 0))
