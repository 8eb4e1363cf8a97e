import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kirchhoff_nehari import EnergyContext, SolveConfig, build_mesh, builtin_log_power, builtin_pure_power
from kirchhoff_nehari.energy import phi, phi_grad
from kirchhoff_nehari.errors import InvalidConfigurationError
from kirchhoff_nehari.mesh import h1_inner, h1_norm
from kirchhoff_nehari.nehari import project_to_nehari
from kirchhoff_nehari.solver import (
    IterationTrace, initial_field, multistart_pairs, ps_diagnostic, psi, psi_tangent_grad, retract,
    solve_ground_state, start_seeds,
)

# 1D, L=1, n=127, a=b=1, fd_eigenfield start; cross-checked against the Newton oracle
LOG_ENERGY_N127 = 9.9223115840614674e107
LOG_TU_N127 = 5.6240313184615513e27
LOG_MAX_N127 = 2.6275625591512893e27
POW6_ENERGY_N127 = 10162.001031172771
POW6_MAX_N127 = 8.85988019855142


def tangent(mesh, u, seed):
    v = initial_field(mesh, "random_seeded", seed)
    return v - h1_inner(mesh, v, u) * u


@pytest.mark.parametrize("kw", [dict(max_iterations=-1), dict(tol_grad=0), dict(backtrack=1.0),
                                dict(k=0), dict(init="gaussian"), dict(seed=-1), dict(seed=2**64)])
def test_config_validation(kw):
    with pytest.raises(InvalidConfigurationError):
        SolveConfig(**kw)


def test_initializers(mesh63):
    for choice in ("fd_eigenfield", "interior_bump"):
        u = initial_field(mesh63, choice)
        assert h1_norm(mesh63, u) == pytest.approx(1.0, abs=1e-14)
        assert np.all(u > 0)
        np.testing.assert_allclose(u, u[::-1], rtol=0, atol=1e-15)
    a = initial_field(mesh63, "random_seeded", 7)
    assert np.array_equal(a, initial_field(mesh63, "random_seeded", 7))
    assert not np.array_equal(a, initial_field(mesh63, "random_seeded", 8))
    with pytest.raises(InvalidConfigurationError):
        initial_field(mesh63, "random_seeded")


def test_psi_definition_and_evenness(ctx_log63, mesh63):
    for seed in range(5):
        u = initial_field(mesh63, "random_seeded", seed)
        t = project_to_nehari(ctx_log63, u).t_u
        assert psi(ctx_log63, u) == pytest.approx(phi(ctx_log63, t * u), rel=1e-12)
        assert psi(ctx_log63, -u) == pytest.approx(psi(ctx_log63, u), rel=1e-10)


def test_psi_warns_off_sphere(ctx_log63, mesh63):
    u = initial_field(mesh63, "fd_eigenfield")
    with pytest.warns(RuntimeWarning, match="unit sphere"):
        val = psi(ctx_log63, 2.0 * u)
    assert val == pytest.approx(psi(ctx_log63, u), rel=1e-12)


def test_psi_positive_floor(ctx_log63, ctx_pow63, mesh63):
    for ctx in (ctx_log63, ctx_pow63):
        vals = [psi(ctx, initial_field(mesh63, "random_seeded", s)) for s in range(30)]
        assert min(vals) > 0


@pytest.mark.parametrize("which", ["log", "pow"])
def test_tangent_gradient(which, ctx_log63, ctx_pow63, mesh63):
    ctx = ctx_log63 if which == "log" else ctx_pow63
    for seed in range(4):
        u = initial_field(mesh63, "random_seeded", 100 + seed)
        g = psi_tangent_grad(ctx, u)
        assert abs(h1_inner(mesh63, g, u)) <= 1e-12 * h1_norm(mesh63, g)
        v = tangent(mesh63, u, 200 + seed)
        eps = 1e-5
        fd = (psi(ctx, retract(mesh63, u, eps * v)) - psi(ctx, retract(mesh63, u, -eps * v))) / (2 * eps)
        assert fd == pytest.approx(h1_inner(mesh63, g, v), rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), step=st.floats(1e-6, 10.0))
def test_retraction_feasible(seed, step):
    mesh = build_mesh(1, 1.0, 31)
    u = initial_field(mesh, "random_seeded", seed)
    w = retract(mesh, u, step * tangent(mesh, u, seed + 1))
    assert abs(h1_norm(mesh, w) - 1.0) <= 1e-12


def test_ground_state_regression(ground_log, ctx_log):
    r = ground_log
    assert r.converged
    assert r.energy == pytest.approx(LOG_ENERGY_N127, rel=1e-10)
    assert r.t_u == pytest.approx(LOG_TU_N127, rel=1e-8)
    assert np.max(np.abs(r.field)) == pytest.approx(LOG_MAX_N127, rel=1e-8)
    assert r.grad_norm <= 1e-8
    assert r.nehari_residual <= 1e-8
    assert r.pde_residual <= 1e-6
    assert np.all(r.field > 0)


def test_pure_power_regression(mesh127):
    ctx = EnergyContext(mesh127, builtin_pure_power(6), 1.0, 1.0)
    r = solve_ground_state(ctx)
    assert r.converged
    assert r.energy == pytest.approx(POW6_ENERGY_N127, rel=1e-10)
    assert np.max(np.abs(r.field)) == pytest.approx(POW6_MAX_N127, rel=1e-8)


def test_trace_monotone(ground_log):
    e = np.array(ground_log.trace.energy)
    sigma = ground_log.t_u**2 + ground_log.t_u**4
    assert np.all(np.diff(e) <= 1e-14 * sigma)
    assert len(ground_log.trace) == ground_log.iterations + 1


def test_stationarity_transfer(ground_log, ctx_log):
    v = ground_log.field
    s = h1_inner(ctx_log.mesh, v, v)
    rel = h1_norm(ctx_log.mesh, phi_grad(ctx_log, v)) / ((1.0 + s) * h1_norm(ctx_log.mesh, v))
    assert rel <= 1e-8 * (1 + 1 / ground_log.t_u)


def test_psi_equals_phi_at_optimum(ground_log, ctx_log):
    assert psi(ctx_log, ground_log.sphere_point) == phi(ctx_log, ground_log.field)


def test_zero_budget(ctx_log63):
    r = solve_ground_state(ctx_log63, SolveConfig(max_iterations=0))
    assert r.status == "max_iter" and len(r.trace) == 1 and not r.converged


def test_interior_bump_reaches_same_state(ctx_log63):
    a = solve_ground_state(ctx_log63, SolveConfig(init="fd_eigenfield"))
    b = solve_ground_state(ctx_log63, SolveConfig(init="interior_bump"))
    assert b.converged
    assert b.energy == pytest.approx(a.energy, rel=1e-10)


def test_mesh_refinement_differences_shrink():
    energies = []
    for n in (31, 63, 127):
        ctx = EnergyContext(build_mesh(1, 1.0, n), builtin_log_power(), 1.0, 1.0)
        energies.append(solve_ground_state(ctx).energy)
    d = np.abs(np.diff(energies))
    assert d[0] / d[1] >= 3


def test_trace_csv_round_trip(ground_log):
    text = ground_log.trace.to_csv()
    assert text.splitlines()[0] == "iter,energy,grad_norm,t_u,step"
    back = IterationTrace.from_csv(text)
    assert back == ground_log.trace


def test_start_seeds_deterministic():
    assert start_seeds(5, 4) == start_seeds(5, 4)
    assert len(set(start_seeds(5, 8))) == 8
    assert all(0 <= s < 2**64 for s in start_seeds(2**64 - 1, 3))


def test_multistart_single_equals_solve(ctx_log63):
    one = multistart_pairs(ctx_log63, SolveConfig(k=1))
    ref = solve_ground_state(ctx_log63, SolveConfig())
    assert len(one) == 1
    assert one[0].energy == ref.energy
    np.testing.assert_array_equal(one[0].field, ref.field)


def test_multistart_k8(multistart_log, ctx_log):
    res = multistart_log
    assert len(res) >= 1
    energies = [r.energy for r in res]
    assert energies == sorted(energies)
    for r in res:
        assert r.mirror_energy == r.energy == phi(ctx_log, -r.field)
        np.testing.assert_array_equal(r.mirror_field, -r.field)
    assert res[0].energy == pytest.approx(LOG_ENERGY_N127, rel=1e-9)


def test_ps_diagnostic_converged(ground_log):
    rep = ps_diagnostic(ground_log.trace)
    assert rep.bounded and rep.energy_bounded and rep.tail_decreasing and rep.diagnostic_only


def test_ps_diagnostic_edge_cases():
    tr = IterationTrace()
    tr.append(0, 1.0, 0.5, 2.0, 0.0)
    rep = ps_diagnostic(tr)
    assert rep.n_points == 1 and rep.bounded and rep.norm_ratio == 1.0 and rep.cauchy_tail == ()
    div = IterationTrace()
    for k in range(30):
        div.append(k, float(k), 1.0, 2.0**k, 1.0)
    assert not ps_diagnostic(div).bounded
    with pytest.raises(InvalidConfigurationError):
        ps_diagnostic(IterationTrace())
