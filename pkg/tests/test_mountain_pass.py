import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracnehari import (
    Branch,
    DegenerateSecondSolutionError,
    InconsistentStateError,
    build_endpoint,
    cone_project,
    deform,
    refine_to_critical,
)
from fracnehari.mountain_pass import (
    CONE_SLACK,
    _sampled_level,
    _sphere_minimum,
    in_cone,
    initial_path,
    mode1_pair,
    solve_second,
)
from fracnehari.model import energy, second_derivative
from fracnehari.spectral import pair_norm


@pytest.fixture(scope="module")
def w_bar(first, params):
    return build_endpoint(first.field, params)


@pytest.fixture(scope="module")
def deformed(first, params, w_bar):
    path = initial_path(first.field, w_bar, params, 41)
    return path, deform(path, params, max_steps=2000, tol=1e-4)


def test_endpoint_properties(first, params, w_bar):
    basis = params.basis
    target = min(0.0, first.energy) - 1.0
    assert energy(first.field + w_bar, params) < target < 0
    assert np.all(basis.synthesize(w_bar) >= 0)
    s = w_bar[0, 0] * math.sqrt(2 * basis.sigma[0])
    assert np.allclose(w_bar, s * mode1_pair(basis), rtol=1e-14)
    # the power of two just below the returned scale does not qualify
    s_prev = 2.0 ** (math.ceil(math.log2(s)) - 1)
    assert s_prev < s
    assert energy(first.field + s_prev * mode1_pair(basis), params) >= target


def test_cone_project_identity_inside(first, params, w_bar):
    z = first.field + 0.3 * w_bar
    assert np.max(np.abs(cone_project(z, first.field, params.basis) - z)) < 1e-10


def test_cone_project_of_zero_is_base(first, params):
    out = cone_project(np.zeros_like(first.field), first.field, params.basis)
    assert np.max(np.abs(out - first.field)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 2.0))
def test_cone_project_lands_in_cone_and_is_idempotent(first, params, seed, scale):
    basis = params.basis
    rng = np.random.default_rng(seed)
    z = first.field + scale * rng.standard_normal(first.field.shape) / np.arange(1, basis.K + 1)
    once = cone_project(z, first.field, basis)
    assert in_cone(once, first.field, basis, CONE_SLACK)
    twice = cone_project(once, first.field, basis)
    assert np.max(np.abs(twice - once)) < 1e-10


def test_deform_invariants(first, params, deformed):
    basis = params.basis
    path, out = deformed
    assert np.array_equal(out.nodes[0], path.nodes[0])
    assert np.array_equal(out.nodes[-1], path.nodes[-1])
    assert np.array_equal(out.nodes[0], first.field)
    assert all(in_cone(n, first.field, basis) for n in out.nodes)
    h = np.asarray(out.history)
    assert np.all(np.diff(h) <= 0)
    assert np.all(h >= first.energy)
    assert first.energy < out.level < first.energy + math.pi / 2 - 1e-3
    assert out.steps > 0
    assert out.diagnostics["stop_reason"] in ("tolerance", "blocked")
    _, peak = out.peak()
    assert pair_norm(peak, basis) > 0 and out.projected_grad < 1e-2


def test_path_level_matches_critical_value(deformed, second):
    # every path in the cone crosses the ridge through the saddle
    _, out = deformed
    assert out.level >= second.energy - 1e-8
    assert out.level - second.energy < 1e-4


def test_deform_does_not_modify_input(deformed):
    path, out = deformed
    assert out is not path and len(path.history) == 1


def test_constant_path_keeps_level_above_base(first, params, w_bar):
    path = initial_path(first.field, w_bar, params, 11)
    path.nodes[1:-1] = first.field
    path.energies, path.mid_energies, path.mid_positions = _sampled_level(path.nodes, params)
    out = deform(path, params, max_steps=50)
    assert out.level >= first.energy
    assert 0 < out.argmax_index < len(out.nodes) - 1


def test_path_from_a_saddle_is_inconsistent(second, params):
    w_bar = build_endpoint(second.field, params)
    path = initial_path(second.field, w_bar, params, 21)
    with pytest.raises(InconsistentStateError):
        deform(path, params, max_steps=50)


def test_refine_gives_dominating_saddle(first, second, params, deformed):
    _, out = deformed
    rec = refine_to_critical(out, params, first.field)
    assert rec.branch is Branch.MOUNTAIN_PASS
    assert rec.grad_norm < 1e-6
    assert abs(rec.nehari_res) < 1e-6 * (1 + rec.norm_sq)
    assert rec.second_deriv < 0 and second_derivative(rec.field, params) < 0
    assert rec.diagnostics["dominates"]
    assert pair_norm(rec.field - first.field, params.basis) > 1e-2
    assert first.energy < rec.energy < first.energy + math.pi / 2
    assert np.allclose(rec.field, second.field, atol=1e-8)


def test_refine_back_onto_base_is_degenerate(first, params, w_bar):
    path = initial_path(first.field, w_bar, params, 11)
    path.nodes[1:-1] = first.field
    path.energies, path.mid_energies, path.mid_positions = _sampled_level(path.nodes, params)
    # hide the segment samples so the highest point is an interior copy of the base
    path.mid_energies[:] = -np.inf
    assert np.array_equal(path.peak()[1], first.field)
    with pytest.raises(DegenerateSecondSolutionError):
        refine_to_critical(path, params, first.field)


def test_sphere_minimum_stays_on_sphere(first, params, w_bar):
    basis = params.basis
    r = 1e-2
    z, Ez = _sphere_minimum(params, first.field, w_bar, r, n_iter=20)
    assert pair_norm(z - first.field, basis) == pytest.approx(r, rel=1e-12)
    assert in_cone(z, first.field, basis)
    start = first.field + r * w_bar / pair_norm(w_bar, basis)
    assert Ez <= energy(start, params)


def test_solve_second_diagnostics(second, first, two_solutions):
    d = second.diagnostics
    assert d["w_bar_scale"] > 0
    assert d["path_level"] == pytest.approx(two_solutions.level)
    assert d["min_trace_gap"] >= -1e-8
    assert d["level_offset"] > 0


def test_solve_second_rejects_unconverged_base(first, params):
    from fracnehari import ConfigurationError
    from dataclasses import replace

    with pytest.raises(ConfigurationError):
        solve_second(replace(first, converged=False), params)
