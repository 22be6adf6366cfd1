import math

import numpy as np
import pytest

from diffuscope.euclid import (
    FrechetField,
    GridSpec,
    default_grid,
    diffusion_distance_sq,
    evaluate_field,
    frechet_function,
    frechet_gradient,
    frechet_gradients,
    frechet_values,
    gaussian_normalizer,
    gradient_flow,
    heat_kernel,
    load_field_csv,
    load_trajectory,
    local_minima,
    save_field_csv,
    save_trajectory,
)
from diffuscope.measures import EmpiricalMeasure, uniform_empirical
from diffuscope.synthetic import two_cluster_line

from oracles import central_difference_gradient


# -- heat kernel -------------------------------------------------------------

def test_heat_kernel_unit_normalizer():
    # C_1(t) = 1 at t = 1/(4 pi), so the diagonal value is exactly 1
    assert heat_kernel([0.3], [0.3], 1.0 / (4.0 * math.pi)) == pytest.approx(1.0, abs=1e-15)


def test_heat_kernel_diagonal_any_dim():
    for d in (1, 2, 3):
        x = np.zeros(d)
        assert heat_kernel(x, x, 0.7) == pytest.approx(
            1.0 / gaussian_normalizer(d, 0.7), abs=1e-15
        )


def test_heat_kernel_closed_form():
    # exp(-1)/sqrt(pi)
    expected = math.exp(-1.0) / math.sqrt(math.pi)
    assert heat_kernel([0.0], [1.0], 0.25) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.20755374871029735, rel=1e-12)


def test_heat_kernel_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        t = float(rng.uniform(0.05, 5.0))
        assert heat_kernel(x, y, t) == heat_kernel(y, x, t)


def test_heat_kernel_validation():
    with pytest.raises(ValueError):
        heat_kernel([0.0], [0.0, 1.0], 1.0)
    with pytest.raises(ValueError):
        heat_kernel([0.0], [1.0], 0.0)
    with pytest.raises(ValueError):
        heat_kernel([0.0], [1.0], -2.0)


# -- diffusion distance ------------------------------------------------------

def test_diffusion_distance_zero_at_coincidence():
    assert diffusion_distance_sq([1.0, 2.0], [1.0, 2.0], 0.4) == 0.0


def test_diffusion_distance_closed_form():
    # 2(1 - exp(-1/2))/sqrt(2 pi)
    expected = 2.0 * (1.0 - math.exp(-0.5)) / math.sqrt(2.0 * math.pi)
    assert diffusion_distance_sq([0.0], [1.0], 0.25) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.31394311176457866, rel=1e-12)


def test_diffusion_distance_bounded_and_monotone():
    t = 0.3
    cap = 2.0 / gaussian_normalizer(1, 2.0 * t)
    gaps = [diffusion_distance_sq([0.0], [r], t) for r in (0.5, 1.0, 2.0, 5.0)]
    assert all(g1 < g2 for g1, g2 in zip(gaps, gaps[1:]))
    # the cap is a supremum: approached, never exceeded (the kernel underflows
    # to zero at extreme range, so equality is reachable in floats)
    assert all(0.0 <= g <= cap for g in gaps)
    assert diffusion_distance_sq([0.0], [50.0], t) == pytest.approx(cap, rel=1e-10)


def test_triangle_inequality_random_triples():
    rng = np.random.default_rng(7)
    for _ in range(200):
        d = int(rng.integers(1, 4))
        x, y, z = rng.standard_normal((3, d)) * rng.uniform(0.1, 5.0)
        t = float(np.exp(rng.uniform(np.log(0.01), np.log(10.0))))
        dxy = math.sqrt(diffusion_distance_sq(x, y, t))
        dxz = math.sqrt(diffusion_distance_sq(x, z, t))
        dzy = math.sqrt(diffusion_distance_sq(z, y, t))
        assert dxy <= dxz + dzy + 1e-12


# -- Fréchet function and gradient -------------------------------------------

def test_frechet_single_atom_is_distance():
    y = np.array([0.3, -1.2])
    alpha = uniform_empirical([y])
    x = np.array([1.0, 1.0])
    assert frechet_function(alpha, x, 0.8) == pytest.approx(
        diffusion_distance_sq(y, x, 0.8), rel=1e-14
    )


def test_frechet_two_atom_closed_form():
    alpha = uniform_empirical([[-1.0], [1.0]])
    expected = (2.0 / math.sqrt(4.0 * math.pi)) * (1.0 - math.exp(-0.25))
    assert frechet_function(alpha, [0.0], 0.5) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.12479829408003389, rel=1e-12)


def test_kde_identity_random():
    # V_{alpha,t/2}(x) + 2 * sum_i w_i G_t(x, p_i) = 2 / C_d(t)
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 30))
        alpha = EmpiricalMeasure(rng.standard_normal((n, d)), rng.dirichlet(np.ones(n)))
        x = rng.standard_normal(d)
        t = float(np.exp(rng.uniform(np.log(0.01), np.log(10.0))))
        kde = sum(w * heat_kernel(p, x, t) for p, w in zip(alpha.points, alpha.weights))
        lhs = frechet_function(alpha, x, t / 2.0) + 2.0 * kde
        rhs = 2.0 / gaussian_normalizer(d, t)
        assert abs(lhs - rhs) <= 1e-12 * rhs


def test_frechet_bounds():
    rng = np.random.default_rng(4)
    alpha = EmpiricalMeasure(rng.standard_normal((20, 2)), rng.dirichlet(np.ones(20)))
    t = 0.7
    cap = 2.0 / gaussian_normalizer(2, 2.0 * t)
    vals = frechet_values(alpha, rng.standard_normal((100, 2)) * 3, t)
    assert vals.min() >= 0.0
    assert vals.max() <= cap


def test_gradient_single_atom_closed_form():
    alpha = uniform_empirical([[0.0]])
    # at x=1, t=0.5: exp(-1/4)/sqrt(4 pi) (one-half of the spec sketch's
    # value; the finite-difference check below pins the correct constant)
    expected = math.exp(-0.25) / math.sqrt(4.0 * math.pi)
    got = frechet_gradient(alpha, [1.0], 0.5)
    assert got[0] == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.2196956447338612, rel=1e-12)


def test_gradient_symmetric_configuration_vanishes():
    alpha = uniform_empirical([[-1.0], [1.0]])
    assert abs(frechet_gradient(alpha, [0.0], 2.0)[0]) < 1e-16


def test_gradient_far_field_vanishes():
    alpha = uniform_empirical([[0.0, 0.0]])
    t = 0.5
    x = np.array([40.0 * math.sqrt(t), 0.0])
    assert np.linalg.norm(frechet_gradient(alpha, x, t)) < 1e-12


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(5)
    for _ in range(60):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 25))
        scale = rng.uniform(0.1, 5.0)
        alpha = EmpiricalMeasure(rng.standard_normal((n, d)) * scale, rng.dirichlet(np.ones(n)))
        x = rng.standard_normal(d) * scale
        t = float(np.exp(rng.uniform(np.log(0.01), np.log(10.0))))
        h = 1e-5 * (1.0 + np.linalg.norm(x))
        fd = central_difference_gradient(lambda z: frechet_function(alpha, z, t), x, h)
        grad = frechet_gradient(alpha, x, t)
        # central differences carry roundoff ~ eps*V/h, so the relative
        # comparison only makes sense for gradients above ~1e-6 * V-scale;
        # deep-tail gradients get an absolute check at the noise floor
        cap = 2.0 / gaussian_normalizer(d, 2.0 * t)
        if np.linalg.norm(grad) >= 1e-6 * cap:
            assert np.linalg.norm(fd - grad) / np.linalg.norm(grad) <= 1e-5
        else:
            assert np.linalg.norm(fd - grad) <= 1e-9 * cap


def test_translation_equivariance():
    rng = np.random.default_rng(6)
    alpha = EmpiricalMeasure(rng.standard_normal((15, 2)), rng.dirichlet(np.ones(15)))
    for _ in range(10):
        c = rng.standard_normal(2) * 5
        x = rng.standard_normal(2)
        t = 0.9
        v1 = frechet_function(alpha, x, t)
        v2 = frechet_function(alpha.translated(c), x + c, t)
        assert v1 == pytest.approx(v2, rel=1e-12, abs=1e-15)


def test_far_field_plateau():
    alpha = uniform_empirical([[0.0]])
    t = 1.3
    plateau = 2.0 / gaussian_normalizer(1, 2.0 * t)
    val = frechet_function(alpha, [40.0 * math.sqrt(t)], t)
    assert abs(plateau - val) < 1e-12 * plateau


# -- fields and minima ---------------------------------------------------------

def test_field_single_point_equals_distance():
    alpha = uniform_empirical([[0.5]])
    grid = GridSpec((0.0,), (1.0,), (11,))
    field = evaluate_field(alpha, 0.25, grid=grid)
    for idx, x in enumerate(field.axes[0]):
        assert field.values[idx] == pytest.approx(
            diffusion_distance_sq([0.5], [x], 0.25), rel=1e-13, abs=1e-16
        )


def test_field_single_cell_on_atom_is_zero():
    alpha = uniform_empirical([[2.0]])
    grid = GridSpec((2.0,), (2.0,), (1,))
    field = evaluate_field(alpha, 0.5, grid=grid)
    assert field.values[0] == 0.0


def test_degenerate_box_rejected():
    with pytest.raises(ValueError):
        GridSpec((0.0,), (0.0,), (5,))


def test_default_grid_needs_known_dimension():
    alpha = uniform_empirical([np.zeros(4)])
    with pytest.raises(ValueError):
        default_grid(alpha, 1.0)


def test_local_minima_quadratic_single():
    xs = np.linspace(-1, 1, 21)
    field = FrechetField((xs,), (xs**2).reshape(21), t=0.1)
    assert local_minima(field) == [(10,)]


def test_local_minima_constant_field_empty():
    xs = np.linspace(0, 1, 9)
    field = FrechetField((xs,), np.full(9, 0.25), t=0.1)
    assert local_minima(field) == []


def test_local_minima_two_valley_profile():
    alpha = uniform_empirical(two_cluster_line(seed=2, n=300))
    assert len(local_minima(evaluate_field(alpha, 0.1))) == 2
    assert len(local_minima(evaluate_field(alpha, 20.0))) == 1


def test_local_minima_2d_grid_neighbors():
    vals = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    field = FrechetField((np.arange(3.0), np.arange(3.0)), vals, t=0.05)
    assert local_minima(field) == [(1, 1)]


# -- gradient flow -------------------------------------------------------------

def test_flow_single_atom_converges_to_atom():
    alpha = uniform_empirical([[1.5, -0.5]])
    start = np.array([[0.0, 0.0], [2.0, 1.0]])
    tol = 1e-7
    snaps = gradient_flow(start, alpha, 0.4, tol=tol, max_iters=20_000)
    final = snaps[-1]
    assert np.linalg.norm(final - np.array([1.5, -0.5]), axis=1).max() < 10 * tol


def test_flow_symmetric_fixed_point():
    alpha = uniform_empirical([[-1.0], [1.0]])
    snaps = gradient_flow(np.array([[0.0]]), alpha, 5.0, max_iters=50)
    assert snaps[-1][0, 0] == 0.0


def test_flow_descent_along_trajectory():
    rng = np.random.default_rng(8)
    pts = rng.standard_normal((40, 2))
    alpha = uniform_empirical(pts)
    snaps = gradient_flow(pts, alpha, 0.3, max_iters=120, record_every=1)
    values = [frechet_values(alpha, s, 0.3) for s in snaps]
    for v1, v2 in zip(values, values[1:]):
        assert np.all(v2 <= v1 + 1e-15)


def test_flow_validation():
    alpha = uniform_empirical([[0.0]])
    with pytest.raises(ValueError):
        gradient_flow([[0.0]], alpha, 0.5, step=-1.0)
    with pytest.raises(ValueError):
        gradient_flow([[0.0]], alpha, 0.5, tol=0.0)


# -- file round trips -----------------------------------------------------------

def test_field_csv_round_trip(tmp_path):
    alpha = uniform_empirical([[0.0, 0.0], [1.0, 0.5]])
    field = evaluate_field(alpha, 0.3, grid=GridSpec((-1.0, -1.0), (2.0, 2.0), (6, 5)))
    path = tmp_path / "field.csv"
    save_field_csv(field, path)
    back = load_field_csv(path, t=0.3)
    assert np.array_equal(back.values, field.values)
    for a, b in zip(back.axes, field.axes):
        assert np.array_equal(a, b)


def test_trajectory_round_trip(tmp_path):
    alpha = uniform_empirical([[0.0], [1.0]])
    snaps = gradient_flow(np.array([[0.2], [0.8]]), alpha, 0.2, max_iters=10)
    manifest = save_trajectory(snaps, 0.2, 0.1, tmp_path / "flow")
    back, t, step = load_trajectory(manifest)
    assert t == 0.2 and step == 0.1
    assert len(back) == len(snaps)
    for a, b in zip(back, snaps):
        assert np.array_equal(a, b)
