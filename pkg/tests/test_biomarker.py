import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffuscope.biomarker import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_T_GRID,
    DegenerateSeparation,
    LdaModel,
    beta_feature_matrix,
    features_beta,
    features_gamma,
    fit_lda,
    gamma_feature_matrix,
    load_model_json,
    roc,
    save_model_json,
    score,
    score_many,
    select_parameters,
)
from diffuscope.measures import ZeroTotal
from diffuscope.networks import network_from_weights, spectrum
from diffuscope.synthetic import (
    SELECT_FIXTURE_N_PER_CLASS,
    SELECT_FIXTURE_SEED,
    planted_abundance_tables,
)

from oracles import lda_direction_dense

K3_SPEC = spectrum(network_from_weights([[0, 1, 1], [1, 0, 1], [1, 1, 0]]))


# -- features ------------------------------------------------------------------

def test_features_beta_is_frequency_vector():
    assert features_beta([2, 2, 0]).tolist() == [0.5, 0.5, 0.0]
    with pytest.raises(ZeroTotal):
        features_beta([0, 0])


def test_features_gamma_point_mass_zero_at_atom():
    f = features_gamma([5, 0, 0], K3_SPEC, 0.7)
    assert f[0] == 0.0
    assert f[1] > 0


def test_features_gamma_uniform_constant_on_k3():
    f = features_gamma([3, 3, 3], K3_SPEC, 0.4)
    assert np.abs(f - f[0]).max() <= 1e-15


def test_features_gamma_vanish_at_large_t():
    f = features_gamma([1, 2, 3], K3_SPEC, 50.0)
    assert np.abs(f).max() < 1e-12


def test_features_gamma_length_check():
    with pytest.raises(ValueError):
        features_gamma([1, 2], K3_SPEC, 1.0)


# -- LDA -------------------------------------------------------------------------

def test_fit_lda_axis_aligned_example():
    f0 = [[0.0, 0.0], [1.0, 0.0]]
    f1 = [[10.0, 0.0], [11.0, 0.0]]
    model = fit_lda(f0, f1)
    assert abs(model.direction[0]) == pytest.approx(1.0, abs=1e-6)
    assert abs(model.direction[1]) < 1e-6
    # sign convention: class 1 scores higher
    assert model.direction[0] > 0


def test_fit_lda_swap_flips_sign():
    rng = np.random.default_rng(0)
    f0 = rng.standard_normal((8, 3))
    f1 = rng.standard_normal((8, 3)) + 2.0
    m01 = fit_lda(f0, f1)
    m10 = fit_lda(f1, f0)
    assert np.allclose(m01.direction, -m10.direction, atol=1e-12)


def test_fit_lda_degenerate_means():
    f = [[1.0, 2.0], [3.0, 4.0]]
    with pytest.raises(DegenerateSeparation):
        fit_lda(f, [list(row) for row in f])


def test_fit_lda_needs_two_samples_per_class():
    with pytest.raises(ValueError):
        fit_lda([[0.0, 1.0]], [[1.0, 0.0], [2.0, 0.0]])


def test_fit_lda_matches_dense_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        dim = int(rng.integers(2, 8))
        n0, n1 = int(rng.integers(3, 20)), int(rng.integers(3, 20))
        f0 = rng.standard_normal((n0, dim)) @ rng.standard_normal((dim, dim))
        f1 = rng.standard_normal((n1, dim)) @ rng.standard_normal((dim, dim)) + rng.standard_normal(dim)
        model = fit_lda(f0, f1)
        oracle = lda_direction_dense(f0, f1)
        assert np.abs(model.direction - oracle).max() <= 1e-8


def test_fit_lda_class_means_sign():
    rng = np.random.default_rng(2)
    f0 = rng.standard_normal((10, 4))
    f1 = rng.standard_normal((10, 4)) + 1.5
    model = fit_lda(f0, f1)
    s0 = score_many(model, f0).mean()
    s1 = score_many(model, f1).mean()
    assert s1 > s0


def test_score_examples():
    model = fit_lda([[0.0, 0.0], [1.0, 0.0]], [[10.0, 0.0], [11.0, 0.0]])
    assert score(model, model.direction) == pytest.approx(1.0, rel=1e-12)
    assert score(model, [0.0, 0.0]) == 0.0
    with pytest.raises(ValueError):
        score(model, [1.0, 2.0, 3.0])


def test_score_translation_linearity():
    rng = np.random.default_rng(3)
    model = fit_lda(rng.standard_normal((5, 3)), rng.standard_normal((5, 3)) + 1)
    x, c = rng.standard_normal(3), rng.standard_normal(3)
    assert score(model, x + c) - score(model, x) == pytest.approx(score(model, c), rel=1e-10, abs=1e-12)


def test_rescaling_preserves_score_ranks():
    rng = np.random.default_rng(4)
    f0 = rng.standard_normal((12, 5))
    f1 = rng.standard_normal((12, 5)) + 0.8
    test = rng.standard_normal((30, 5))
    base = score_many(fit_lda(f0, f1), test)
    for c in (0.01, 7.0, 1234.0):
        scaled = score_many(fit_lda(f0 * c, f1 * c), test * c)
        assert np.array_equal(np.argsort(base), np.argsort(scaled))


# -- ROC ---------------------------------------------------------------------------

def test_roc_perfect_separation():
    curve = roc([0.1, 0.2], [0.8, 0.9])
    assert curve.auc == pytest.approx(1.0, abs=1e-15)


def test_roc_identical_scores():
    curve = roc([0.4, 0.4], [0.4, 0.4])
    assert curve.auc == pytest.approx(0.5, abs=1e-15)


def test_roc_anti_separation():
    curve = roc([0.9], [0.1])
    assert curve.auc == pytest.approx(0.0, abs=1e-15)


def test_roc_endpoints_exact():
    rng = np.random.default_rng(5)
    curve = roc(rng.standard_normal(9), rng.standard_normal(14))
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
    assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)


def test_roc_rates_nondecreasing():
    rng = np.random.default_rng(6)
    curve = roc(rng.standard_normal(25), rng.standard_normal(25) + 0.3)
    assert np.all(np.diff(curve.fpr) >= 0)
    assert np.all(np.diff(curve.tpr) >= 0)


def test_roc_auc_matches_trapezoid():
    rng = np.random.default_rng(7)
    curve = roc(rng.standard_normal(40), rng.standard_normal(40) + 1)
    assert curve.auc == pytest.approx(float(np.trapezoid(curve.tpr, curve.fpr)), abs=1e-12)


def test_roc_empty_class_rejected():
    with pytest.raises(ValueError):
        roc([], [0.1])


@settings(max_examples=30, deadline=None)
@given(
    s0=st.lists(st.floats(-10, 10), min_size=1, max_size=25),
    s1=st.lists(st.floats(-10, 10), min_size=1, max_size=25),
)
def test_roc_auc_invariant_under_monotone_transform(s0, s1):
    base = roc(s0, s1).auc
    f = lambda xs: [np.expm1(x / 5.0) + 2.0 * x for x in xs]
    assert roc(f(s0), f(s1)).auc == pytest.approx(base, abs=1e-12)


# -- parameter selection -------------------------------------------------------------

def test_default_grids_contain_reference_operating_point():
    assert 0.1 in DEFAULT_ALPHA_GRID
    assert 7.75 in DEFAULT_T_GRID


def test_select_single_cell():
    table, labels = planted_abundance_tables(0, 10)
    alpha, t, surface = select_parameters(table, labels, alpha_grid=(0.2,), t_grid=(1.5,))
    assert (alpha, t) == (0.2, 1.5)
    assert surface.shape == (1, 1)


def test_select_empty_grid_rejected():
    table, labels = planted_abundance_tables(0, 10)
    with pytest.raises(ValueError):
        select_parameters(table, labels, alpha_grid=(), t_grid=(1.0,))


def test_select_interior_t_on_planted_fixture():
    table, labels = planted_abundance_tables(
        SELECT_FIXTURE_SEED, SELECT_FIXTURE_N_PER_CLASS
    )
    alpha, t, surface = select_parameters(table, labels)
    assert t in DEFAULT_T_GRID
    assert DEFAULT_T_GRID[0] < t < DEFAULT_T_GRID[-1]
    assert surface.shape == (len(DEFAULT_ALPHA_GRID), len(DEFAULT_T_GRID))
    assert surface.max() == surface[DEFAULT_ALPHA_GRID.index(alpha), DEFAULT_T_GRID.index(t)]


def test_select_tie_break_smallest():
    # a constant surface must resolve to the smallest alpha and t
    table, labels = planted_abundance_tables(3, 8)
    alpha, t, surface = select_parameters(table, labels, alpha_grid=(1.0,), t_grid=(2.0, 2.0))
    assert t == 2.0


# -- model serialization ---------------------------------------------------------------

def test_model_json_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    model = fit_lda(
        rng.standard_normal((6, 4)),
        rng.standard_normal((6, 4)) + 1,
        feature_kind="dfv",
        t=7.75,
        taxa=("a", "b", "c", "d"),
    )
    path = tmp_path / "model.json"
    save_model_json(model, path)
    back = load_model_json(path)
    assert np.array_equal(back.direction, model.direction)
    assert np.array_equal(back.class_means, model.class_means)
    assert back.feature_kind == "dfv"
    assert back.t == 7.75
    assert back.taxa == model.taxa


def test_model_validation():
    with pytest.raises(ValueError):
        LdaModel(np.array([1.0, 1.0]), np.zeros((2, 2)), "raw-frequency")
    with pytest.raises(ValueError):
        LdaModel(np.array([1.0, 0.0]), np.zeros((2, 2)), "nope")
