import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from conftest import random_spd
from hsiblood.core import AnnotationMask, HyperCube, Spectrum
from hsiblood.cube_io import LibraryEntry, SpectralLibrary
from hsiblood.detect import (DEFAULT_N_PIXELS, LabeledImage, Scenario, estimate_stats, library_template, mf_image,
                             mf_pixels, mf_score, parse_config, qd_score, run_scenario, scenario_from_config,
                             stats_from_moments, top_n, two_stage, two_stage_details)
from hsiblood.errors import (ConfigError, DegenerateTarget, DimensionMismatch, TooFewSamples, UnrecoverablySingular,
                             UnresolvableTarget)


def brute_mf(x, mu, mu_t, cov):
    inv = np.linalg.inv(cov)
    d = mu_t - mu
    return (x - mu) @ inv @ d / (d @ inv @ d)


def two_class_scene(seed=0, lines=30, samples=30, d=6, n_target=60, shift=3.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((lines * samples, d)) @ np.linalg.cholesky(random_spd(rng, d, 5.0)).T + 5.0
    idx = rng.choice(lines * samples, n_target, replace=False)
    X[idx] += shift
    labels = np.zeros(lines * samples, dtype=np.int64)
    labels[idx] = 1
    cube = HyperCube(X.reshape(lines, samples, d), np.linspace(400, 900, d))
    return LabeledImage(cube, AnnotationMask(labels.reshape(lines, samples)), f"scene{seed}")


# estimate_stats


def test_hand_computed_stats():
    s = estimate_stats(np.array([[0, 0], [2, 0], [0, 2], [2, 2]], dtype=float))
    assert_allclose(s.mean, [1, 1])
    assert_allclose(s.covariance, [[4 / 3, 0], [0, 4 / 3]], rtol=0, atol=1e-15)
    assert s.ridge_applied == 0.0


def test_identical_pixels_need_ridge():
    s = estimate_stats(np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]))
    assert s.ridge_applied > 0


def test_one_pixel():
    with pytest.raises(TooFewSamples):
        estimate_stats(np.array([[1.0, 2.0]]))


def test_rank_deficient_ridge_scale():
    # rank-1 covariance: ridge escalates from 1e-8 * trace/d
    v = np.array([1.0, 2.0, 3.0])
    s = stats_from_moments(np.zeros(3), np.outer(v, v))
    base = 1e-8 * 14.0 / 3
    assert any(np.isclose(s.ridge_applied, base * 10**k) for k in range(6))
    assert_allclose((np.outer(v, v) + s.ridge_applied * np.eye(3)) @ s.solve(v), v, rtol=1e-8)


def test_unrecoverable():
    cov = np.array([[1.0, 0.0], [0.0, np.nan]])
    with pytest.raises(UnrecoverablySingular):
        stats_from_moments(np.zeros(2), cov)


@pytest.mark.parametrize("d", [2, 5, 20])
def test_solve_residual(d):
    rng = np.random.default_rng(d)
    cov = random_spd(rng, d, 1e4)
    s = stats_from_moments(np.zeros(d), cov)
    b = rng.standard_normal(d)
    x = s.solve(b)
    assert np.linalg.norm(cov @ x - b) / np.linalg.norm(b) < 1e-8
    assert_allclose(s.covariance, s.covariance.T, rtol=1e-10)


# QD


@pytest.mark.parametrize("x,expected", [((1, 0), 0.0), ((2, 0), 4.0), ((0, 0), -4.0)])
def test_qd_closed_form(x, expected):
    bg = stats_from_moments([0.0, 0.0], np.eye(2))
    tg = stats_from_moments([2.0, 0.0], np.eye(2))
    assert qd_score(np.array(x, float), bg, tg) == pytest.approx(expected, abs=1e-10)


def test_qd_zero_set():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = int(rng.integers(2, 10))
        cov = random_spd(rng, d)
        mu0, mu1 = rng.standard_normal(d), rng.standard_normal(d)
        bg, tg = stats_from_moments(mu0, cov), stats_from_moments(mu1, cov)
        # bisector: midpoint plus any offset v with v' G^-1 (mu1 - mu0) = 0
        v = rng.standard_normal(d)
        w = np.linalg.solve(cov, mu1 - mu0)
        v -= (v @ w) / (w @ w) * w
        x = 0.5 * (mu0 + mu1) + v
        assert abs(qd_score(x, bg, tg)) < 1e-10 * (1 + bg.mahalanobis(x)[0])


def test_qd_vectorized_matches_scalar():
    rng = np.random.default_rng(4)
    bg = stats_from_moments(np.zeros(3), random_spd(rng, 3))
    tg = stats_from_moments(np.ones(3), random_spd(rng, 3))
    X = rng.standard_normal((7, 3))
    assert_allclose(qd_score(X, bg, tg), [qd_score(x, bg, tg) for x in X])


def test_qd_dimension_mismatch():
    bg = stats_from_moments(np.zeros(2), np.eye(2))
    tg = stats_from_moments(np.zeros(3), np.eye(3))
    with pytest.raises(DimensionMismatch):
        qd_score(np.zeros(2), bg, tg)


# MF


def test_mf_identity_closed_form():
    s = stats_from_moments(np.zeros(2), np.eye(2))
    assert mf_score(np.array([2.0, 2.0]), np.zeros(2), np.ones(2), s) == pytest.approx(2.0, abs=1e-12)


def test_mf_degenerate():
    s = stats_from_moments(np.zeros(2), np.eye(2))
    with pytest.raises(DegenerateTarget):
        mf_score(np.ones(2), np.ones(2), np.ones(2), s)


@pytest.mark.parametrize("d", [2, 8, 113])
def test_mf_anchors(d):
    rng = np.random.default_rng(d)
    for _ in range(20):
        cov = random_spd(rng, d)
        mu, mu_t = rng.standard_normal(d), rng.standard_normal(d)
        s = stats_from_moments(mu, cov)
        assert abs(mf_score(mu, mu, mu_t, s)) < 1e-10
        assert abs(mf_score(mu_t, mu, mu_t, s) - 1) < 1e-10


def test_mf_matches_explicit_inverse():
    rng = np.random.default_rng(5)
    for _ in range(100):
        d = int(rng.integers(2, 21))
        cov = random_spd(rng, d, 1e3)
        mu, mu_t, x = rng.standard_normal((3, d))
        got = mf_score(x, mu, mu_t, stats_from_moments(mu, cov))
        want = brute_mf(x, mu, mu_t, cov)
        assert abs(got - want) <= 1e-8 * max(1.0, abs(want))


def test_mf_image_matches_per_pixel_oracle():
    img = two_class_scene(1)
    X = img.cube.pixels()
    mu_t = X[img.mask.labels.ravel() == 1].mean(axis=0)
    scores = mf_image(img.cube, mu_t).scores.ravel()
    mu = X.mean(axis=0)
    cov = np.cov(X, rowvar=False)
    want = np.array([brute_mf(x, mu, mu_t, cov) for x in X])
    assert_allclose(scores, want, rtol=1e-8, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.integers(0, 2**32 - 1))
def test_mf_affine_through_mean(alpha, seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 12))
    cov = random_spd(rng, d)
    mu, mu_t, x = rng.standard_normal((3, d))
    s = stats_from_moments(mu, cov)
    lhs = mf_score(alpha * x + (1 - alpha) * mu, mu, mu_t, s)
    assert lhs == pytest.approx(alpha * mf_score(x, mu, mu_t, s), abs=1e-10 * (1 + abs(alpha)) * 10)


def test_implanted_template_pixels_score_one():
    img = two_class_scene(2)
    cube = img.cube
    mu_t = np.full(cube.bands, 9.0)
    data = cube.data.copy()
    data[0, :5] = mu_t
    # covariance/mean are from the modified cube, so implanted pixels hit mu_t exactly
    y = mf_image(HyperCube(data, cube.wavelengths), mu_t).scores
    assert_allclose(y[0, :5], 1.0, rtol=0, atol=1e-10)


def test_global_mean_template_degenerate():
    cube = two_class_scene(3).cube
    with pytest.raises(DegenerateTarget):
        mf_image(cube, cube.pixels().mean(axis=0))


@pytest.mark.parametrize("c", [1e-3, 0.5, 7.0, 1e4])
def test_scale_preserves_ranking(c):
    img = two_class_scene(4)
    mu_t = img.cube.pixels()[img.mask.labels.ravel() == 1].mean(axis=0)
    base = mf_image(img.cube, mu_t).scores.ravel()
    scaled = mf_image(HyperCube(img.cube.data * c, img.cube.wavelengths), mu_t * c).scores.ravel()
    assert_array_equal(np.argsort(base, kind="stable"), np.argsort(scaled, kind="stable"))


# two-stage


def test_top_n_ties_row_major():
    assert_array_equal(top_n(np.array([1.0, 3.0, 3.0, 2.0, 3.0]), 3), [1, 2, 4])


def test_two_stage_equals_ideal_when_top_is_class():
    img = two_class_scene(5, shift=12.0)
    labels = img.mask.labels
    n = int(labels.sum())
    ideal_t = img.cube.data[labels == 1].mean(axis=0)
    res = two_stage_details(img.cube, ideal_t, n)
    assert set(res.top.tolist()) == set(np.flatnonzero(labels.ravel()).tolist())
    assert_allclose(res.template, ideal_t, rtol=1e-12)
    assert_allclose(res.stage2, mf_image(img.cube, ideal_t).scores, rtol=1e-10, atol=1e-12)


def test_two_stage_all_pixels_degenerate():
    cube = two_class_scene(6).cube
    t = cube.pixels()[0]
    with pytest.raises(DegenerateTarget):
        two_stage(cube, t, cube.lines * cube.samples)


def test_two_stage_reuses_stage1_stats():
    img = two_class_scene(7)
    t = img.cube.pixels()[img.mask.labels.ravel() == 1].mean(axis=0) * 1.05
    res = two_stage_details(img.cube, t, 40)
    want = mf_pixels(img.cube.pixels(), res.template, res.stats)
    assert_array_equal(res.stage2.ravel(), want)


def test_two_stage_deterministic():
    img = two_class_scene(8)
    t = img.cube.pixels()[:10].mean(axis=0)
    a = two_stage(img.cube, t, 50).scores
    b = two_stage(img.cube, t, 50).scores
    assert a.tobytes() == b.tobytes()


def test_n_out_of_range():
    cube = two_class_scene(9).cube
    with pytest.raises(ConfigError):
        two_stage(cube, cube.pixels()[0], 0)


# scenarios


def test_run_scenario_ideal_and_inductive():
    test, source = two_class_scene(10), two_class_scene(11)
    ideal = run_scenario(Scenario("ideal-mf"), test).scores
    ind = run_scenario(Scenario("inductive-mf"), test, source).scores
    t_src = source.cube.data[source.mask.labels == 1].mean(axis=0)
    assert_allclose(ind, mf_image(test.cube, t_src).scores)
    assert ideal.shape == test.cube.shape[:2]


def test_ideal_excludes_uncertain():
    img = two_class_scene(12)
    labels = img.mask.labels.copy()
    labels[0, 0] = 8
    img8 = LabeledImage(img.cube, AnnotationMask(labels))
    t_default = img.cube.data[labels == 1].mean(axis=0)
    t_incl = img.cube.data[(labels == 1) | (labels == 8)].mean(axis=0)
    assert_allclose(run_scenario(Scenario("ideal-mf"), img8).scores, mf_image(img.cube, t_default).scores)
    assert_allclose(run_scenario(Scenario("ideal-mf", include_uncertain=True), img8).scores,
                    mf_image(img.cube, t_incl).scores)


def test_ideal_qd_separates():
    img = two_class_scene(13, shift=4.0)
    y = run_scenario(Scenario("ideal-qd"), img).scores
    assert y[img.mask.labels == 1].mean() > y[img.mask.labels == 0].mean()


def test_library_template_resampled_and_normalized():
    wl = np.array([400.0, 500.0, 600.0])
    lib = SpectralLibrary([LibraryEntry(4, "", Spectrum(np.array([1.0, 2.0, 4.0]), wl))])
    t = library_template(lib, 4, np.array([450.0, 550.0]))
    assert_allclose(t, np.array([1.5, 3.0]) / 2.25)
    with pytest.raises(UnresolvableTarget):
        library_template(lib, 5, wl)


def test_library_scenario():
    img = two_class_scene(14)
    t = img.cube.data[img.mask.labels == 1].mean(axis=0)
    lib = SpectralLibrary([LibraryEntry(1, "", Spectrum(t, img.cube.wavelengths))])
    y = run_scenario(Scenario("library-mf", library_index=1), img, library=lib, normalize_library=False)
    assert_allclose(y.scores, mf_image(img.cube, t).scores)


@pytest.mark.parametrize("kind", ["inductive-mf", "library-mf", "two-stage"])
def test_unresolvable(kind):
    with pytest.raises(UnresolvableTarget):
        run_scenario(Scenario(kind), two_class_scene(15))


def test_percent_n():
    img = two_class_scene(16, n_target=60)
    source = two_class_scene(17)
    sc = scenario_from_config({"kind": "two-stage", "n_pixels": "50%"})
    assert sc.n_percent == 50.0
    a = run_scenario(sc, img, source).scores
    b = run_scenario(Scenario("two-stage", n_pixels=30), img, source).scores
    assert_array_equal(a, b)


def test_config_parsing():
    cfg = parse_config("Kind = two-stage\nN-Pixels = 750\n# comment\nlibrary index = 20\n")
    sc = scenario_from_config(cfg)
    assert (sc.kind.value, sc.n_pixels, sc.library_index) == ("two-stage", 750, 20)
    assert Scenario("two-stage").n_pixels == DEFAULT_N_PIXELS == 1000
    with pytest.raises(ConfigError):
        scenario_from_config({"n_pixels": "many"})
    with pytest.raises(ValueError):
        Scenario("rx-detector")
