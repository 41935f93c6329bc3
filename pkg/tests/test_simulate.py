import math

import numpy as np
import pytest
from scipy.linalg import toeplitz

from covshift import (
    FitConfig,
    GeneratorSpec,
    PostChange,
    StreamGenerator,
    TrainingRecipe,
    build_q,
    change_norm_frobenius,
    dep_order_study,
    fit_training,
    gen_stream,
    lag_trace_coefficients,
    ma_coefficients,
    ma_variance_factor,
    monte_carlo_arl,
    monte_carlo_edd,
    population_null_sd,
)
from covshift.errors import ConfigurationError


def test_ma_coefficient_values():
    assert np.allclose(ma_coefficients(0), [1.0])
    assert np.allclose(ma_coefficients(1), [0.5, 1.0])
    assert np.allclose(ma_coefficients(2), [1.0 / 3.0, 0.5, 1.0])


def test_lag_trace_coefficient_values():
    assert np.allclose(lag_trace_coefficients(0), [1.0])
    assert np.allclose(lag_trace_coefficients(1), [1.25, 0.5])
    assert np.allclose(lag_trace_coefficients(2), [49.0 / 36.0, 2.0 / 3.0, 1.0 / 3.0])
    assert ma_variance_factor(1) == pytest.approx(1.25)


def test_iid_stream_has_no_serial_dependence():
    x = gen_stream(GeneratorSpec(p=8, dep_order=0), 40000, 2)
    c1 = (x[:-1].T @ x[1:]) / (x.shape[0] - 1)
    assert np.abs(c1).max() < 0.05
    cov = (x.T @ x) / x.shape[0]
    assert np.allclose(cov, np.eye(8), atol=0.05)


def test_order_one_stream_matches_population_covariances():
    x = gen_stream(GeneratorSpec(p=10, dep_order=1), 60000, 11)
    cov = (x.T @ x) / x.shape[0]
    assert np.allclose(np.diag(cov), 1.25, atol=0.05)
    c1 = (x[:-1].T @ x[1:]) / (x.shape[0] - 1)
    assert np.allclose(np.diag(c1), 0.5, atol=0.05)
    c2 = (x[:-2].T @ x[2:]) / (x.shape[0] - 2)
    assert np.abs(np.diag(c2)).max() < 0.05


def test_toeplitz_base_covariance():
    x = gen_stream(GeneratorSpec(p=6, dep_order=0, pre_base="toeplitz06"), 60000, 5)
    cov = (x.T @ x) / x.shape[0]
    target = toeplitz(0.6 ** np.arange(6))
    assert np.allclose(cov, target, atol=0.05)


def test_seed_determinism_and_chunk_invariance():
    spec = GeneratorSpec(
        p=12, dep_order=2, innovation="student_t8",
        post_change=PostChange("b", 0.4, change_at=50),
    )
    a1 = gen_stream(spec, 137, 99)
    a2 = gen_stream(spec, 137, 99)
    assert np.array_equal(a1, a2)
    g = StreamGenerator(spec, 99)
    a3 = np.vstack([g.take(13), g.take(1), g.take(100), g.take(23)])
    assert np.array_equal(a1, a3)
    b = gen_stream(spec, 137, 100)
    assert not np.array_equal(a1, b)


def test_change_takes_effect_at_the_right_row():
    spec = GeneratorSpec(p=5, dep_order=0, post_change=PostChange("c", 0.9, change_at=10))
    base_spec = GeneratorSpec(p=5, dep_order=0)
    changed = gen_stream(spec, 20, 3)
    stable = gen_stream(base_spec, 20, 3)
    assert np.array_equal(changed[:10], stable[:10])
    assert not np.array_equal(changed[10:], stable[10:])


def test_build_q_model_a_reproduces_toeplitz_covariance():
    rng = np.random.default_rng(0)
    q = build_q("a", 15, 0.7, rng)
    assert np.allclose(q @ q.T, toeplitz(0.7 ** np.arange(15)), atol=1e-10)


def test_build_q_model_c_unit_diagonal_constant_offdiagonal():
    rng = np.random.default_rng(0)
    q = build_q("c", 12, 0.5, rng)
    sigma = q @ q.T
    assert np.allclose(np.diag(sigma), 1.0, atol=1e-10)
    off = sigma[~np.eye(12, dtype=bool)]
    assert np.allclose(off, 0.5, atol=1e-10)


def test_build_q_model_b_perturbs_three_entries_per_row():
    rng = np.random.default_rng(7)
    p, rho = 20, 0.3
    q = build_q("b", p, rho, rng)
    delta = q - np.eye(p)
    for i in range(p):
        nz = np.abs(delta[i]) > 1e-12
        assert nz.sum() == 3
        assert np.allclose(np.abs(delta[i, nz]), rho)


def test_build_q_validates_rho():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigurationError):
        build_q("a", 10, 1.0, rng)
    with pytest.raises(ConfigurationError):
        build_q("c", 10, -0.5, rng)


def test_change_norm_closed_forms():
    p, rho = 100, 0.6
    d = np.arange(1, p)
    expected_a = math.sqrt(2.0 * float((p - d) @ rho ** (2.0 * d)))
    assert change_norm_frobenius("a", p, rho, 0) == pytest.approx(expected_a, rel=1e-12)
    assert change_norm_frobenius("c", p, rho, 0) == pytest.approx(
        rho * math.sqrt(p * (p - 1)), rel=1e-12
    )
    # dependence inflates the change by the marginal variance factor
    assert change_norm_frobenius("a", p, rho, 2) == pytest.approx(
        (49.0 / 36.0) * expected_a, rel=1e-12
    )


def test_change_norm_model_b_matches_realized_q():
    rng = np.random.default_rng(3)
    q = build_q("b", 30, 0.25, rng)
    got = change_norm_frobenius("b", 30, 0.25, 1, q=q)
    expected = 1.25 * np.linalg.norm(q @ q.T - np.eye(30), "fro")
    assert got == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ConfigurationError):
        change_norm_frobenius("b", 30, 0.25, 1)


def test_student_innovations_have_unit_variance():
    spec = GeneratorSpec(p=4, dep_order=0, innovation="student_t8")
    x = gen_stream(spec, 100000, 8)
    assert x.var() == pytest.approx(1.0, rel=0.03)
    # heavier tails than Gaussian: excess kurtosis of t(8) is 1.5
    kurt = np.mean(x**4) / np.mean(x**2) ** 2 - 3.0
    assert 0.8 < kurt < 2.5


def test_population_null_sd_iid_closed_form():
    # For M=0 the only lag pair is (0,0): sd = 2 p sqrt(sum W^2) / H^2.
    from covshift import build_weight_plan, lag_weight_sums

    h, p = 60, 35
    s00 = lag_weight_sums(build_weight_plan(h, 0))[(0, 0)]
    assert population_null_sd(p, 0, h) == pytest.approx(
        2.0 * p * math.sqrt(s00) / h**2, rel=1e-12
    )


def test_generator_spec_validation():
    with pytest.raises(ConfigurationError):
        GeneratorSpec(p=0, dep_order=0)
    with pytest.raises(ConfigurationError):
        GeneratorSpec(p=10, dep_order=-1)
    with pytest.raises(ConfigurationError):
        GeneratorSpec(p=10, dep_order=0, innovation="cauchy")
    with pytest.raises(ConfigurationError):
        GeneratorSpec(p=10, dep_order=0, pre_base="wishart")
    with pytest.raises(ConfigurationError):
        PostChange("d", 0.5, 10)


def test_monte_carlo_guards():
    stable = GeneratorSpec(p=10, dep_order=0)
    changed = GeneratorSpec(p=10, dep_order=0, post_change=PostChange("a", 0.5, change_at=50))
    recipe = TrainingRecipe(n0=50)
    with pytest.raises(ConfigurationError):
        monte_carlo_arl(changed, recipe, 3.0, 20, 2)
    with pytest.raises(ConfigurationError):
        monte_carlo_edd(stable, recipe, 3.0, 20, 2)
    with pytest.raises(ConfigurationError):
        bad = GeneratorSpec(p=10, dep_order=0, post_change=PostChange("a", 0.5, change_at=60))
        monte_carlo_edd(bad, recipe, 3.0, 20, 2)


def test_worker_count_does_not_change_results():
    spec = GeneratorSpec(p=30, dep_order=0, post_change=PostChange("a", 0.8, change_at=80))
    recipe = TrainingRecipe(n0=80)
    mc1 = monte_carlo_edd(spec, recipe, 3.0, 30, replicates=6, seed=5, workers=1)
    mc3 = monte_carlo_edd(spec, recipe, 3.0, 30, replicates=6, seed=5, workers=3)
    assert np.array_equal(mc1.values, mc3.values)
    assert mc1.mean == mc3.mean


def test_censoring_counts_and_unreliable_flag():
    spec = GeneratorSpec(p=20, dep_order=0)
    recipe = TrainingRecipe(n0=60)
    mc = monte_carlo_arl(spec, recipe, threshold=50.0, window=20, replicates=4,
                         max_steps=40, seed=1)
    assert mc.censored == 4
    assert mc.unreliable
    assert mc.mean == 40.0


def test_adaptive_order_matches_known_order_when_estimate_agrees():
    # Fitting with the true order forced and with the order estimated must give
    # bit-identical summaries whenever the estimate lands on the true order.
    spec = GeneratorSpec(p=200, dep_order=1)
    agree = 0
    total = 12
    for rep in range(total):
        train = gen_stream(spec, 250, (123, rep))
        known = fit_training(train, FitConfig(window=60, dep_order_override=1))
        adaptive = fit_training(train, FitConfig(window=60))
        if adaptive.dep_order == 1:
            agree += 1
            assert adaptive.null_sd == known.null_sd
            assert adaptive.stationarity.statistic == known.stationarity.statistic
    assert agree >= int(0.9 * total)


def test_dep_order_study_counts():
    counts = dep_order_study(1, p=150, n0=200, replicates=12, seed=3)
    assert sum(counts.values()) == 12
    assert counts.get(1, 0) >= 10


def test_training_recipe_validation_and_override():
    with pytest.raises(ConfigurationError):
        TrainingRecipe(n0=1)
    with pytest.raises(ConfigurationError):
        TrainingRecipe(dep_order_policy="oracle")
    with pytest.raises(ConfigurationError):
        TrainingRecipe(dep_order_policy=-2)
    assert TrainingRecipe(dep_order_policy="true").resolve_override(2) == 2
    assert TrainingRecipe(dep_order_policy="estimate").resolve_override(2) is None
    assert TrainingRecipe(dep_order_policy=3).resolve_override(2) == 3
