import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from extremal_linkage.fitness import (
    LOG_MU, MU, FieldSpec, fitness_at, frechet_draws, frechet_quantile, keys_at,
    layer_fitness, log_fitness, scope, uniform_at)
from extremal_linkage.seeds import derive_seed

import oracle


def test_mu_matches_euler_gamma_closed_form():
    assert MU == pytest.approx(3.5621448, abs=1e-6)
    assert LOG_MU == pytest.approx(math.log(2) + 0.5772156649, abs=1e-9)


@pytest.mark.parametrize("seed,i,h", [(0, 0, 0), (1, -5, 3), (2**63, 123456, -1), (7, -(2**40), 2**20)])
def test_keys_match_pure_python_reference(seed, i, h):
    assert int(keys_at(FieldSpec(seed, 1.0), i, h)) == oracle.key(seed, i, h)


def test_torus_keys_use_centred_representative():
    spec = FieldSpec(5, 1.0, 11)
    ks = keys_at(spec, np.arange(-11, 22), 4)
    want = [oracle.key(5, i, 4, 11) for i in range(-11, 22)]
    assert ks.tolist() == want
    # torus and limit fields agree near the origin
    line = FieldSpec(5, 1.0)
    assert keys_at(spec, np.arange(6), 4).tolist() == keys_at(line, np.arange(6), 4).tolist()
    assert int(keys_at(spec, 10, 4)) == int(keys_at(line, -1, 4))


def test_fitness_is_pure_function_of_coordinates():
    spec = FieldSpec(99, 0.7)
    a = fitness_at(spec, np.arange(50), 3)
    b = fitness_at(spec, np.arange(50)[::-1], 3)[::-1]
    assert np.array_equal(a, b)
    assert fitness_at(spec, 17, 3) == pytest.approx(oracle.fitness(99, 17, 3, 0.7), rel=1e-14)


def test_layer_fitness_matches_pointwise():
    spec = FieldSpec(3, 2.0, 37)
    keys, vals = layer_fitness(spec, -2)
    assert np.array_equal(keys, keys_at(spec, np.arange(37), -2))
    assert np.allclose(vals, fitness_at(spec, np.arange(37), -2), rtol=0, atol=0)


def test_layer_fitness_needs_torus():
    with pytest.raises(ValueError):
        layer_fitness(FieldSpec(0, 1.0), 0)


def test_uniforms_are_uniform():
    u = uniform_at(FieldSpec(2024, 1.0), np.arange(10 ** 6), 0)
    assert 0 < u.min() and u.max() < 1
    assert stats.kstest(u, "uniform").statistic < 0.002


@pytest.mark.parametrize("delta", [0.5, 1.0, 3.0])
def test_frechet_draws_follow_frechet_law(delta):
    x = frechet_draws(10 ** 5, delta, seed=derive_seed(1, int(delta * 10)))
    d = stats.kstest(x, lambda s: np.exp(-np.power(s, -delta))).statistic
    assert d < 1.63 / math.sqrt(10 ** 5)


def test_layers_and_seeds_are_independent():
    a = frechet_draws(10 ** 5, 1.0, 1, layer=0)
    b = frechet_draws(10 ** 5, 1.0, 1, layer=1)
    c = frechet_draws(10 ** 5, 1.0, 2, layer=0)
    assert abs(stats.spearmanr(a, b)[0]) < 0.01
    assert abs(stats.spearmanr(a, c)[0]) < 0.01


@given(st.floats(1e-12, 1 - 1e-12), st.floats(0.1, 10))
def test_quantile_inverts_cdf(u, delta):
    f = frechet_quantile(u, delta)
    assert math.exp(-f ** (-delta)) == pytest.approx(u, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_quantile_rejects_boundary(u):
    with pytest.raises(ValueError):
        frechet_quantile(u, 1.0)


@pytest.mark.parametrize("delta", [0.0, -1.0, float("inf"), float("nan")])
def test_bad_delta_rejected(delta):
    with pytest.raises(ValueError):
        FieldSpec(0, delta)


def test_bad_torus_size_rejected():
    with pytest.raises(ValueError):
        FieldSpec(0, 1.0, 0)


@pytest.mark.parametrize("f,want", [(0.3, 3), (1.0, 3), (1.01, 5), (2.0, 5), (9.5, 21), (10.0, 21)])
def test_scope(f, want):
    assert scope(f) == want


def test_scope_rejects_nonpositive():
    with pytest.raises(ValueError):
        scope(0.0)


@settings(max_examples=50)
@given(st.floats(1e-6, 1e6), st.floats(0.2, 5))
def test_log_fitness_is_log_mu_of_two_f_delta(f, delta):
    assert log_fitness(f, delta) == pytest.approx(math.log(2 * f ** delta) / math.log(MU), rel=1e-9, abs=1e-9)


def test_fitness_never_infinite_at_extreme_keys():
    from extremal_linkage import _kernels as K
    top = int(K.KEY_SPAN) - 1
    assert math.isfinite(K.key_fitness(top, 0.5))
    assert K.key_fitness(0, 1.0) > 0
    assert K.key_fitness(top, 1.0) > K.key_fitness(top - 1, 1.0)
