import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ordering_ica.errors import DimensionMismatch, RankDeficient
from ordering_ica.signal import center, compose_unmixing, preprocess, whiten


def test_center_zero_matrix():
    Xc, mean = center(np.zeros((2, 4)))
    np.testing.assert_array_equal(Xc, 0.0)
    np.testing.assert_array_equal(mean, [0.0, 0.0])


def test_center_constant_row():
    Xc, mean = center([[1.0, 1.0, 1.0, 1.0]])
    np.testing.assert_array_equal(Xc, [[0, 0, 0, 0]])
    assert mean[0] == 1.0


def test_center_small_row():
    Xc, mean = center([[1.0, 2.0, 3.0]])
    np.testing.assert_allclose(Xc, [[-1.0, 0.0, 1.0]], atol=1e-15)
    assert mean[0] == 2.0


def test_center_rejects_nan():
    with pytest.raises(ValueError):
        center([[1.0, np.nan]])


def _white_noise(rng, n, m):
    Xw, _ = whiten(center(rng.standard_normal((n, m)))[0])
    return Xw


def test_whiten_already_white_gives_orthogonal_matrix(rng):
    Z = _white_noise(rng, 3, 2000)
    Xw, model = whiten(Z)
    V = model.whiten
    np.testing.assert_allclose(V @ V.T, np.eye(3), atol=1e-6)
    np.testing.assert_allclose(Xw @ Xw.T / Z.shape[1], np.eye(3), atol=1e-8)


def test_whiten_scaled_rows(rng):
    Z = _white_noise(rng, 2, 5000)
    X = np.diag([2.0, 1.0]) @ Z
    np.testing.assert_allclose(X @ X.T / X.shape[1], np.diag([4.0, 1.0]), atol=1e-12)
    Xw, model = whiten(X)
    np.testing.assert_allclose(Xw @ Xw.T / X.shape[1], np.eye(2), atol=1e-8)
    np.testing.assert_allclose(np.sort(model.eigenvalues), [1.0, 4.0], atol=1e-10)


def test_whiten_duplicated_rows_rank_deficient(rng):
    row = rng.standard_normal(100)
    Xc, _ = center(np.vstack([row, row, rng.standard_normal(100)]))
    with pytest.raises(RankDeficient):
        whiten(Xc)


def test_whiten_needs_more_samples_than_channels(rng):
    with pytest.raises(DimensionMismatch):
        whiten(rng.standard_normal((4, 4)))


def test_whiten_eigenvector_signs_fixed(rng):
    X = rng.standard_normal((4, 300)) * [[1.0], [2.0], [3.0], [4.0]]
    _, model = whiten(center(X)[0])
    E = model.dewhiten / np.sqrt(model.eigenvalues)
    pivots = E[np.argmax(np.abs(E), axis=0), np.arange(4)]
    assert np.all(pivots > 0)


def test_model_inverse_and_transform(rng):
    X = rng.standard_normal((3, 500)) + 5.0
    Xw, model = preprocess(X)
    np.testing.assert_allclose(model.dewhiten @ model.whiten, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(model.transform(X), Xw, atol=1e-12)


def test_compose_unmixing_identities(rng):
    _, model = preprocess(rng.standard_normal((3, 400)))
    np.testing.assert_array_equal(compose_unmixing(np.eye(3), model), model.whiten)
    Xw_id, model_id = whiten(_white_noise(rng, 2, 400))
    assert compose_unmixing(np.eye(2), model_id).shape == (2, 2)


def test_compose_unmixing_two_paths(rng):
    X = rng.standard_normal((3, 3)) @ rng.standard_normal((3, 1000))
    Xw, model = preprocess(X)
    W = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    direct = compose_unmixing(W, model) @ center(X)[0]
    np.testing.assert_allclose(direct, W @ Xw, atol=1e-10)


def test_compose_unmixing_dimension_mismatch(rng):
    _, model = preprocess(rng.standard_normal((3, 100)))
    with pytest.raises(DimensionMismatch):
        compose_unmixing(np.eye(2), model)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 6),
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1e-3, 1e3),
    offset=st.floats(-1e3, 1e3),
)
def test_whitening_properties(n, seed, scale, offset):
    gen = np.random.default_rng(seed)
    m = 50 * (n + 1)
    X = scale * gen.standard_normal((n, n)) @ gen.standard_normal((n, m)) + offset
    Xc, mean = center(X)
    np.testing.assert_allclose(Xc + mean[:, None], X, rtol=0, atol=1e-12 * max(1, abs(offset) + scale))
    try:
        Xw, model = whiten(Xc)
    except RankDeficient:
        return
    dev = Xw @ Xw.T / m - np.eye(n)
    assert np.linalg.norm(dev) < 1e-8 * n
    Xw2, model2 = whiten(Xw)
    V2 = model2.whiten
    np.testing.assert_allclose(V2 @ V2.T, np.eye(n), atol=1e-6)
