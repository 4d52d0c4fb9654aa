import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ordering_ica.errors import DimensionMismatch, ZeroVector
from ordering_ica.metrics import cosine_divergence, fluctuation, ordering_error


def _mixing(seed, n=4):
    return np.random.default_rng(seed).standard_normal((n, n)) + 3 * np.eye(n)


def test_ordering_error_exact_inverse():
    A = _mixing(0)
    assert ordering_error(np.linalg.inv(A), A) == 0.0
    assert ordering_error(np.linalg.inv(A), A, tau=1e-6) == 0.0


def test_ordering_error_negated_inverse():
    A = _mixing(1)
    assert ordering_error(-np.linalg.inv(A), A) == 0.0


def test_ordering_error_swapped_rows():
    A = _mixing(2, 3)
    W = np.linalg.inv(A)[[1, 0, 2]]
    assert ordering_error(W, A, tau=0.1) == pytest.approx(4 / 9)


def test_ordering_error_shape():
    with pytest.raises(DimensionMismatch):
        ordering_error(np.eye(3), np.eye(4))
    with pytest.raises(DimensionMismatch):
        ordering_error(np.eye(3)[:2], np.eye(3))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 7))
def test_ordering_error_row_sign_invariance_and_permutation(seed, n):
    gen = np.random.default_rng(seed)
    A = gen.standard_normal((n, n)) + 4 * np.eye(n)
    W = np.linalg.inv(A) + 0.01 * gen.standard_normal((n, n)) / n
    signs = gen.choice([-1.0, 1.0], size=n)
    base = ordering_error(W, A)
    assert ordering_error(signs[:, None] * W, A) == base
    perm = gen.permutation(n)
    if not np.array_equal(perm, np.arange(n)):
        assert ordering_error(np.linalg.inv(A)[perm], A) > 0


def test_cosine_divergence_cases():
    u = np.array([1.0, 2.0, -3.0])
    assert cosine_divergence(u, u) == pytest.approx(0.0, abs=1e-15)
    assert cosine_divergence(u, -2 * u) == pytest.approx(0.0, abs=1e-15)
    assert cosine_divergence([1, 0], [0, 5]) == 1.0
    assert cosine_divergence([1, 0], [1, 1]) == pytest.approx(1 - 1 / np.sqrt(2))
    with pytest.raises(ZeroVector):
        cosine_divergence([0, 0], [1, 0])


def test_fluctuation_identical_runs():
    W = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 4)))[0]
    rep = fluctuation([W, W.copy(), W.copy()])
    np.testing.assert_allclose(rep.per_component, 0.0, atol=1e-15)
    assert set(rep.group_averages) == {"all", "top"}


def test_fluctuation_orthogonal_row():
    a = np.eye(3)
    b = np.eye(3)[[0, 2, 1]]
    rep = fluctuation([a, b])
    np.testing.assert_allclose(rep.per_component, [0.0, 1.0, 1.0])


def test_fluctuation_sixty_degrees():
    rows = [np.array([[np.cos(t), np.sin(t)]]) for t in (0.0, np.pi / 3, 2 * np.pi / 3)]
    rep = fluctuation(rows)
    assert rep.per_component[0] == pytest.approx(0.5, abs=1e-12)


def test_fluctuation_groups():
    runs = [np.random.default_rng(s).standard_normal((45, 45)) for s in range(3)]
    rep = fluctuation(runs)
    assert set(rep.group_averages) == {"all", "top", "mid", "rest"}
    pc = rep.per_component
    assert rep.group_averages["mid"] == pytest.approx(pc[20:40].mean())
    assert rep.group_averages["rest"] == pytest.approx(pc[40:].mean())
    assert all(0 <= v <= 1 for v in rep.group_averages.values())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), T=st.integers(2, 5))
def test_fluctuation_invariances(seed, T):
    gen = np.random.default_rng(seed)
    runs = [gen.standard_normal((3, 4)) for _ in range(T)]
    base = fluctuation(runs).per_component
    flipped = [gen.choice([-1.0, 1.0], size=(3, 1)) * r for r in runs]
    np.testing.assert_allclose(fluctuation(flipped).per_component, base, atol=1e-12)
    shuffled = [runs[i] for i in gen.permutation(T)]
    np.testing.assert_allclose(fluctuation(shuffled).per_component, base, atol=1e-12)
    assert np.all((base >= 0) & (base <= 1))


def test_fluctuation_validation():
    with pytest.raises(ValueError):
        fluctuation([np.eye(2)])
    with pytest.raises(DimensionMismatch):
        fluctuation([np.eye(2), np.eye(3)])
