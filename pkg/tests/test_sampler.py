import numpy as np
import pytest
from scipy import stats

from kice.core import Instance, KnowledgeSet
from kice.framework import CostSpec, cost
from kice.sampler import (
    LayerSpec,
    make_rng,
    radial_cdf,
    sample_ellipsoid_layer,
    sample_sphere_layer,
    transformed_radius,
)


def box_rejection(rng, lo, hi, accept, n_keep):
    """Uniform points of the box [lo, hi] that pass ``accept``; the oracle for layer uniformity."""
    kept = []
    total = 0
    while total < n_keep:
        p = rng.uniform(lo, hi, size=(4 * n_keep, lo.size))
        p = p[accept(p)]
        kept.append(p)
        total += len(p)
    return np.vstack(kept)[:n_keep]


def test_sphere_containment_unit_disc():
    p = sample_sphere_layer(Instance([0.3, -0.2]), 0.0, 1.0, 5000, 1)
    assert np.all(np.linalg.norm(p - [0.3, -0.2], axis=1) <= 1.0)


def test_sphere_thin_shell():
    a1 = 0.7
    a0 = a1 - 1e-12
    p = sample_sphere_layer(np.zeros(5), a0, a1, 2000, 3)
    r = np.linalg.norm(p, axis=1)
    assert np.all(r >= a0 - 1e-15) and np.all(r <= a1 + 1e-15)


def test_sphere_radial_cdf_closed_form_and_rejection():
    # closed form: (0.75^2 - 0.5^2) / (1 - 0.5^2)
    expected = (0.75**2 - 0.5**2) / (1.0 - 0.5**2)
    assert expected == pytest.approx(0.41667, abs=1e-5)
    r = np.linalg.norm(sample_sphere_layer(np.zeros(2), 0.5, 1.0, 20000, 11), axis=1)
    assert np.mean(r <= 0.75) == pytest.approx(expected, abs=0.01)

    def in_layer(p):
        rr = np.linalg.norm(p, axis=1)
        return (rr >= 0.5) & (rr <= 1.0)

    ref = box_rejection(make_rng(12), -np.ones(2), np.ones(2), in_layer, 20000)
    assert np.mean(np.linalg.norm(ref, axis=1) <= 0.75) == pytest.approx(expected, abs=0.01)


@pytest.mark.parametrize("a0, a1", [(1.0, 1.0), (2.0, 1.0), (-0.1, 1.0)])
def test_sphere_rejects_bad_radii(a0, a1):
    with pytest.raises(ValueError):
        sample_sphere_layer(np.zeros(2), a0, a1, 10, 0)


def test_sphere_rejects_empty_center():
    with pytest.raises(ValueError):
        sample_sphere_layer(np.zeros(0), 0.0, 1.0, 10, 0)


def test_lambda_zero_ellipsoid_equals_sphere():
    x = Instance([0.2, 0.4, 0.6])
    layer = LayerSpec(x, 0.09, 0.25, 0.0, KnowledgeSet([1], 3))
    a = sample_ellipsoid_layer(layer, 500, 42)
    b = sample_sphere_layer(x, 0.3, 0.5, 500, 42)
    np.testing.assert_array_equal(a, b)


def test_ellipse_containment_example():
    x = Instance([0.1, 0.9])
    layer = LayerSpec(x, 0.0, 1.0, 4.0, KnowledgeSet([0], 2))
    p = sample_ellipsoid_layer(layer, 20000, 5) - x.values
    assert np.all(p[:, 0] ** 2 + 5 * p[:, 1] ** 2 <= 1.0 + 1e-12)
    np.testing.assert_allclose(layer.semi_axes(1.0), [1.0, 1 / np.sqrt(5)])
    assert 1 / np.sqrt(5) == pytest.approx(0.4472, abs=1e-4)


def test_ellipse_cost_cdf_against_rejection_oracle():
    x = Instance([0.0, 0.0])
    E = KnowledgeSet([0], 2)
    spec = CostSpec.kice(E, 4.0)
    layer = LayerSpec(x, 0.25, 1.0, 4.0, E)
    c = cost(spec, x, sample_ellipsoid_layer(layer, 20000, 8))
    assert np.mean(c <= 0.5) == pytest.approx(1 / 3, abs=0.01)

    def in_layer(p):
        cc = cost(spec, x, p)
        return (cc >= 0.25) & (cc <= 1.0)

    half = layer.semi_axes(1.0)
    ref = cost(spec, x, box_rejection(make_rng(9), -half, half, in_layer, 20000))
    assert np.mean(ref <= 0.5) == pytest.approx(1 / 3, abs=0.01)
    grid = np.linspace(0.25, 1.0, 200)
    ecdf = np.searchsorted(np.sort(c), grid, side="right") / c.size
    rcdf = np.searchsorted(np.sort(ref), grid, side="right") / ref.size
    assert np.max(np.abs(ecdf - rcdf)) < 0.02


@pytest.mark.parametrize("d", [2, 5, 13, 30])
@pytest.mark.parametrize("lam", [0.0, 4.0])
def test_uniformity_ks(d, lam):
    E = KnowledgeSet(range(0, d, 2), d)
    layer = LayerSpec(Instance(np.full(d, 0.5)), 0.3, 1.7, lam, E)
    r = transformed_radius(layer, sample_ellipsoid_layer(layer, 20000, 100 + d))
    a0, a1 = np.sqrt(0.3), np.sqrt(1.7)
    res = stats.kstest(r, lambda t: radial_cdf(t, a0, a1, d))
    assert res.pvalue > 0.01


@pytest.mark.parametrize("d", [2, 13])
def test_isotropy(d):
    layer = LayerSpec(Instance(np.zeros(d)), 0.0, 1.0, 6.0, KnowledgeSet([0], d))
    p = sample_ellipsoid_layer(layer, 20000, 21)
    y = p / layer.axis_scale()
    u = y / np.linalg.norm(y, axis=1, keepdims=True)
    assert np.linalg.norm(u.mean(axis=0)) < 0.02


def test_determinism():
    layer = LayerSpec(Instance([0.1, 0.2, 0.3]), 0.5, 0.6, 1.0, KnowledgeSet([2], 3))
    a = sample_ellipsoid_layer(layer, 100, 2024)
    b = sample_ellipsoid_layer(layer, 100, 2024)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_ellipsoid_layer(layer, 100, 2025))


@pytest.mark.parametrize(
    "lo, hi, lam",
    [(0.5, 0.5, 1.0), (-0.1, 1.0, 1.0), (0.0, float("inf"), 1.0), (0.0, 1.0, -1.0)],
)
def test_invalid_layer(lo, hi, lam):
    with pytest.raises(ValueError):
        LayerSpec(Instance([0.0, 0.0]), lo, hi, lam, KnowledgeSet([0], 2))


def test_layer_dimension_mismatch():
    with pytest.raises(ValueError):
        LayerSpec(Instance([0.0, 0.0]), 0.0, 1.0, 1.0, KnowledgeSet([0], 3))


def test_radial_cdf_large_dimension_is_finite():
    v = radial_cdf([3.0, 9.0, 10.0], 3.0, 10.0, 300)
    assert np.all(np.isfinite(v)) and v[0] == 0.0 and v[-1] == 1.0
