import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kice.core import Instance, KnowledgeSet, Status
from kice.datasets import make_half_moons, normalize, split
from kice.framework import CostSpec, Maximum, Minimum, penalty_sq_euclid
from kice.models import PredicateClassifier, constant, half_plane, predict, train_kernel_classifier
from kice.search import Query, SearchConfig, growing_spheres, kice, user_restricted_search

FAST = SearchConfig(n_per_layer=500, max_layers=200)
DIAG = half_plane([1.0, 1.0], 1.0)


def query(x, f, known, lam=0.0):
    return Query(Instance(x), f, CostSpec.kice(KnowledgeSet(known, len(x)), lam))


@pytest.fixture(scope="module")
def moons():
    train, test = split(make_half_moons(400, 0.1, 0))
    train, test = normalize(train, test)
    return train_kernel_classifier(train.X, train.y, 20.0, 1e-2), test


def test_reference_matches_half_plane_projection():
    # the closest opposite-class point is the projection (0.5, 0.5)
    r = growing_spheres(query([0.0, 0.0], DIAG, []), FAST)
    assert r.found and r.penalty == pytest.approx(0.5, rel=0.05)
    assert r.penalty >= 0.5


def test_kice_lambda_zero_matches_projection():
    r = kice(query([0.0, 0.0], DIAG, [], lam=0.0), FAST)
    assert r.penalty == pytest.approx(0.5, rel=0.05)


def test_kice_weighted_optimum():
    # minimize a^2 + (1 + lam) b^2 on a + b = 1: a = (1+lam)/(2+lam), cost = (1+lam)/(2+lam)
    lam = 4.0
    r = kice(query([0.0, 0.0], DIAG, [0], lam), FAST)
    assert r.cost == pytest.approx(5 / 6, rel=0.05)
    assert r.point.values[0] > r.point.values[1]


def axis_bisection(f, x, axis, hi=10.0, steps=60):
    """Smallest t >= 0 with f(x + t e_axis) != f(x), assuming one crossing in [0, hi]."""
    x = np.asarray(x, dtype=float)
    base = predict(f, x)
    step = np.eye(x.size)[axis]
    lo = 0.0
    assert predict(f, x + hi * step) != base
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if predict(f, x + mid * step) != base:
            hi = mid
        else:
            lo = mid
    return hi


def test_user_search_matches_axis_bisection():
    x = np.zeros(2)
    t = axis_bisection(DIAG, x, 0)
    assert t == pytest.approx(1.0)
    r = user_restricted_search(query(x, DIAG, [0], lam=4.0), FAST)
    assert r.found
    assert r.penalty == pytest.approx(t**2, rel=0.05)
    assert r.point.values[1] == 0.0 and r.incompatibility == 0.0
    ref = growing_spheres(query(x, DIAG, [0], lam=4.0), FAST)
    assert ref.penalty < r.penalty


def test_constant_classifier_not_found():
    cfg = SearchConfig(n_per_layer=50, max_layers=20)
    r = growing_spheres(query([0.5, 0.5], constant(0, 2), []), cfg)
    assert r.status is Status.NOT_FOUND and r.point is None
    assert r.layers_explored == 20 and r.samples_drawn == 21 * 50


def test_boundary_orthogonal_to_known_axis_not_found():
    f = PredicateClassifier(lambda X: X[:, 0] > 1.0, 2)
    r = user_restricted_search(query([0.0, 0.0], f, [1]), SearchConfig(n_per_layer=100, max_layers=60))
    assert r.status is Status.NOT_FOUND


def test_found_in_initial_solid():
    x = [0.5 - 0.01, 0.5 - 0.01]  # distance to the boundary about 0.014 < sqrt(0.01)
    r = growing_spheres(query(x, DIAG, []), FAST)
    assert r.found and r.layers_explored == 0


def test_user_search_requires_knowledge():
    with pytest.raises(ValueError):
        user_restricted_search(query([0.0, 0.0], DIAG, []), FAST)


@pytest.mark.parametrize("agg", [Minimum(), Maximum()])
def test_kice_rejects_non_weighted_sum(agg):
    spec = CostSpec(KnowledgeSet([0], 2), aggregator=agg)
    with pytest.raises(ValueError, match="WeightedSum"):
        kice(Query(Instance([0.0, 0.0]), DIAG, spec), FAST)


def test_query_dimension_checks():
    with pytest.raises(ValueError):
        query([0.0, 0.0, 0.0], DIAG, [0])


def test_levels_grow_by_eps_until_hit():
    cfg = SearchConfig(n_per_layer=200, eps=0.05, nu_init=0.01)
    r = growing_spheres(query([-0.5, -0.5], DIAG, []), cfg)
    growth = r.levels[: r.layers_explored + 1]
    assert growth[0] == (0.0, 0.01)
    for (lo0, hi0), (lo1, hi1) in zip(growth, growth[1:]):
        assert lo1 == hi0 and hi1 == pytest.approx(hi0 + 0.05)
    assert r.penalty == pytest.approx(2.0, rel=0.05)


def test_lambda_zero_identity(moons):
    clf, test = moons
    for i in range(5):
        x = test.instance(i)
        cfg = FAST.with_seed(i)
        a = kice(Query(x, clf, CostSpec.kice(KnowledgeSet([1], 2), 0.0)), cfg)
        b = growing_spheres(Query(x, clf, CostSpec.kice(KnowledgeSet([1], 2), 3.0)), cfg)
        assert a.point.values.tobytes() == b.point.values.tobytes()
        assert (a.penalty, a.cost, a.samples_drawn) == (b.penalty, b.cost, b.samples_drawn)


def test_full_knowledge_equals_growing_spheres(moons):
    clf, test = moons
    for i in range(5):
        q = Query(test.instance(i), clf, CostSpec.kice(KnowledgeSet.full(2), 4.0))
        a, b = user_restricted_search(q, FAST.with_seed(i)), growing_spheres(q, FAST.with_seed(i))
        assert a == b


def test_determinism(moons):
    clf, test = moons
    q = Query(test.instance(3), clf, CostSpec.kice(KnowledgeSet([0], 2), 4.0))
    assert kice(q, FAST.with_seed(9)) == kice(q, FAST.with_seed(9))


def test_results_flip_the_label(moons):
    clf, test = moons
    for i in range(10):
        q = Query(test.instance(i), clf, CostSpec.kice(KnowledgeSet([1], 2), 4.0))
        for fn in (growing_spheres, user_restricted_search, kice):
            r = fn(q, FAST.with_seed(i))
            if r.found:
                assert predict(clf, r.point.values) != predict(clf, q.x.values)


def test_without_zoom_still_valid():
    cfg = SearchConfig(n_per_layer=1000, zoom_steps=0)
    r = growing_spheres(query([0.0, 0.0], DIAG, []), cfg)
    assert r.penalty == pytest.approx(0.5, rel=0.1)


@settings(max_examples=20, deadline=None)
@given(
    st.floats(-1.0, 0.3), st.floats(-1.0, 0.3), st.floats(0.0, 10.0), st.integers(0, 2**31 - 1)
)
def test_kice_near_closed_form_optimum_on_half_plane(x0, x1, lam, seed):
    x = [x0, x1]
    cfg = SearchConfig(n_per_layer=300, max_layers=200, seed=seed)
    star = kice(query(x, DIAG, [0], lam), cfg)
    # closed-form optimum of a^2 + (1 + lam) b^2 with a + b = gap
    gap = 1.0 - x0 - x1
    best = gap**2 * (1 + lam) / (2 + lam)
    assert star.cost >= best * (1 - 1e-9)
    assert star.cost <= best * 1.1 + 1e-9
    assert star.penalty == pytest.approx(penalty_sq_euclid(Instance(x), star.point))
