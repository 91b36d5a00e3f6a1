import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from breakscope.errors import (
    DegenerateDimension,
    EmptyTable,
    NoOverlap,
    NotNormalized,
    TooShort,
    WindowTooLong,
)
from breakscope.infotheory import (
    DiscreteJoint,
    binned_mi,
    conditional_entropy,
    entropy,
    joint_entropy,
    knn_cmi,
    knn_mi,
    mi_decoupling,
    mi_knn,
    mutual_information_discrete,
    rolling_mi,
)
from breakscope.series import RollingSeries, RollingWindowSpec
from breakscope.synth import brute_force_mi, gen_gaussian_pair
from util import daily_axis, series_from


def random_joint(rng, shape):
    return DiscreteJoint.from_counts(rng.integers(1, 40, size=shape))


def test_entropy_uniform():
    assert entropy(np.full(8, 1 / 8)) == pytest.approx(np.log(8), abs=1e-12)


def test_entropy_ignores_zero_cells():
    assert entropy([0.5, 0.5, 0.0]) == pytest.approx(np.log(2), abs=1e-12)


def test_discrete_joint_validation():
    with pytest.raises(NotNormalized):
        entropy([0.5, 0.6])
    with pytest.raises(EmptyTable):
        DiscreteJoint.from_counts(np.zeros((2, 2)))
    with pytest.raises(EmptyTable):
        DiscreteJoint.from_counts(np.array([[1.0, -2.0], [0.0, 3.0]]))


def test_mi_identities_on_random_tables():
    rng = np.random.default_rng(17)
    for _ in range(25):
        j = random_joint(rng, rng.integers(2, 6, size=2))
        i = mutual_information_discrete(j).value
        hx = entropy(j.joint_p().sum(axis=1))
        hy = entropy(j.joint_p().sum(axis=0))
        assert i == pytest.approx(hx - conditional_entropy(j), abs=1e-12)
        assert i == pytest.approx(hx + hy - joint_entropy(j), abs=1e-12)
        assert i >= -1e-12


def test_mi_discrete_symmetry():
    rng = np.random.default_rng(5)
    j = random_joint(rng, (4, 3))
    jt = DiscreteJoint.from_counts(j.counts.T)
    assert mutual_information_discrete(j).value == pytest.approx(
        mutual_information_discrete(jt).value, abs=1e-12)


def test_mi_discrete_independent_product_zero():
    p = np.outer([0.3, 0.7], [0.25, 0.25, 0.5])
    j = DiscreteJoint.from_counts(p * 1000)
    assert mutual_information_discrete(j).value == pytest.approx(0.0, abs=1e-12)


def test_knn_mi_independent_near_zero():
    x, y = gen_gaussian_pair(0.0, 4000, seed=1)
    val, diag = knn_mi(x, y, k=4)
    assert abs(val) < 0.02
    assert diag["mean_nx"] > 4


def test_knn_mi_gaussian_single_point():
    x, y = gen_gaussian_pair(0.6, 4000, seed=2)
    truth = -0.5 * np.log(1 - 0.36)
    val, _ = knn_mi(x, y, k=4)
    assert abs(val - truth) < 0.04


def test_knn_mi_deterministic():
    x, y = gen_gaussian_pair(0.4, 800, seed=3)
    # tie-breaking jitter is keyed on content and seed, so repeat calls agree
    assert knn_mi(x, y)[0] == knn_mi(x, y)[0]
    assert knn_mi(x, y, seed=1)[0] == knn_mi(x, y, seed=1)[0]


def test_knn_mi_invariant_under_monotone_map():
    # rank-based estimator property: strictly monotone reparameterizations
    # barely move the estimate
    x, y = gen_gaussian_pair(0.5, 3000, seed=4)
    a = knn_mi(x, y)[0]
    b = knn_mi(np.exp(x), y**3 + 2 * y, k=4)[0]
    assert abs(a - b) < 0.03


def test_knn_mi_rejects_constant_column():
    with pytest.raises(DegenerateDimension):
        knn_mi(np.ones(100), np.arange(100.0))


def test_knn_mi_length_mismatch():
    with pytest.raises(ValueError):
        knn_mi(np.arange(50.0), np.arange(60.0))


def test_knn_cmi_reduces_to_mi_without_conditioner():
    x, y = gen_gaussian_pair(0.5, 500, seed=5)
    assert knn_cmi(x, y, None) == knn_mi(x, y)[0]


def test_knn_cmi_blocks_common_driver():
    # x and y only co-move through z, so conditioning on z kills the MI
    rng = np.random.default_rng(6)
    z = rng.standard_normal(4000)
    x = z + 0.3 * rng.standard_normal(4000)
    y = z + 0.3 * rng.standard_normal(4000)
    raw = knn_mi(x, y)[0]
    cond = knn_cmi(x, y, z)
    assert raw > 0.5
    assert abs(cond) < 0.1


def test_mi_knn_estimate_fields():
    x, y = gen_gaussian_pair(0.3, 600, seed=7)
    est = mi_knn(x, y, k=6, seed=1)
    assert est.estimator == "knn"
    assert est.params == {"k": 6, "seed": 1}
    assert not est.degenerate


def test_mi_knn_guards():
    with pytest.raises(TooShort):
        mi_knn(np.arange(10.0), np.arange(10.0))
    x, y = gen_gaussian_pair(0.3, 100, seed=8)
    with pytest.raises(ValueError):
        mi_knn(x, y, k=50)


def test_mi_knn_flags_functional_dependence():
    x = np.linspace(0, 1, 400)
    est = mi_knn(x, 2 * x, k=4)
    assert est.degenerate


def test_binned_mi_matches_table_on_balanced_data():
    rng = np.random.default_rng(9)
    T = np.zeros((4, 4))
    for _ in range(25):
        T[np.arange(4), rng.permutation(4)] += 1
    xs, ys = [], []
    for i in range(4):
        for j in range(4):
            xs += [float(i)] * int(T[i, j])
            ys += [float(j)] * int(T[i, j])
    order = rng.permutation(len(xs))
    est = binned_mi(np.array(xs)[order], np.array(ys)[order], bins=4)
    assert est.value == pytest.approx(brute_force_mi(T), abs=1e-12)
    assert est.estimator == "binned"


def test_binned_mi_guards():
    with pytest.raises(TooShort):
        binned_mi(np.arange(10.0), np.arange(10.0))
    with pytest.raises(DegenerateDimension):
        binned_mi(np.ones(50), np.arange(50.0))


def test_rolling_mi_window_count_and_id():
    a = series_from(gen_gaussian_pair(0.5, 200, seed=10)[0], sid="a")
    b = series_from(gen_gaussian_pair(0.5, 200, seed=10)[1], sid="b")
    out = rolling_mi(a, b, RollingWindowSpec(60, 10))
    assert out.source_id == "a~b"
    assert out.statistic == "mi_knn"
    assert len(out.points) == (200 - 60) // 10 + 1


def test_rolling_mi_aligns_on_shared_dates():
    x, y = gen_gaussian_pair(0.5, 120, seed=11)
    a = series_from(x, sid="a")
    b = series_from(y, sid="b", start=dt.date(2020, 1, 21))
    out = rolling_mi(a, b, RollingWindowSpec(60, 20))
    assert len(out.points) == (100 - 60) // 20 + 1


def test_rolling_mi_binned_estimator_label():
    x, y = gen_gaussian_pair(0.2, 150, seed=12)
    out = rolling_mi(series_from(x, sid="a"), series_from(y, sid="b"),
                     RollingWindowSpec(80, 40), estimator="binned")
    assert out.statistic == "mi_binned"


def test_rolling_mi_guards():
    x, y = gen_gaussian_pair(0.2, 80, seed=13)
    a, b = series_from(x, sid="a"), series_from(y, sid="b")
    with pytest.raises(NoOverlap):
        rolling_mi(a, series_from(y, sid="b", start=dt.date(2021, 1, 1)))
    with pytest.raises(WindowTooLong):
        rolling_mi(a, b, RollingWindowSpec(100, 1))
    with pytest.raises(ValueError):
        rolling_mi(a, b, RollingWindowSpec(60, 1), estimator="wavelet")


def make_curve(sid, values, start=dt.date(2021, 1, 1)):
    dates = daily_axis(len(values), start)
    return RollingSeries(sid, "mi_knn", tuple(zip(dates, values)),
                         RollingWindowSpec(60, 1), ())


def test_mi_decoupling_detects_onset():
    n = 160
    base = np.full(n, 0.5)
    other = base.copy()
    # equal up to index 99, then drifting apart linearly
    other[100:] = 0.5 + 0.02 * np.arange(1, n - 99)
    events = mi_decoupling(make_curve("a", base), make_curve("b", other),
                           gap_threshold=0.1, run_len=5)
    assert len(events) == 1
    first_above = 100 + int(np.argmax(0.02 * np.arange(1, n - 99) > 0.1))
    assert events[0].onset == dt.date(2021, 1, 1) + dt.timedelta(days=first_above)
    assert events[0].peak_date == dt.date(2021, 1, 1) + dt.timedelta(days=n - 1)


def test_mi_decoupling_short_runs_ignored():
    gap = np.zeros(40)
    gap[10:13] = 1.0  # three-step blip, below run_len
    events = mi_decoupling(make_curve("a", np.zeros(40)), make_curve("b", gap),
                           gap_threshold=0.1, run_len=5)
    assert events == []


def test_mi_decoupling_requires_overlap():
    a = make_curve("a", np.zeros(10))
    b = make_curve("b", np.zeros(10), start=dt.date(2022, 1, 1))
    with pytest.raises(NoOverlap):
        mi_decoupling(a, b)


@settings(max_examples=40)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 10_000))
def test_random_tables_identity_property(rx, ry, seed):
    rng = np.random.default_rng(seed)
    j = random_joint(rng, (rx, ry))
    i = mutual_information_discrete(j).value
    hx = entropy(j.joint_p().sum(axis=1))
    assert i == pytest.approx(hx - conditional_entropy(j), abs=1e-12)
    # conditioning cannot raise entropy
    assert conditional_entropy(j) <= hx + 1e-12


@settings(max_examples=30)
@given(st.integers(3, 6), st.integers(2, 5), st.integers(0, 10_000))
def test_merging_categories_cannot_raise_mi(rx, ry, seed):
    rng = np.random.default_rng(seed)
    j = random_joint(rng, (rx, ry))
    merged = j.counts.copy()
    merged[0] += merged[1]
    jm = DiscreteJoint.from_counts(np.delete(merged, 1, axis=0))
    assert mutual_information_discrete(jm).value <= \
        mutual_information_discrete(j).value + 1e-12
