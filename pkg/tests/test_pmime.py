import numpy as np
import pytest

from breakscope.errors import (
    DegenerateDimension,
    DimensionalityWarning,
    ShortWindowWarning,
    TooShort,
    WindowTooLong,
)
from breakscope.pmime import (
    LagVariable,
    build_mixed_embedding,
    causality_network,
    network_edge_rows,
    partial_transfer_entropy,
    pmime,
    rolling_pmime,
    transfer_entropy,
)
from breakscope.series import Panel, TimeSeries
from breakscope.synth import gen_var_coupled

PAIR = np.array([[0.0, 0.0], [0.9, 0.0]])
CHAIN = np.array([[0.0, 0.0, 0.0], [0.8, 0.0, 0.0], [0.0, 0.8, 0.0]])


def test_lag_variable_validation():
    with pytest.raises(ValueError):
        LagVariable(-1, 1)
    with pytest.raises(ValueError):
        LagVariable(0, -1)


def test_embedding_first_pick_is_true_driver():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=1024, seed=9500)
    emb = build_mixed_embedding(panel, target=1)
    assert emb.target_index == 1
    assert emb.selected[0] == LagVariable(0, 1)
    assert emb.rule == "surrogate"
    assert len(emb.cycle_gains) == len(emb.selected)
    assert all(g > 0 for g in emb.cycle_gains)


def test_embedding_empty_on_independent_noise():
    empty = 0
    for seed in range(9000, 9004):
        panel = gen_var_coupled(np.zeros((3, 3)), noise_sd=1.0, n=512, seed=seed)
        emb = build_mixed_embedding(panel, target=0, alpha=0.02)
        empty += emb.selected == ()
    assert empty >= 3


def test_embedding_pure_autoregression_selects_own_lags():
    A = np.array([[0.0, 0.0], [0.0, 0.9]])
    panel = gen_var_coupled(A, noise_sd=1.0, n=1024, seed=300)
    emb = build_mixed_embedding(panel, target=1)
    assert emb.selected != ()
    assert all(v.series_index == 1 for v in emb.selected)


def test_transfer_entropy_direction():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=2048, seed=42)
    fwd = transfer_entropy(panel, 0, 1, l=3)
    rev = transfer_entropy(panel, 1, 0, l=3)
    assert fwd > 0.2
    assert rev < 0.05
    assert fwd > rev + 0.15


def test_partial_equals_plain_te_for_two_series():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=1024, seed=7)
    te = transfer_entropy(panel, 0, 1, l=3)
    pte = partial_transfer_entropy(panel, 0, 1, l=3)
    assert pte == te


def test_partial_te_explains_away_indirect_path():
    panel = gen_var_coupled(CHAIN, noise_sd=1.0, n=4096, seed=201)
    indirect = transfer_entropy(panel, 0, 2, l=3)
    direct_given_mid = partial_transfer_entropy(panel, 0, 2, l=3)
    assert indirect > 0.05
    assert direct_given_mid < indirect / 2


def test_te_guards():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=60, seed=1)
    with pytest.raises(TooShort):
        transfer_entropy(panel, 0, 1, l=5)
    flat = TimeSeries.from_arrays("flat", panel.date_axis, np.ones(60))
    bad = Panel((panel.series[0], flat), panel.date_axis)
    with pytest.raises(DegenerateDimension):
        transfer_entropy(bad, 0, 1, l=2)


def test_pte_dimensionality_warning():
    panel = gen_var_coupled(np.zeros((3, 3)), noise_sd=1.0, n=120, seed=2)
    with pytest.warns(DimensionalityWarning):
        partial_transfer_entropy(panel, 0, 1, l=5)


def test_pmime_chain_recovers_direct_edges_only():
    panel = gen_var_coupled(CHAIN, noise_sd=1.0, n=1024, seed=200)
    r = pmime(panel)
    assert r.matrix[0, 1] > 0
    assert r.matrix[1, 2] > 0
    assert r.matrix[0, 2] == 0.0
    assert r.matrix[1, 0] == r.matrix[2, 1] == r.matrix[2, 0] == 0.0
    np.testing.assert_array_equal(r.adjacency, r.matrix > 0)


def test_pmime_matrix_contract():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=512, seed=3)
    r = pmime(panel, n_surrogates=50)
    assert r.matrix.shape == (2, 2)
    assert np.all(r.matrix >= 0) and np.all(r.matrix <= 1)
    assert r.matrix[0, 0] == r.matrix[1, 1] == 0.0
    assert r.ids == ("x1", "x2")
    assert len(r.embeddings) == 2
    diag = r.diagnostics[(0, 1)]
    assert set(diag) == {"numerator", "denominator", "driver_lags"}


def test_pmime_deterministic():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=512, seed=4)
    a = pmime(panel, n_surrogates=50)
    b = pmime(panel, n_surrogates=50)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.embeddings == b.embeddings


def test_pmime_ratio_stop_also_finds_driver():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=1024, seed=9501)
    r = pmime(panel, stop="ratio")
    assert r.matrix[0, 1] > 0


def test_pmime_unknown_stop():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=512, seed=5)
    with pytest.raises(ValueError):
        pmime(panel, stop="oracle")


def test_rolling_pmime_window_layout():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=700, seed=6)
    with pytest.warns(ShortWindowWarning):
        out = rolling_pmime(panel, 300, step=200, n_surrogates=30)
    assert len(out) == 3
    assert out[0][0] == panel.date_axis[299]
    assert out[0][1].matrix.shape == (2, 2)
    with pytest.raises(WindowTooLong):
        rolling_pmime(panel, 800)


def test_causality_network_layout():
    panel = gen_var_coupled(PAIR, noise_sd=1.0, n=1024, seed=9502)
    r = pmime(panel)
    net = causality_network(r)
    assert net["directed"] is True
    assert [n["id"] for n in net["nodes"]] == ["x1", "x2"]
    assert all(e["weight"] > 0 for e in net["links"])
    sources = {(e["source"], e["target"]) for e in net["links"]}
    assert ("x1", "x2") in sources
    # threshold above every weight empties the edge list
    assert causality_network(r, threshold=1.1)["links"] == []
    rows = network_edge_rows(r)
    assert ("x1", "x2") in {(s, t) for s, t, _ in rows}
