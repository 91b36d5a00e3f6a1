import datetime as dt
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from breakscope.beast import ExtractedChangepoint, Hyperparams, run_sampler
from breakscope.errors import EmptyCatalog, MissingFile, PartialFailure
from breakscope.events import (
    BreakpointRow,
    Event,
    EventCatalog,
    catalog_rows,
    classify_breakpoints,
    default_catalog,
    load_catalog,
    relation_between,
)
from breakscope.pmime import pmime
from breakscope.report import (
    REPORT_SECTIONS,
    SCHEMA_VERSION,
    assemble_report,
    beast_curve_table,
    beast_ncp_table,
    breakpoint_report_to_dict,
    breakpoint_rows,
    changepoint_rows,
    fmt9,
    jsonable,
    matrix_rows,
    panel_rows,
    pmime_to_dict,
    rolling_rows,
    rolling_to_dict,
    safe_name,
    summary_to_dict,
    write_csv,
    write_json,
)
from breakscope.series import Panel, RollingSeries, RollingWindowSpec
from breakscope.synth import gen_var_coupled, gen_white_noise
from util import series_from

D = dt.date

GOLDEN_DATES = {
    "E1": D(2021, 10, 13),
    "E2": D(2021, 10, 15),
    "E3": D(2021, 11, 10),
    "E4": D(2021, 12, 17),
    "E5": D(2022, 1, 17),
    "E6": D(2022, 2, 24),
    "E7": D(2022, 4, 27),
    "E8": D(2022, 5, 18),
    "E9": D(2022, 6, 23),
    "E10": D(2022, 7, 21),
    "E11": D(2022, 8, 30),
    "E12": D(2022, 9, 14),
    "E13": D(2022, 11, 1),
}


# ---------------------------------------------------------------------------
# catalog


def test_default_catalog_golden_dates():
    cat = default_catalog()
    assert len(cat) == 13
    assert [e.symbol for e in cat.events] == [f"E{i}" for i in range(1, 14)]
    for e in cat.events:
        assert e.date == GOLDEN_DATES[e.symbol]
        assert e.description
    # only the two events without an exact public day are flagged
    assert {e.symbol for e in cat.events if e.approximate} == {"E2", "E8"}


def test_catalog_symbol_lookup():
    cat = default_catalog()
    assert cat.by_symbol("E6").date == D(2022, 2, 24)
    with pytest.raises(KeyError):
        cat.by_symbol("E99")


def test_catalog_validation():
    e1 = Event("A", D(2022, 1, 1), "first")
    e2 = Event("B", D(2022, 2, 1), "second")
    with pytest.raises(EmptyCatalog):
        EventCatalog(())
    with pytest.raises(ValueError):
        EventCatalog((e1, Event("A", D(2022, 3, 1), "dup")))
    with pytest.raises(ValueError):
        EventCatalog((e2, e1))


def test_load_catalog_round_trip(tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(json.dumps(catalog_rows(default_catalog())), encoding="utf-8")
    loaded = load_catalog(path)
    assert loaded.events == default_catalog().events


def test_load_catalog_defaults_and_errors(tmp_path):
    path = tmp_path / "cat.json"
    path.write_text(json.dumps([{"symbol": "X", "date": "2022-05-01"}]),
                    encoding="utf-8")
    cat = load_catalog(path)
    assert cat.events[0].description == ""
    assert cat.events[0].approximate is False

    with pytest.raises(MissingFile):
        load_catalog(tmp_path / "nope.json")
    path.write_text(json.dumps({"symbol": "X"}), encoding="utf-8")
    with pytest.raises(ValueError):
        load_catalog(path)
    path.write_text(json.dumps([{"symbol": "X", "date": "not-a-date"}]),
                    encoding="utf-8")
    with pytest.raises(ValueError, match="entry 0"):
        load_catalog(path)


# ---------------------------------------------------------------------------
# relation labelling


def test_relation_between_boundaries():
    base = D(2022, 3, 10)
    for off in range(-3, 4):
        rel, got = relation_between(base + dt.timedelta(days=off), base, 3)
        assert rel == "concurrent" and got == off
    assert relation_between(base - dt.timedelta(days=4), base, 3) == ("lead", -4)
    assert relation_between(base + dt.timedelta(days=4), base, 3) == ("lag", 4)
    assert relation_between(base + dt.timedelta(days=1), base, 0) == ("lag", 1)
    assert relation_between(base, base, 0) == ("concurrent", 0)
    with pytest.raises(ValueError):
        relation_between(base, base, -1)


def test_golden_market_event_pairs():
    # annotated pairs from the bundled crisis catalog: a Romanian breakpoint
    # trailing the price toolbox, a Czech one ahead of the Belarus exercises,
    # and a Czech one on the windfall-tax announcement
    cat = default_catalog()
    assert relation_between(D(2021, 10, 20), cat.by_symbol("E1").date) == ("lag", 7)
    assert relation_between(D(2022, 1, 1), cat.by_symbol("E5").date) == ("lead", -16)
    assert relation_between(D(2022, 9, 13), cat.by_symbol("E12").date) == ("concurrent", -1)


# ---------------------------------------------------------------------------
# breakpoint classification


def test_classify_picks_nearest_event():
    report = classify_breakpoints([(D(2021, 10, 20), 0.8)], default_catalog())
    row = report.markets["series"][0]
    assert row.event == "E2"  # 5 days beats E1's 7
    assert row.relation == "lag"
    assert row.offset_days == 5
    assert row.probability == pytest.approx(0.8)


def test_classify_tie_resolves_to_earlier_event():
    # 2022-02-05 sits 19 days from both E5 and E6
    report = classify_breakpoints([(D(2022, 2, 5), 0.5)], default_catalog())
    row = report.markets["series"][0]
    assert row.event == "E5"
    assert row.relation == "lag" and row.offset_days == 19


def test_classify_unmatched_beyond_horizon():
    report = classify_breakpoints([(D(2023, 6, 1), 0.9)], default_catalog())
    row = report.markets["series"][0]
    assert row.event is None
    assert row.relation == "unmatched"
    assert row.offset_days is None

    tight = classify_breakpoints([(D(2021, 10, 20), 0.9)], default_catalog(),
                                 max_match_days=4)
    assert tight.markets["series"][0].relation == "unmatched"


def test_classify_accepts_objects_and_mappings():
    cp = ExtractedChangepoint(D(2022, 9, 13), 430, 0.72)
    report = classify_breakpoints(
        {"CZ": (cp,), "RO": [(D(2021, 10, 20), 0.61)]},
        default_catalog())
    assert set(report.markets) == {"CZ", "RO"}
    cz = report.markets["CZ"][0]
    assert (cz.event, cz.relation, cz.offset_days) == ("E12", "concurrent", -1)
    assert cz.probability == pytest.approx(0.72)
    assert report.tol_days == 3 and report.max_match_days == 30


def test_classify_rows_sorted_by_date():
    report = classify_breakpoints(
        [(D(2022, 9, 13), 0.7), (D(2021, 10, 20), 0.6)], default_catalog())
    dates = [r.date for r in report.markets["series"]]
    assert dates == sorted(dates)


def test_breakpoint_row_validation():
    with pytest.raises(ValueError):
        BreakpointRow(D(2022, 1, 1), 0.5, "E1", "sideways", 2)
    with pytest.raises(ValueError):
        BreakpointRow(D(2022, 1, 1), 0.5, None, "lag", 5)
    with pytest.raises(ValueError):
        BreakpointRow(D(2022, 1, 1), 0.5, "E1", "unmatched", None)


# ---------------------------------------------------------------------------
# cell and document formatting


def test_fmt9_cells():
    assert fmt9(None) == ""
    assert fmt9(True) == "true" and fmt9(False) == "false"
    assert fmt9(3) == "3"
    assert fmt9(np.int64(-17)) == "-17"
    assert fmt9(0.1234567891234) == "0.123456789"
    assert fmt9(np.float64(2.0)) == "2"
    assert fmt9(float("nan")) == "" and fmt9(float("inf")) == ""
    assert fmt9(D(2022, 3, 1)) == "2022-03-01"
    assert fmt9("it/x") == "it/x"


def test_jsonable_rounding_and_types():
    doc = jsonable({
        "pi": math.pi,
        "arr": np.array([1.0, 0.5]),
        "date": D(2021, 12, 31),
        "tup": (1, None, "s"),
        "np_bool_like": np.int32(4),
        "nan": float("nan"),
    })
    assert doc["pi"] == 3.14159265
    assert doc["arr"] == [1.0, 0.5]
    assert doc["date"] == "2021-12-31"
    assert doc["tup"] == [1, None, "s"]
    assert doc["np_bool_like"] == 4
    assert doc["nan"] is None
    with pytest.raises(TypeError):
        jsonable(object())


@given(st.floats(min_value=-1e12, max_value=1e12,
                 allow_nan=False, allow_infinity=False))
@settings(max_examples=80, deadline=None)
def test_nine_digit_cells_parse_back(x):
    if x != 0:
        assert abs(float(fmt9(x)) - x) <= abs(x) * 1e-8
    else:
        assert float(fmt9(x)) == 0.0


def test_write_json_deterministic(tmp_path):
    doc = {"b": [1.0, math.pi], "a": {"z": D(2022, 1, 1), "y": None}}
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_json(p1, doc)
    write_json(p2, doc)
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text(encoding="utf-8")
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')  # sorted keys
    assert json.loads(text)["b"][1] == 3.14159265


def test_write_csv_formats_cells(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["id", "date", "value", "flag"],
              [["a", D(2022, 1, 2), 0.123456789123, True],
               ["b", D(2022, 1, 3), None, False]])
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[0] == "id,date,value,flag"
    assert lines[1] == "a,2022-01-02,0.123456789,true"
    assert lines[2] == "b,2022-01-03,,false"
    assert lines[3] == ""


def test_safe_name():
    assert safe_name("USD/RUB") == "USD_RUB"
    assert safe_name("gas spot (TTF)") == "gas_spot_TTF"
    assert safe_name("...") == "series"
    assert safe_name("ok-1.2_x") == "ok-1.2_x"


# ---------------------------------------------------------------------------
# tabular serializers


def test_panel_and_matrix_rows():
    a = series_from([1.0, 2.0, 3.0], sid="a")
    b = series_from([4.0, 5.0, 6.0], sid="b")
    panel = Panel.align([a, b])
    header, rows = panel_rows(panel)
    assert header == ["date", "a", "b"]
    assert rows[0] == [panel.date_axis[0], 1.0, 4.0]
    assert len(rows) == 3

    rows = matrix_rows(np.array([[0.0, 0.5], [0.25, 0.0]]), ["a", "b"])
    assert rows == [["a", "a", 0.0], ["a", "b", 0.5],
                    ["b", "a", 0.25], ["b", "b", 0.0]]


def test_rolling_serializers():
    rs = RollingSeries("gas", "ghe_q1",
                       ((D(2022, 1, 10), 0.44), (D(2022, 1, 20), 0.52)),
                       RollingWindowSpec(window_len=10, step=10),
                       gaps=((D(2022, 1, 30), "window variance is zero"),))
    rows = rolling_rows(rs)
    assert rows == [["gas", D(2022, 1, 10), "ghe_q1", 0.44],
                    ["gas", D(2022, 1, 20), "ghe_q1", 0.52]]
    assert rolling_rows(rs, source="gas~el")[0][0] == "gas~el"
    doc = rolling_to_dict(rs)
    assert doc["window_len"] == 10 and doc["step"] == 10
    assert doc["points"] == [[D(2022, 1, 10), 0.44], [D(2022, 1, 20), 0.52]]
    assert doc["gaps"] == [[D(2022, 1, 30), "window variance is zero"]]
    jsonable(doc)  # must already be reducible


def test_summary_exports_are_jsonable():
    summary = run_sampler(series_from(gen_white_noise(300, seed=2)),
                          Hyperparams(seed=1, season_mode="none",
                                      samples=800, burn_in=200, chains=2))
    doc = jsonable(summary_to_dict(summary))
    assert doc["series_id"] == "s"
    assert doc["n"] == 300
    assert doc["median_ncp"] == 0

    header, rows = beast_curve_table(summary)
    assert len(header) == 15 and len(rows) == 300
    jsonable(rows)
    header, rows = beast_ncp_table(summary)
    assert header == ["k", "p_trend", "p_seasonal", "p_total_ge_k"]
    assert len(rows) == len(summary.cumulative_ncp_dist)
    assert changepoint_rows([summary]) == []


def test_pmime_export_is_jsonable():
    panel = gen_var_coupled(np.array([[0.0, 0.0], [0.8, 0.0]]),
                            noise_sd=1.0, n=300, seed=5)
    result = pmime(panel, l_max=2, n_surrogates=30, seed=1)
    doc = jsonable(pmime_to_dict(result))
    assert doc["ids"] == list(panel.ids)
    assert len(doc["matrix"]) == 2
    assert len(doc["embeddings"]) == 2
    for emb in doc["embeddings"]:
        assert set(emb) == {"target", "selected", "cycle_gains", "stop_reason"}
    assert all("->" in key for key in doc["diagnostics"])


def test_breakpoint_report_exports():
    cat = default_catalog()
    report = classify_breakpoints(
        {"RO": [(D(2021, 10, 20), 0.61)],
         "CZ": [(D(2022, 9, 13), 0.72), (D(2023, 6, 1), 0.4)]},
        cat)
    rows = breakpoint_rows(report, cat)
    assert [r[0] for r in rows] == ["CZ", "CZ", "RO"]  # market-sorted
    assert rows[0][3] == "E12" and rows[0][4] == D(2022, 9, 14)
    assert rows[1][3] == "" and rows[1][4] is None
    doc = breakpoint_report_to_dict(report, cat)
    assert doc["tol_days"] == 3
    assert len(doc["catalog"]) == 13
    assert doc["markets"]["CZ"][0]["relation"] == "concurrent"
    jsonable(doc)


# ---------------------------------------------------------------------------
# report assembly


def test_assemble_report_writes_document_and_manifest(tmp_path):
    out = tmp_path / "out"
    doc = assemble_report(
        {"hurst": {"h": 0.5}, "mi": None},
        out,
        csv_tables={"hurst.csv": (["id", "h"], [["a", 0.5]], "GHE estimates")},
        errors={"mi": "window too long"})
    assert doc["schema_version"] == SCHEMA_VERSION
    assert set(doc["sections"]) == {"hurst"}
    assert doc["missing_sections"] == [s for s in REPORT_SECTIONS if s != "hurst"]
    assert doc["section_errors"] == {"mi": "window too long"}
    assert doc["manifest"] == [{"file": "hurst.csv", "contents": "GHE estimates"}]
    assert (out / "report.json").exists()
    assert (out / "hurst.csv").read_text(encoding="utf-8") == "id,h\na,0.5\n"

    again = tmp_path / "again"
    assemble_report({"hurst": {"h": 0.5}, "mi": None}, again,
                    csv_tables={"hurst.csv": (["id", "h"], [["a", 0.5]],
                                              "GHE estimates")},
                    errors={"mi": "window too long"})
    assert (out / "report.json").read_bytes() == (again / "report.json").read_bytes()


def test_assemble_report_all_sections_missing(tmp_path):
    with pytest.raises(PartialFailure) as exc:
        assemble_report({"hurst": None, "unknown": {"x": 1}}, tmp_path)
    assert exc.value.missing == list(REPORT_SECTIONS)
    assert "missing report sections" in str(exc.value)
    assert not (tmp_path / "report.json").exists()
