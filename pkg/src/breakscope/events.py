"""Annotated event catalog and breakpoint-vs-event classification.

Detected changepoints are matched to the nearest catalog event within a
search horizon and labelled lead, lag, or concurrent by a day tolerance.
Changepoints matching nothing are reported as unmatched: candidate hidden
events the catalog does not know about.
"""
from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import EmptyCatalog, MissingFile

__all__ = [
    "Event",
    "EventCatalog",
    "BreakpointRow",
    "BreakpointReport",
    "default_catalog",
    "load_catalog",
    "catalog_rows",
    "relation_between",
    "classify_breakpoints",
]

RELATIONS = ("lead", "lag", "concurrent", "unmatched")


@dataclass(frozen=True)
class Event:
    symbol: str
    date: dt.date
    description: str
    approximate: bool = False  # date encodes a vaguer public timeframe


@dataclass(frozen=True)
class EventCatalog:
    """Symbol-unique, date-ordered list of annotated calendar events."""

    events: tuple[Event, ...]

    def __post_init__(self):
        if not self.events:
            raise EmptyCatalog("catalog holds no events")
        seen = set()
        for e in self.events:
            if e.symbol in seen:
                raise ValueError(f"duplicate event symbol {e.symbol!r}")
            seen.add(e.symbol)
        for a, b in zip(self.events, self.events[1:]):
            if b.date < a.date:
                raise ValueError(f"event dates must be nondecreasing at {b.symbol}")

    def __len__(self) -> int:
        return len(self.events)

    def by_symbol(self, symbol: str) -> Event:
        for e in self.events:
            if e.symbol == symbol:
                return e
        raise KeyError(symbol)


_D = dt.date

# Bundled default: the thirteen 2021-2022 European energy-crisis milestones
# used throughout the examples. E2 and E8 circulate without an exact day in
# most public accounts; their dates are representative and flagged.
DEFAULT_EVENTS: tuple[Event, ...] = (
    Event("E1", _D(2021, 10, 13),
          "European Commission energy-price toolbox communication"),
    Event("E2", _D(2021, 10, 15),
          "Gazprom stops selling volumes at EU gas hubs; only long-term "
          "pipeline contracts remain", approximate=True),
    Event("E3", _D(2021, 11, 10),
          "US reports unusual Russian troop movements near Ukraine"),
    Event("E4", _D(2021, 12, 17),
          "Russia demands a ban on Ukraine joining NATO"),
    Event("E5", _D(2022, 1, 17),
          "Russian troops arrive in Belarus for military exercises"),
    Event("E6", _D(2022, 2, 24),
          "Russia invades Ukraine; sanctions include SWIFT removals and a "
          "central-bank reserve freeze"),
    Event("E7", _D(2022, 4, 27),
          "Gazprom cuts gas supplies to Bulgaria and Poland"),
    Event("E8", _D(2022, 5, 18),
          "European Commission presents the REPowerEU plan to phase out "
          "Russian energy imports", approximate=True),
    Event("E9", _D(2022, 6, 23),
          "Germany raises its gas emergency plan to the second alert level"),
    Event("E10", _D(2022, 7, 21),
          "New EU sanctions package in response to the invasion"),
    Event("E11", _D(2022, 8, 30),
          "Nord Stream taken out of operation"),
    Event("E12", _D(2022, 9, 14),
          "EU announces a windfall tax on energy companies"),
    Event("E13", _D(2022, 11, 1),
          "Member-state deadline for the 80% minimum gas-storage filling "
          "target"),
)


def default_catalog() -> EventCatalog:
    return EventCatalog(DEFAULT_EVENTS)


def load_catalog(path: str | os.PathLike) -> EventCatalog:
    """Read a catalog from a JSON list of {symbol, date, description, approximate?}."""
    if not os.path.exists(path):
        raise MissingFile(str(path))
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValueError("catalog file must hold a JSON list")
    events = []
    for i, row in enumerate(raw):
        try:
            events.append(Event(
                str(row["symbol"]),
                dt.date.fromisoformat(row["date"]),
                str(row.get("description", "")),
                bool(row.get("approximate", False)),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad catalog entry {i}: {exc}") from exc
    return EventCatalog(tuple(events))


def catalog_rows(catalog: EventCatalog) -> list[dict]:
    """The JSON-file representation of a catalog (round-trips load_catalog)."""
    out = []
    for e in catalog.events:
        row = {"symbol": e.symbol, "date": e.date.isoformat(),
               "description": e.description}
        if e.approximate:
            row["approximate"] = True
        out.append(row)
    return out


def relation_between(detected: dt.date, event: dt.date,
                     tol_days: int = 3) -> tuple[str, int]:
    """Label one (changepoint, event) pair.

    The signed offset is detected minus event in days; within tol_days the
    pair is concurrent, an earlier changepoint leads, a later one lags.
    """
    if tol_days < 0:
        raise ValueError("tol_days must be >= 0")
    offset = (detected - event).days
    if abs(offset) <= tol_days:
        return "concurrent", offset
    return ("lead" if offset < 0 else "lag"), offset


@dataclass(frozen=True)
class BreakpointRow:
    """One detected changepoint with its event match, if any."""

    date: dt.date
    probability: float
    event: str | None
    relation: str
    offset_days: int | None

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        if (self.event is None) != (self.relation == "unmatched"):
            raise ValueError("event symbol and relation disagree")


@dataclass(frozen=True)
class BreakpointReport:
    markets: dict
    tol_days: int = 3
    max_match_days: int = 30
    meta: dict = field(default_factory=dict, compare=False)


def _coerce_cp(cp) -> tuple[dt.date, float]:
    if hasattr(cp, "date") and hasattr(cp, "probability"):
        return cp.date, float(cp.probability)
    d, p = cp
    return d, float(p)


def _classify_one(cps, catalog: EventCatalog, tol_days: int,
                  max_match_days: int) -> tuple[BreakpointRow, ...]:
    rows = []
    for cp in cps:
        date, prob = _coerce_cp(cp)
        best = None
        for e in catalog.events:
            gap = abs((date - e.date).days)
            if gap > max_match_days:
                continue
            # ties between equally near events resolve to the earlier one
            if best is None or gap < best[0]:
                best = (gap, e)
        if best is None:
            rows.append(BreakpointRow(date, prob, None, "unmatched", None))
        else:
            rel, off = relation_between(date, best[1].date, tol_days)
            rows.append(BreakpointRow(date, prob, best[1].symbol, rel, off))
    rows.sort(key=lambda r: r.date)
    return tuple(rows)


def classify_breakpoints(cps, catalog: EventCatalog, tol_days: int = 3,
                         max_match_days: int = 30) -> BreakpointReport:
    """Match changepoints to their nearest events and label the timing.

    `cps` is either one market's changepoint sequence (items expose .date and
    .probability, or are (date, probability) pairs) or a mapping from market
    id to such a sequence. Unmatched rows mark candidate hidden events.
    """
    if len(catalog) == 0:  # EventCatalog forbids this, but guard plain lists
        raise EmptyCatalog("catalog holds no events")
    if isinstance(cps, Mapping):
        markets = {mid: _classify_one(seq, catalog, tol_days, max_match_days)
                   for mid, seq in cps.items()}
    else:
        markets = {"series": _classify_one(cps, catalog, tol_days, max_match_days)}
    return BreakpointReport(markets, tol_days, max_match_days)
