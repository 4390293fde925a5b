"""Likert response parsing, reverse coding, missing-data policy and scoring.

Raw responses arrive in long format (one row per answered item).  Scoring
produces per-respondent construct scores: the unweighted mean of coded
items on the raw Likert scale, plus a column-standardized copy that the
structural model consumes.  Column means/sds are kept so interventions can
later be specified in raw instrument units.

Everything here is a pure transformation; no shared mutable state.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError
from .model import InstrumentSpec, canonical_json, default_instrument, instrument_hash, sha256_hex

MISSING_POLICIES = ("per-construct-item-mean", "drop-respondent")


@dataclass(frozen=True)
class SurveyResponse:
    respondent_id: str
    wave: str
    answers: dict[str, float]  # item id -> value (ints on ingest; floats after imputation)

    def key(self) -> tuple[str, str]:
        return (self.respondent_id, self.wave)


def reverse_code(value: float, scale_min: int, scale_max: int) -> float:
    """Mirror an ordinal value: min+max-value.  Involution; midpoint fixed."""
    if not (scale_min <= value <= scale_max):
        raise DataFormatError(f"value {value} outside scale [{scale_min}, {scale_max}]")
    return scale_min + scale_max - value


def parse_responses(
    raw: bytes | str,
    fmt: str = "csv",
    instrument: InstrumentSpec | None = None,
) -> list[SurveyResponse]:
    """Parse long-format CSV (``respondent_id,wave,item_id,value``) or JSON.

    Rejects unknown item ids, out-of-bounds values and duplicate
    (respondent, wave, item) triples.  A bare construct id is accepted in
    place of an item id only for use-role constructs (the direct-usage
    channel); those values may be any finite number.
    """
    inst = instrument or default_instrument()
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    if fmt == "csv":
        triples = _parse_csv(text)
    elif fmt == "json":
        triples = _parse_json(text)
    else:
        raise DataFormatError(f"unknown format {fmt!r}")

    direct_use_ids = {c for c in inst.construct_order if c == "USE"}
    by_key: dict[tuple[str, str], dict[str, float]] = {}
    for lineno, (rid, wave, item_id, value) in enumerate(triples, start=1):
        if not rid:
            raise DataFormatError(f"row {lineno}: empty respondent id")
        if inst.has_item(item_id):
            v = _ordinal(value, lineno)
            if not (inst.scale_min <= v <= inst.scale_max):
                raise DataFormatError(
                    f"row {lineno}: value {v} for {item_id} outside scale [{inst.scale_min}, {inst.scale_max}]"
                )
        elif item_id in direct_use_ids:
            v = float(value)
            if not math.isfinite(v):
                raise DataFormatError(f"row {lineno}: non-finite usage value for {item_id}")
        else:
            raise DataFormatError(f"row {lineno}: unknown item id {item_id!r}")
        answers = by_key.setdefault((rid, wave), {})
        if item_id in answers:
            raise DataFormatError(f"row {lineno}: duplicate answer for ({rid}, {wave}, {item_id})")
        answers[item_id] = v
    return [SurveyResponse(rid, wave, answers) for (rid, wave), answers in by_key.items()]


def _ordinal(value, lineno: int) -> int:
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise DataFormatError(f"row {lineno}: non-numeric value {value!r}") from None
    if f != int(f):
        raise DataFormatError(f"row {lineno}: Likert value must be an integer, got {value!r}")
    return int(f)


def _parse_csv(text: str):
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = list(reader)
    if not rows:
        raise DataFormatError("empty CSV input")
    header = [h.strip().lower() for h in rows[0]]
    if header != ["respondent_id", "wave", "item_id", "value"]:
        raise DataFormatError(f"unexpected CSV header {rows[0]!r}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise DataFormatError(f"row {i}: expected 4 columns, got {len(row)}")
        out.append((row[0].strip(), row[1].strip(), row[2].strip(), row[3].strip()))
    return out


def _parse_json(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}") from None
    if isinstance(doc, dict):
        doc = doc.get("responses", [])
    if not isinstance(doc, list):
        raise DataFormatError("JSON input must be a list of responses")
    out = []
    for entry in doc:
        try:
            rid = entry["respondentId"]
            wave = entry.get("wave", "w1")
            answers = entry["answers"]
        except (TypeError, KeyError) as exc:
            raise DataFormatError(f"response entry missing field: {exc}") from None
        for item_id, value in answers.items():
            out.append((str(rid), str(wave), str(item_id), value))
    return out


def apply_missing_policy(
    responses: list[SurveyResponse],
    instrument: InstrumentSpec | None = None,
    policy: str = "per-construct-item-mean",
) -> tuple[list[SurveyResponse], list[str]]:
    """Fill or drop until no measurable construct has missing items.

    ``per-construct-item-mean``: a missing item is filled with the mean of
    the respondent's answered items for that construct (computed on the
    coded scale, stored un-reversed), provided at least half of the
    construct's items were answered; otherwise the respondent is dropped.
    ``drop-respondent``: any missing item drops the respondent.

    Returns the retained responses and a list of warning strings naming
    dropped respondents.
    """
    if policy not in MISSING_POLICIES:
        raise DataFormatError(f"unknown missing-data policy {policy!r}")
    inst = instrument or default_instrument()
    retained: list[SurveyResponse] = []
    warnings: list[str] = []
    for resp in responses:
        filled = dict(resp.answers)
        ok = True
        for construct in inst.measurable_constructs():
            items = inst.items_for(construct)
            if construct == "USE" and construct in resp.answers:
                continue  # direct-usage channel supersedes USE items
            answered = [it for it in items if it.id in resp.answers]
            missing = [it for it in items if it.id not in resp.answers]
            if not missing:
                continue
            if policy == "drop-respondent" or len(answered) * 2 < len(items):
                ok = False
                break
            coded = [
                reverse_code(resp.answers[it.id], inst.scale_min, inst.scale_max)
                if it.reverse_coded
                else resp.answers[it.id]
                for it in answered
            ]
            fill = float(np.mean(coded))
            for it in missing:
                filled[it.id] = (
                    reverse_code(fill, inst.scale_min, inst.scale_max) if it.reverse_coded else fill
                )
        if ok:
            retained.append(SurveyResponse(resp.respondent_id, resp.wave, filled))
        else:
            warnings.append(f"dropped respondent ({resp.respondent_id}, {resp.wave}): missing items under policy {policy}")
    return retained, warnings


@dataclass(frozen=True)
class ColumnStats:
    mean: float
    sd: float


@dataclass(frozen=True)
class ScoredDataset:
    """Per-respondent construct scores, raw and standardized.

    ``raw`` holds construct means on the instrument scale; ``z`` the
    column-standardized copy (sample sd, n-1).  Constant columns get z=0
    and are listed in ``degenerate``.
    """

    respondents: tuple[str, ...]
    waves: tuple[str, ...]
    constructs: tuple[str, ...]
    raw: np.ndarray
    z: np.ndarray
    stats: dict[str, ColumnStats]
    scale_min: int
    scale_max: int
    instrument_id: str
    degenerate: tuple[str, ...] = ()
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n, k = self.raw.shape
        if len(self.respondents) != n or len(self.constructs) != k or self.z.shape != (n, k):
            raise ValueError("inconsistent dataset shapes")
        self.raw.setflags(write=False)
        self.z.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.respondents)

    def column(self, construct: str) -> int:
        try:
            return self.constructs.index(construct)
        except ValueError:
            raise KeyError(construct) from None

    def z_column(self, construct: str) -> np.ndarray:
        return self.z[:, self.column(construct)]

    def raw_to_z(self, construct: str, value: float) -> float:
        st = self.stats[construct]
        if st.sd == 0:
            return 0.0
        return (value - st.mean) / st.sd


def score_constructs(
    responses: list[SurveyResponse],
    instrument: InstrumentSpec | None = None,
    policy: str = "per-construct-item-mean",
    strict: bool = False,
) -> ScoredDataset:
    """Score constructs as unweighted means of coded items, then standardize.

    Applies the missing-data policy first.  In strict mode a respondent
    that would be dropped raises instead.
    """
    inst = instrument or default_instrument()
    kept, warnings = apply_missing_policy(responses, inst, policy)
    if strict and warnings:
        raise DataFormatError("; ".join(warnings))
    if not kept:
        raise DataFormatError("no respondents remain after missing-data policy")

    constructs = inst.measurable_constructs()
    n, k = len(kept), len(constructs)
    raw = np.empty((n, k), dtype=float)
    for i, resp in enumerate(kept):
        for j, construct in enumerate(constructs):
            if construct == "USE" and construct in resp.answers:
                if any(it.id in resp.answers for it in inst.items_for("USE")):
                    raise DataFormatError(
                        f"respondent ({resp.respondent_id}, {resp.wave}): both direct USE value and USE items present"
                    )
                raw[i, j] = resp.answers[construct]
                continue
            coded = [
                reverse_code(resp.answers[it.id], inst.scale_min, inst.scale_max)
                if it.reverse_coded
                else resp.answers[it.id]
                for it in inst.items_for(construct)
            ]
            raw[i, j] = float(np.mean(coded))

    z = np.zeros_like(raw)
    stats: dict[str, ColumnStats] = {}
    degenerate: list[str] = []
    for j, construct in enumerate(constructs):
        mean = float(np.mean(raw[:, j]))
        sd = float(np.std(raw[:, j], ddof=1)) if n > 1 else 0.0
        stats[construct] = ColumnStats(mean=mean, sd=sd)
        if sd > 0:
            z[:, j] = (raw[:, j] - mean) / sd
        else:
            degenerate.append(construct)

    return ScoredDataset(
        respondents=tuple(r.respondent_id for r in kept),
        waves=tuple(r.wave for r in kept),
        constructs=constructs,
        raw=raw,
        z=z,
        stats=stats,
        scale_min=inst.scale_min,
        scale_max=inst.scale_max,
        instrument_id=instrument_hash(inst),
        degenerate=tuple(degenerate),
        provenance={"policy": policy, "warnings": warnings},
    )


def empty_dataset(instrument: InstrumentSpec | None = None) -> ScoredDataset:
    """A zero-respondent dataset (evidence-free fits sample the prior)."""
    inst = instrument or default_instrument()
    constructs = inst.measurable_constructs()
    k = len(constructs)
    return ScoredDataset(
        respondents=(),
        waves=(),
        constructs=constructs,
        raw=np.empty((0, k)),
        z=np.empty((0, k)),
        stats={c: ColumnStats(mean=0.0, sd=1.0) for c in constructs},
        scale_min=inst.scale_min,
        scale_max=inst.scale_max,
        instrument_id=instrument_hash(inst),
        provenance={"policy": "empty"},
    )


# ---------------------------------------------------------------------------
# Serialization.  Raw and z matrices round-trip bit-exactly through JSON
# (shortest-repr floats parse back to the same doubles).
# ---------------------------------------------------------------------------

def dataset_to_dict(ds: ScoredDataset) -> dict:
    return {
        "v": 1,
        "respondents": list(ds.respondents),
        "waves": list(ds.waves),
        "constructs": list(ds.constructs),
        "rawScores": [[float(x) for x in row] for row in ds.raw],
        "zScores": [[float(x) for x in row] for row in ds.z],
        "columnStats": {c: {"mean": st.mean, "sd": st.sd} for c, st in ds.stats.items()},
        "scale": {"min": ds.scale_min, "max": ds.scale_max},
        "instrumentHash": ds.instrument_id,
        "degenerate": list(ds.degenerate),
        "provenance": ds.provenance,
    }


def dataset_from_dict(doc: dict) -> ScoredDataset:
    try:
        return ScoredDataset(
            respondents=tuple(doc["respondents"]),
            waves=tuple(doc.get("waves", ["w1"] * len(doc["respondents"]))),
            constructs=tuple(doc["constructs"]),
            raw=np.array(doc["rawScores"], dtype=float).reshape(len(doc["respondents"]), len(doc["constructs"])),
            z=np.array(doc["zScores"], dtype=float).reshape(len(doc["respondents"]), len(doc["constructs"])),
            stats={c: ColumnStats(mean=st["mean"], sd=st["sd"]) for c, st in doc["columnStats"].items()},
            scale_min=int(doc["scale"]["min"]),
            scale_max=int(doc["scale"]["max"]),
            instrument_id=doc.get("instrumentHash", ""),
            degenerate=tuple(doc.get("degenerate", [])),
            provenance=doc.get("provenance", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"invalid dataset document: {exc}") from None


def dataset_to_json(ds: ScoredDataset) -> str:
    return canonical_json(dataset_to_dict(ds))


def dataset_from_json(text: str) -> ScoredDataset:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}") from None
    return dataset_from_dict(doc)


def dataset_hash(ds: ScoredDataset) -> str:
    return sha256_hex(dataset_to_json(ds))
