"""Assembly and JSON serialization of the trust report.

The report is kept as plain JSON-compatible values so that writing and
reading it back is lossless.  Top-level keys, in file order::

    accuracy, net_trust_score, conditional_trust, trust_matrix,
    trust_spectrum, demographic_spectra, gaps, config, counts

Undefined values (empty matrix cells, a conditional score with no records,
a percentage whose base is 0) are written as JSON ``null``.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field, fields
from typing import Any, Sequence

from .density import DensityConfig
from .errors import SchemaError, ValidationError
from .trust import (
    AXES,
    SCENARIO_NAMES,
    ScoredPrediction,
    TrustConfig,
    absent_groups,
    conditional_net_trust_scores,
    demographic_trust_spectrum,
    net_trust_score,
    trust_matrix,
    trust_spectrum,
)

REPORT_KEYS = (
    "accuracy",
    "net_trust_score",
    "conditional_trust",
    "trust_matrix",
    "trust_spectrum",
    "demographic_spectra",
    "gaps",
    "config",
    "counts",
)


@dataclass
class TrustReport:
    accuracy: float
    net_trust_score: float
    conditional_trust: dict[str, float | None]
    trust_matrix: dict[str, Any]
    trust_spectrum: list[dict[str, Any]]
    demographic_spectra: dict[str, dict[str, Any]]
    gaps: dict[str, dict[str, Any]]
    config: dict[str, Any] = field(default_factory=dict)
    counts: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrustReport":
        if not isinstance(data, dict):
            raise SchemaError("report must be a JSON object")
        missing = [k for k in REPORT_KEYS if k not in data]
        if missing:
            raise SchemaError(f"report is missing keys: {', '.join(missing)}")
        unknown = [k for k in data if k not in REPORT_KEYS]
        if unknown:
            raise SchemaError(f"report has unknown keys: {', '.join(unknown)}")
        return cls(**{k: data[k] for k in REPORT_KEYS})


def _percent(diff: float, base: float) -> float | None:
    return None if base == 0 else 100.0 * diff / base


def axis_gaps(entries: Sequence[dict[str, Any]]) -> dict[str, Any]:
    """Largest spread and every pairwise difference between group coefficients.

    Percentages are taken relative to the larger of the two coefficients.
    """
    if not entries:
        return {"max_min": None, "pairwise": []}
    hi = max(entries, key=lambda e: e["coefficient"])
    lo = min(entries, key=lambda e: e["coefficient"])
    spread = hi["coefficient"] - lo["coefficient"]
    pairwise = []
    for a, b in itertools.combinations(entries, 2):
        diff = a["coefficient"] - b["coefficient"]
        larger = max(a["coefficient"], b["coefficient"])
        pairwise.append({
            "group_a": a["group"],
            "group_b": b["group"],
            "difference": diff,
            "absolute": abs(diff),
            "percent_of_larger": _percent(abs(diff), larger),
        })
    return {
        "max_min": {
            "highest": hi["group"],
            "lowest": lo["group"],
            "absolute": spread,
            "percent_of_larger": _percent(spread, hi["coefficient"]),
        },
        "pairwise": pairwise,
    }


def build_report(
    scored: Sequence[ScoredPrediction],
    trust_cfg: TrustConfig = TrustConfig(),
    density_cfg: DensityConfig = DensityConfig(),
    pipeline: dict[str, Any] | None = None,
    counts: dict[str, Any] | None = None,
) -> TrustReport:
    if not scored:
        raise ValidationError("cannot build a report from an empty prediction set")
    cond = conditional_net_trust_scores(scored)
    matrix = trust_matrix(scored)
    spectrum = [
        {
            "label": e.key,
            "scenario": SCENARIO_NAMES.get(e.key, str(e.key)),
            "coefficient": e.coefficient,
            "count": e.count,
            "weight": e.weight,
        }
        for e in trust_spectrum(scored)
    ]

    demographic: dict[str, dict[str, Any]] = {}
    gaps: dict[str, dict[str, Any]] = {}
    for axis in AXES:
        entries = [
            {"group": e.key.value, "coefficient": e.coefficient, "count": e.count, "weight": e.weight}
            for e in demographic_trust_spectrum(scored, axis)
        ]
        demographic[axis] = {
            "entries": entries,
            "absent": [g.value for g in absent_groups(scored, axis)],
        }
        gaps[axis] = axis_gaps(entries)

    config = {
        "alpha": trust_cfg.alpha,
        "beta": trust_cfg.beta,
        "gamma": density_cfg.gamma,
        "grid_points": density_cfg.grid_points,
        "group_by": density_cfg.group_by.value,
        "pipeline": pipeline,
    }
    n_correct = sum(1 for s in scored if s.correct)
    all_counts = {"predictions": len(scored), "correct": n_correct, "incorrect": len(scored) - n_correct}
    if counts:
        all_counts.update(counts)

    return TrustReport(
        accuracy=cond.accuracy,
        net_trust_score=net_trust_score(scored),
        conditional_trust={"correct": cond.correct, "incorrect": cond.incorrect},
        trust_matrix={
            "labels": [SCENARIO_NAMES.get(k, str(k)) for k in matrix.labels],
            "rows": "oracle",
            "columns": "predicted",
            "cells": [list(r) for r in matrix.cells],
            "counts": [list(r) for r in matrix.counts],
        },
        trust_spectrum=spectrum,
        demographic_spectra=demographic,
        gaps=gaps,
        config=config,
        counts=all_counts,
    )


def consistency_errors(report: TrustReport, tol: float = 1e-9) -> list[str]:
    """Cross-check the report's own fields; returns one message per violation."""
    problems = []
    acc = report.accuracy
    tc = report.conditional_trust["correct"]
    ti = report.conditional_trust["incorrect"]
    recomposed = (acc * tc if tc is not None else 0.0) + ((1 - acc) * ti if ti is not None else 0.0)
    if abs(recomposed - report.net_trust_score) > tol:
        problems.append(
            f"accuracy-weighted conditionals give {recomposed!r}, net score is {report.net_trust_score!r}"
        )
    from_spectrum = math.fsum(e["weight"] * e["coefficient"] for e in report.trust_spectrum)
    if abs(from_spectrum - report.net_trust_score) > tol:
        problems.append(f"spectrum-weighted score {from_spectrum!r} differs from net score")
    weights = math.fsum(e["weight"] for e in report.trust_spectrum)
    if abs(weights - 1.0) > tol:
        problems.append(f"trust spectrum weights sum to {weights!r}")
    for axis, spec in report.demographic_spectra.items():
        entries = spec["entries"]
        recomputed = axis_gaps(entries)
        stored = report.gaps.get(axis)
        if stored is None:
            problems.append(f"no gaps reported for axis {axis}")
            continue
        if (stored["max_min"] is None) != (recomputed["max_min"] is None):
            problems.append(f"{axis}: max-min gap presence disagrees with spectrum")
        elif stored["max_min"] is not None:
            if abs(stored["max_min"]["absolute"] - recomputed["max_min"]["absolute"]) > tol:
                problems.append(f"{axis}: max-min gap disagrees with spectrum")
        if len(stored["pairwise"]) != len(recomputed["pairwise"]):
            problems.append(f"{axis}: wrong number of pairwise gaps")
        for got, want in zip(stored["pairwise"], recomputed["pairwise"]):
            if abs(got["difference"] - want["difference"]) > tol:
                problems.append(f"{axis}: gap {got['group_a']} vs {got['group_b']} disagrees with spectrum")
        axis_weight = math.fsum(e["weight"] for e in entries)
        if entries and abs(axis_weight - 1.0) > tol:
            problems.append(f"{axis}: group weights sum to {axis_weight!r}")
        axis_score = math.fsum(e["weight"] * e["coefficient"] for e in entries)
        if entries and abs(axis_score - report.net_trust_score) > tol:
            problems.append(f"{axis}: group-weighted score differs from net score")
    for value in _coefficients(report):
        if value is not None and not 0.0 <= value <= 1.0:
            problems.append(f"coefficient {value!r} outside [0, 1]")
    return problems


def _coefficients(report: TrustReport):
    yield report.accuracy
    yield report.net_trust_score
    yield report.conditional_trust["correct"]
    yield report.conditional_trust["incorrect"]
    for row in report.trust_matrix["cells"]:
        yield from row
    for e in report.trust_spectrum:
        yield e["coefficient"]
    for spec in report.demographic_spectra.values():
        for e in spec["entries"]:
            yield e["coefficient"]


def dumps_report(report: TrustReport) -> str:
    return json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n"


def write_report(report: TrustReport, path: str | os.PathLike) -> None:
    text = dumps_report(report)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_report(path: str | os.PathLike) -> TrustReport:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return TrustReport.from_dict(data)
