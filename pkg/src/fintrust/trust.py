"""Question-answer trust and the metrics aggregated from it.

Every aggregate is an empirical mean of per-prediction trust ``q`` over some
subset of the predictions.  Sums go through :func:`math.fsum`, which is
correctly rounded, so every metric is independent of record order.

Undefined quantities (a trust-matrix cell or spectrum group with no records)
are ``None``, never 0: a trust of 0 means "maximally untrustworthy".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .dataset import AgeGroup, Education, Gender
from .errors import DomainError, ValidationError
from .model import PredictionRecord

LABELS: tuple[int, ...] = (0, 1)
SCENARIO_NAMES = {0: "no_default", 1: "payment_default"}

AXES: dict[str, tuple[str, type]] = {
    "gender": ("gender", Gender),
    "education": ("education", Education),
    "age": ("age_group", AgeGroup),
}


@dataclass(frozen=True)
class TrustConfig:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be a finite value >= 0, got {value}")


@dataclass(frozen=True)
class ScoredPrediction:
    prediction: PredictionRecord
    q: float

    @property
    def correct(self) -> bool:
        return self.prediction.correct


@dataclass(frozen=True)
class TrustMatrix:
    """Mean trust per (oracle, predicted) cell; rows are oracle answers."""

    labels: tuple[int, ...]
    cells: tuple[tuple[float | None, ...], ...]
    counts: tuple[tuple[int, ...], ...]

    def cell(self, oracle: int, predicted: int) -> float | None:
        return self.cells[self.labels.index(oracle)][self.labels.index(predicted)]

    def count(self, oracle: int, predicted: int) -> int:
        return self.counts[self.labels.index(oracle)][self.labels.index(predicted)]


@dataclass(frozen=True)
class SpectrumEntry:
    key: Hashable
    coefficient: float
    count: int
    weight: float


@dataclass(frozen=True)
class ConditionalScores:
    correct: float | None
    incorrect: float | None
    accuracy: float


def _mean(values: Sequence[float]) -> float | None:
    if not values:
        return None
    return math.fsum(values) / len(values)


def question_answer_trust(correct: bool, confidence: float, cfg: TrustConfig = TrustConfig()) -> float:
    """Reward confidence on a correct answer, penalise it on a wrong one."""
    if not 0.0 <= confidence <= 1.0:
        raise DomainError(f"confidence must lie in [0, 1], got {confidence!r}")
    q = confidence**cfg.alpha if correct else (1.0 - confidence) ** cfg.beta
    return min(1.0, max(0.0, q))


def score_all(
    predictions: Iterable[PredictionRecord], cfg: TrustConfig = TrustConfig()
) -> list[ScoredPrediction]:
    scored = []
    for p in predictions:
        try:
            q = question_answer_trust(p.correct, p.confidence, cfg)
        except DomainError as exc:
            raise DomainError(f"prediction {p.id}: {exc}") from None
        scored.append(ScoredPrediction(p, q))
    return scored


def trust_matrix(
    scored: Sequence[ScoredPrediction], labels: Sequence[int] = LABELS
) -> TrustMatrix:
    labels = tuple(labels)
    buckets: dict[tuple[int, int], list[float]] = {(z, y): [] for z in labels for y in labels}
    for s in scored:
        key = (s.prediction.true_label, s.prediction.predicted_label)
        if key not in buckets:
            raise ValidationError(f"prediction {s.prediction.id}: label outside {labels}")
        buckets[key].append(s.q)
    cells = tuple(tuple(_mean(buckets[z, y]) for y in labels) for z in labels)
    counts = tuple(tuple(len(buckets[z, y]) for y in labels) for z in labels)
    return TrustMatrix(labels, cells, counts)


def _spectrum(scored: Sequence[ScoredPrediction], key_of, order: Sequence) -> list[SpectrumEntry]:
    groups: dict = {k: [] for k in order}
    for s in scored:
        k = key_of(s)
        groups.setdefault(k, []).append(s.q)
    n = len(scored)
    return [
        SpectrumEntry(k, _mean(qs), len(qs), len(qs) / n)
        for k, qs in groups.items()
        if qs
    ]


def trust_spectrum(
    scored: Sequence[ScoredPrediction], labels: Sequence[int] = LABELS
) -> list[SpectrumEntry]:
    """Mean trust per oracle answer, weighted by that answer's frequency."""
    return _spectrum(scored, lambda s: s.prediction.true_label, labels)


def _axis(axis: str) -> tuple[str, type]:
    try:
        return AXES[axis]
    except KeyError:
        raise ValidationError(
            f"unknown demographic axis {axis!r}; expected one of {sorted(AXES)}"
        ) from None


def demographic_trust_spectrum(
    scored: Sequence[ScoredPrediction], axis: str
) -> list[SpectrumEntry]:
    """Mean trust per demographic group on ``axis`` (gender, education or age).

    Groups without records are left out; see :func:`absent_groups`.
    """
    attr, enum_type = _axis(axis)
    return _spectrum(
        scored,
        lambda s: getattr(s.prediction.demographics, attr),
        list(enum_type),
    )


def absent_groups(scored: Sequence[ScoredPrediction], axis: str) -> list:
    attr, enum_type = _axis(axis)
    present = {getattr(s.prediction.demographics, attr) for s in scored}
    return [g for g in enum_type if g not in present]


def net_trust_score(scored: Sequence[ScoredPrediction]) -> float:
    """Frequency-weighted sum of the trust spectrum.

    Under empirical frequencies this is the grand mean of ``q``.
    """
    if not scored:
        raise ValidationError("net trust score of an empty prediction set is undefined")
    spectrum = trust_spectrum(scored, labels=())
    return math.fsum(e.weight * e.coefficient for e in spectrum)


def conditional_net_trust_scores(scored: Sequence[ScoredPrediction]) -> ConditionalScores:
    if not scored:
        raise ValidationError("conditional trust scores of an empty prediction set are undefined")
    right = [s.q for s in scored if s.correct]
    wrong = [s.q for s in scored if not s.correct]
    return ConditionalScores(_mean(right), _mean(wrong), len(right) / len(scored))
