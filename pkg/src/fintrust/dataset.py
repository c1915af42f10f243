"""Ingestion and preparation of the Taiwan credit-card default data.

The loader accepts the comma-separated export of the UCI "default of credit
card clients" table (the layout distributed as ``UCI_Credit_Card.csv``).
Everything downstream works on :class:`ClientRecord` tuples; numpy arrays are
only produced by :func:`standardize`.
"""

from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

FEATURE_COLUMNS: tuple[str, ...] = (
    "LIMIT_BAL",
    "SEX",
    "EDUCATION",
    "MARRIAGE",
    "AGE",
    "PAY_0",
    "PAY_2",
    "PAY_3",
    "PAY_4",
    "PAY_5",
    "PAY_6",
    "BILL_AMT1",
    "BILL_AMT2",
    "BILL_AMT3",
    "BILL_AMT4",
    "BILL_AMT5",
    "BILL_AMT6",
    "PAY_AMT1",
    "PAY_AMT2",
    "PAY_AMT3",
    "PAY_AMT4",
    "PAY_AMT5",
    "PAY_AMT6",
)
ID_COLUMN = "ID"
LABEL_COLUMN = "default.payment.next.month"
COLUMNS: tuple[str, ...] = (ID_COLUMN, *FEATURE_COLUMNS, LABEL_COLUMN)
N_FEATURES = len(FEATURE_COLUMNS)
MIN_AGE = 18

_SEX = FEATURE_COLUMNS.index("SEX")
_EDUCATION = FEATURE_COLUMNS.index("EDUCATION")
_AGE = FEATURE_COLUMNS.index("AGE")


class Gender(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"


class Education(str, enum.Enum):
    GRADUATE_SCHOOL = "graduate_school"
    UNIVERSITY = "university"
    HIGH_SCHOOL = "high_school"
    OTHERS = "others"


class AgeGroup(str, enum.Enum):
    AGE_20_29 = "20-29"
    AGE_30_39 = "30-39"
    AGE_40_49 = "40-49"
    AGE_50_PLUS = "50+"


class BalanceMode(str, enum.Enum):
    UNDERSAMPLE = "undersample"
    NONE = "none"


@dataclass(frozen=True)
class ClientRecord:
    id: int
    features: tuple[float, ...]
    label: int

    def __post_init__(self) -> None:
        if len(self.features) != N_FEATURES:
            raise ValidationError(
                f"record {self.id}: expected {N_FEATURES} features, got {len(self.features)}"
            )
        if self.label not in (0, 1):
            raise ValidationError(f"record {self.id}: label must be 0 or 1, got {self.label}")
        if self.features[_AGE] < MIN_AGE:
            raise ValidationError(
                f"record {self.id}: AGE {self.features[_AGE]:g} is below {MIN_AGE}"
            )

    @property
    def sex(self) -> float:
        return self.features[_SEX]

    @property
    def education(self) -> float:
        return self.features[_EDUCATION]

    @property
    def age(self) -> float:
        return self.features[_AGE]


@dataclass(frozen=True)
class DemographicProfile:
    gender: Gender
    education: Education
    age_group: AgeGroup


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    balance_mode: BalanceMode = BalanceMode.UNDERSAMPLE

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError(
                f"train_fraction must lie strictly between 0 and 1, got {self.train_fraction}"
            )
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")
        object.__setattr__(self, "balance_mode", BalanceMode(self.balance_mode))


@dataclass(frozen=True)
class StandardizationParams:
    """Per-feature train mean and population standard deviation."""

    mean: tuple[float, ...]
    std: tuple[float, ...]

    def apply(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        mean = np.asarray(self.mean)
        std = np.asarray(self.std)
        if features.shape[-1] != mean.shape[0]:
            raise ValidationError(
                f"expected {mean.shape[0]} features, got {features.shape[-1]}"
            )
        scale = np.where(std > 0.0, std, 1.0)
        return (features - mean) / scale

    def to_dict(self) -> dict:
        return {
            "feature_names": list(FEATURE_COLUMNS),
            "mean": list(self.mean),
            "std": list(self.std),
            "std_kind": "population",
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StandardizationParams":
        try:
            mean = tuple(float(v) for v in data["mean"])
            std = tuple(float(v) for v in data["std"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed standardization params: {exc}") from exc
        if len(mean) != len(std):
            raise SchemaError("standardization mean and std lengths differ")
        return cls(mean, std)


def _parse_number(cell: str, column: str, line: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"line {line}, column {column}: non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"line {line}, column {column}: non-finite value {cell!r}")
    return value


def _parse_int(cell: str, column: str, line: int) -> int:
    value = _parse_number(cell, column, line)
    if not value.is_integer():
        raise ParseError(f"line {line}, column {column}: expected an integer, got {cell!r}")
    return int(value)


def load_records(path: str | os.PathLike) -> list[ClientRecord]:
    """Read client records from a CSV file in file order.

    Line numbers in error messages count the header as line 1.
    """
    records = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: file is empty, expected a header row")
        header = [h.strip() for h in header]
        for column in COLUMNS:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}")
        index = {name: header.index(name) for name in COLUMNS}
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"line {line}: expected {len(header)} cells, got {len(row)}"
                )
            rid = _parse_int(row[index[ID_COLUMN]], ID_COLUMN, line)
            features = tuple(
                _parse_number(row[index[c]], c, line) for c in FEATURE_COLUMNS
            )
            label = _parse_int(row[index[LABEL_COLUMN]], LABEL_COLUMN, line)
            if label not in (0, 1):
                raise ValidationError(f"line {line}: label must be 0 or 1, got {label}")
            try:
                records.append(ClientRecord(rid, features, label))
            except ValidationError as exc:
                raise ValidationError(f"line {line}: {exc}") from None
    return records


def format_number(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""
    if float(value).is_integer() and abs(value) < 2**53:
        return str(int(value))
    return repr(float(value))


def write_records(path: str | os.PathLike, records: Iterable[ClientRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in records:
            writer.writerow([r.id, *(format_number(v) for v in r.features), r.label])


def derive_demographics(record: ClientRecord) -> DemographicProfile:
    sex = record.sex
    if sex == 1:
        gender = Gender.MALE
    elif sex == 2:
        gender = Gender.FEMALE
    else:
        raise ValidationError(f"record {record.id}: SEX code must be 1 or 2, got {sex:g}")

    education = {
        1: Education.GRADUATE_SCHOOL,
        2: Education.UNIVERSITY,
        3: Education.HIGH_SCHOOL,
    }.get(record.education, Education.OTHERS)

    age = record.age
    if age < 30:
        age_group = AgeGroup.AGE_20_29
    elif age < 40:
        age_group = AgeGroup.AGE_30_39
    elif age < 50:
        age_group = AgeGroup.AGE_40_49
    else:
        age_group = AgeGroup.AGE_50_PLUS
    return DemographicProfile(gender, education, age_group)


def class_counts(records: Sequence[ClientRecord]) -> dict[int, int]:
    counts = {0: 0, 1: 0}
    for r in records:
        counts[r.label] += 1
    return counts


def balance(records: Sequence[ClientRecord], seed: int) -> list[ClientRecord]:
    """Undersample the majority class so both labels occur equally often.

    The surviving records are returned in a seeded random order.
    """
    by_label = {0: [], 1: []}
    for r in records:
        by_label[r.label].append(r)
    if not by_label[0] or not by_label[1]:
        raise ValidationError("cannot balance: one class is absent")
    rng = np.random.default_rng(seed)
    n = min(len(by_label[0]), len(by_label[1]))
    kept: list[ClientRecord] = []
    for label in (0, 1):
        group = by_label[label]
        if len(group) > n:
            chosen = np.sort(rng.choice(len(group), size=n, replace=False))
            group = [group[i] for i in chosen]
        kept.extend(group)
    order = rng.permutation(len(kept))
    return [kept[i] for i in order]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(
    records: Sequence[ClientRecord], spec: SplitSpec
) -> tuple[list[ClientRecord], list[ClientRecord]]:
    """Stratified, seeded train/test partition."""
    by_label = {0: [], 1: []}
    for r in records:
        by_label[r.label].append(r)
    for label, group in by_label.items():
        if len(group) < 2:
            raise ValidationError(
                f"cannot split: class {label} has {len(group)} record(s), need at least 2"
            )
    rng = np.random.default_rng(spec.seed)
    train: list[ClientRecord] = []
    test: list[ClientRecord] = []
    for label in (0, 1):
        group = by_label[label]
        n_train = _round_half_up(spec.train_fraction * len(group))
        if n_train == 0 or n_train == len(group):
            raise ValidationError(
                f"train_fraction {spec.train_fraction} leaves an empty side for class {label}"
            )
        order = rng.permutation(len(group))
        train.extend(group[i] for i in order[:n_train])
        test.extend(group[i] for i in order[n_train:])
    train = [train[i] for i in rng.permutation(len(train))]
    test = [test[i] for i in rng.permutation(len(test))]
    return train, test


def feature_matrix(records: Sequence[ClientRecord]) -> np.ndarray:
    if not records:
        return np.empty((0, N_FEATURES))
    return np.array([r.features for r in records], dtype=np.float64)


def labels(records: Sequence[ClientRecord]) -> np.ndarray:
    return np.array([r.label for r in records], dtype=np.int64)


def standardize(
    train: Sequence[ClientRecord], test: Sequence[ClientRecord]
) -> tuple[np.ndarray, np.ndarray, StandardizationParams]:
    """Z-score both sets with statistics computed on ``train`` only.

    Zero-variance columns are only centred; their recorded sd is 0.
    """
    if not train:
        raise ValidationError("cannot standardize: training set is empty")
    x_train = feature_matrix(train)
    mean = x_train.mean(axis=0)
    std = x_train.std(axis=0)  # population (ddof=0)
    params = StandardizationParams(tuple(float(v) for v in mean), tuple(float(v) for v in std))
    return params.apply(x_train), params.apply(feature_matrix(test)), params
