import os
from pathlib import Path

import pytest

from fintrust.dataset import AgeGroup, DemographicProfile, Education, Gender
from fintrust.model import PredictionRecord

DATA_DIR = Path(__file__).parent / "data"
REPO_ROOT = Path(__file__).parent.parent

_acceptance: dict[int, tuple[str, list[str]]] = {}


def taiwan_csv_path() -> Path:
    return Path(os.environ.get("FINTRUST_TAIWAN_CSV", REPO_ROOT / "data" / "UCI_Credit_Card.csv"))


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, title): acceptance criterion checked by the test"
    )


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number = getattr(report, "criterion_number", None)
    if number is None:
        return
    title, outcomes = _acceptance.setdefault(number, (report.criterion_title, []))
    outcomes.append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        rep.criterion_number = marker.args[0]
        rep.criterion_title = marker.args[1]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, outcomes = _acceptance[number]
        status = "PASS" if outcomes and all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")


def make_prediction(
    rid=0,
    z=0,
    y=0,
    confidence=0.8,
    gender=Gender.MALE,
    education=Education.UNIVERSITY,
    age=AgeGroup.AGE_30_39,
) -> PredictionRecord:
    return PredictionRecord(rid, z, y, confidence, DemographicProfile(gender, education, age))


def random_predictions(rng, n, min_confidence=0.5) -> list[PredictionRecord]:
    genders, educations, ages = list(Gender), list(Education), list(AgeGroup)
    out = []
    for i in range(n):
        out.append(
            make_prediction(
                rid=i,
                z=int(rng.integers(2)),
                y=int(rng.integers(2)),
                confidence=float(rng.uniform(min_confidence, 1.0)),
                gender=genders[rng.integers(len(genders))],
                education=educations[rng.integers(len(educations))],
                age=ages[rng.integers(len(ages))],
            )
        )
    return out
