import json

import numpy as np
import pytest

from conftest import DATA_DIR, make_prediction, random_predictions
from fintrust.dataset import AgeGroup, Education, Gender
from fintrust.density import DensityConfig
from fintrust.errors import SchemaError, ValidationError
from fintrust.model import read_predictions
from fintrust.report import (
    REPORT_KEYS,
    TrustReport,
    build_report,
    consistency_errors,
    dumps_report,
    read_report,
    write_report,
)
from fintrust.trust import TrustConfig, score_all

GOLDEN = DATA_DIR / "golden_report.json"


def toy_report():
    preds = [
        make_prediction(1, 0, 0, 0.8, Gender.MALE, Education.UNIVERSITY, AgeGroup.AGE_30_39),
        make_prediction(2, 1, 0, 0.7, Gender.FEMALE, Education.HIGH_SCHOOL, AgeGroup.AGE_50_PLUS),
    ]
    return build_report(score_all(preds))


class TestBuildReport:
    def test_two_record_toy(self):
        # q = 0.8 (correct, C=0.8) and 0.3 (wrong, C=0.7)
        r = toy_report()
        assert list(r.to_dict()) == list(REPORT_KEYS)
        assert r.accuracy == 0.5
        assert r.net_trust_score == pytest.approx(0.55, abs=1e-15)
        assert r.conditional_trust["correct"] == pytest.approx(0.8)
        assert r.conditional_trust["incorrect"] == pytest.approx(0.3)
        cells = r.trust_matrix["cells"]
        assert cells[0][0] == pytest.approx(0.8) and cells[1][0] == pytest.approx(0.3)
        assert cells[0][1] is None and cells[1][1] is None
        assert r.trust_matrix["counts"] == [[1, 0], [1, 0]]
        assert [(e["scenario"], e["weight"]) for e in r.trust_spectrum] == [
            ("no_default", 0.5), ("payment_default", 0.5),
        ]
        gender = {e["group"]: e["coefficient"] for e in r.demographic_spectra["gender"]["entries"]}
        assert gender == pytest.approx({"male": 0.8, "female": 0.3})
        gap = r.gaps["gender"]["max_min"]
        assert (gap["highest"], gap["lowest"]) == ("male", "female")
        assert gap["absolute"] == pytest.approx(0.5)
        assert gap["percent_of_larger"] == pytest.approx(62.5)
        assert r.demographic_spectra["education"]["absent"] == ["graduate_school", "others"]
        assert r.counts == {"predictions": 2, "correct": 1, "incorrect": 1}
        assert consistency_errors(r) == []

    def test_all_correct_confident(self):
        preds = [make_prediction(i, i % 2, i % 2, 1.0) for i in range(4)]
        r = build_report(score_all(preds))
        assert r.net_trust_score == 1.0
        assert r.trust_matrix["cells"] == [[1.0, None], [None, 1.0]]
        assert r.conditional_trust["incorrect"] is None

    def test_pairwise_gaps(self):
        preds = [
            make_prediction(1, 0, 0, 0.9, age=AgeGroup.AGE_20_29),
            make_prediction(2, 0, 0, 0.6, age=AgeGroup.AGE_30_39),
            make_prediction(3, 0, 1, 0.7, age=AgeGroup.AGE_50_PLUS),
        ]
        r = build_report(score_all(preds))
        pairs = {(g["group_a"], g["group_b"]): g for g in r.gaps["age"]["pairwise"]}
        assert set(pairs) == {("20-29", "30-39"), ("20-29", "50+"), ("30-39", "50+")}
        assert pairs["20-29", "50+"]["difference"] == pytest.approx(0.6)
        assert pairs["20-29", "50+"]["percent_of_larger"] == pytest.approx(100 * 0.6 / 0.9)
        assert pairs["30-39", "50+"]["difference"] == pytest.approx(0.3)

    def test_empty(self):
        with pytest.raises(ValidationError):
            build_report([])

    @pytest.mark.parametrize("seed", range(10))
    def test_internally_consistent(self, seed):
        scored = score_all(random_predictions(np.random.default_rng(seed), 150, min_confidence=0.0))
        assert consistency_errors(build_report(scored)) == []

    def test_consistency_check_catches_tampering(self):
        r = toy_report()
        r.net_trust_score += 0.01
        assert consistency_errors(r)
        r = toy_report()
        r.gaps["gender"]["pairwise"][0]["difference"] = 0.0
        assert any("gender" in p for p in consistency_errors(r))

    def test_config_echo(self):
        scored = score_all([make_prediction(1, 0, 0, 0.9)])
        r = build_report(scored, TrustConfig(2.0, 0.5), DensityConfig(0.25, 200, "oracle"), pipeline={"seed": 4})
        assert r.config == {
            "alpha": 2.0, "beta": 0.5, "gamma": 0.25, "grid_points": 200,
            "group_by": "oracle", "pipeline": {"seed": 4},
        }


class TestSerialization:
    def test_round_trip(self, tmp_path):
        scored = score_all(random_predictions(np.random.default_rng(4), 77, min_confidence=0.0))
        r = build_report(scored)
        path = tmp_path / "r.json"
        write_report(r, path)
        assert read_report(path) == r

    def test_undefined_is_null(self):
        doc = json.loads(dumps_report(toy_report()))
        assert doc["trust_matrix"]["cells"][0][1] is None
        text = dumps_report(build_report(score_all([make_prediction(1, 0, 0, 0.9)])))
        assert '"incorrect": null' in text

    def test_deterministic_bytes(self):
        assert dumps_report(toy_report()) == dumps_report(toy_report())

    def test_schema_errors(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text("{\"accuracy\": 1")
        with pytest.raises(SchemaError):
            read_report(path)
        doc = toy_report().to_dict()
        del doc["gaps"]
        with pytest.raises(SchemaError, match="gaps"):
            TrustReport.from_dict(doc)
        doc = toy_report().to_dict()
        doc["extra"] = 1
        with pytest.raises(SchemaError, match="extra"):
            TrustReport.from_dict(doc)


class TestGolden:
    def _report(self):
        return build_report(score_all(read_predictions(DATA_DIR / "fixture_predictions.csv")))

    def test_fixture_hand_values(self):
        # q per row: .91 .62 .45 .97 .29 .83 .5 .66 .12 .74 .79 .4
        r = self._report()
        assert r.accuracy == pytest.approx(8 / 12, abs=1e-15)
        assert r.net_trust_score == pytest.approx(7.28 / 12, abs=1e-12)
        assert r.conditional_trust["correct"] == pytest.approx(6.02 / 8, abs=1e-12)
        assert r.conditional_trust["incorrect"] == pytest.approx(1.26 / 4, abs=1e-12)

    def test_matches_golden_bytes(self):
        assert dumps_report(self._report()) == GOLDEN.read_text()
