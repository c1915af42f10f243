"""End-to-end stages shared by the CLI subcommands."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dataset, model
from .density import DensityConfig, GroupBy, scenario_densities, write_density_tsv
from .report import TrustReport, build_report, write_report
from .trust import SCENARIO_NAMES, ScoredPrediction, TrustConfig, score_all

logger = logging.getLogger(__name__)


@dataclass
class PreparedData:
    train: list[dataset.ClientRecord]
    test: list[dataset.ClientRecord]
    x_train: np.ndarray
    x_test: np.ndarray
    params: dataset.StandardizationParams
    counts: dict


def stage_seeds(seed: int) -> tuple[int, int]:
    """Balance and split seeds derived from the run seed.

    Mixing in a stage tag keeps these streams apart from the ones
    :func:`fintrust.model.train` derives from the same seed.
    """
    return tuple(
        int(np.random.SeedSequence([seed, tag]).generate_state(1)[0]) for tag in (1, 2)
    )


def prepare(records: Sequence[dataset.ClientRecord], spec: dataset.SplitSpec) -> PreparedData:
    """Balance (optionally), split and standardize, in that order."""
    balance_seed, split_seed = stage_seeds(spec.seed)
    raw_counts = dataset.class_counts(records)
    if spec.balance_mode is dataset.BalanceMode.UNDERSAMPLE:
        pool = dataset.balance(records, balance_seed)
    else:
        pool = list(records)
    train, test = dataset.split(
        pool, dataset.SplitSpec(spec.train_fraction, split_seed, spec.balance_mode)
    )
    x_train, x_test, params = dataset.standardize(train, test)
    counts = {
        "raw": len(records),
        "raw_by_label": {str(k): v for k, v in raw_counts.items()},
        "balanced": len(pool),
        "train": len(train),
        "test": len(test),
    }
    logger.info(
        "records: raw=%d balanced=%d train=%d test=%d",
        len(records), len(pool), len(train), len(test),
    )
    return PreparedData(train, test, x_train, x_test, params, counts)


def train_model(
    data: PreparedData, config: model.TrainConfig
) -> model.TrainResult:
    return model.train(data.x_train, dataset.labels(data.train), config)


def write_train_log(path: str | os.PathLike, history: Sequence[model.EpochLog]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch\tlearning_rate\tloss\taccuracy\n")
        for h in history:
            fh.write(f"{h.epoch + 1}\t{h.learning_rate!r}\t{h.loss!r}\t{h.accuracy!r}\n")


def audit(
    predictions: Sequence[model.PredictionRecord],
    trust_cfg: TrustConfig,
    density_cfg: DensityConfig,
    density_dir: str | os.PathLike | None = None,
    pipeline: dict | None = None,
    counts: dict | None = None,
) -> tuple[TrustReport, list[Path]]:
    """Score predictions, build the report and write one density TSV per scenario."""
    scored = score_all(predictions, trust_cfg)
    report = build_report(scored, trust_cfg, density_cfg, pipeline=pipeline, counts=counts)
    written: list[Path] = []
    if density_dir is not None:
        written = write_densities(scored, density_cfg, density_dir)
    return report, written


def write_densities(
    scored: Sequence[ScoredPrediction], cfg: DensityConfig, directory: str | os.PathLike
) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for label, name in SCENARIO_NAMES.items():
        if cfg.group_by is GroupBy.PREDICTED:
            present = any(s.prediction.predicted_label == label for s in scored)
        else:
            present = any(s.prediction.true_label == label for s in scored)
        if not present:
            logger.warning("no records in scenario %s; density skipped", name)
            continue
        curve = scenario_densities(scored, label, cfg)
        path = directory / f"density_{name}.tsv"
        write_density_tsv(path, curve)
        written.append(path)
    return written


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_all(
    data_path: str | os.PathLike,
    out_dir: str | os.PathLike,
    split_spec: dataset.SplitSpec,
    train_cfg: model.TrainConfig,
    trust_cfg: TrustConfig = TrustConfig(),
    density_cfg: DensityConfig = DensityConfig(),
) -> dict:
    """Train, predict on the held-out split, audit, and write a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = dataset.load_records(data_path)
    data = prepare(records, split_spec)
    result = train_model(data, train_cfg)

    model_path = out / "model.json"
    model.save_model(result.model, data.params, model_path, train_cfg, extra={"split": split_echo(split_spec)})
    log_path = out / "train_log.tsv"
    write_train_log(log_path, result.history)
    test_path = out / "test_split.csv"
    dataset.write_records(test_path, data.test)

    predictions = model.predict_many(result.model, data.test, data.params)
    pred_path = out / "predictions.csv"
    model.write_predictions(pred_path, predictions)

    pipeline = {
        "seed": split_spec.seed,
        "split": split_echo(split_spec),
        "train": asdict(train_cfg),
        "final_train_accuracy": result.history[-1].accuracy,
    }
    report, densities = audit(
        predictions, trust_cfg, density_cfg, out / "densities", pipeline=pipeline, counts=data.counts
    )
    report_path = out / "report.json"
    write_report(report, report_path)

    artifacts = {
        "model": [model_path, log_path],
        "predictions": [test_path, pred_path],
        "report": [report_path],
        "densities": densities,
    }
    manifest = {
        kind: [
            {"path": str(p.relative_to(out)), "sha256": _sha256(p), "bytes": p.stat().st_size}
            for p in paths
        ]
        for kind, paths in artifacts.items()
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest


def split_echo(spec: dataset.SplitSpec) -> dict:
    return {
        "train_fraction": spec.train_fraction,
        "seed": spec.seed,
        "balance_mode": spec.balance_mode.value,
        "order": "balance-then-split",
    }
