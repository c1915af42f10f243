"""Command-line entry point: ``fintrust {train,predict,audit,run-all}``.

Exit codes: 0 success, 1 validation or configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import dataset, model, pipeline
from .density import DensityConfig
from .errors import FintrustError
from .report import write_report
from .trust import TrustConfig

logger = logging.getLogger("fintrust")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

DEFAULT_SEED = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2, which is reserved for I/O
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add_split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="run seed (default: %(default)s)")
    p.add_argument("--train-fraction", type=float, default=0.8, help="stratified train share (default: %(default)s)")
    p.add_argument("--balance", choices=[m.value for m in dataset.BalanceMode], default="undersample",
                   help="class balancing before the split (default: %(default)s)")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3, help="starting learning rate")
    p.add_argument("--decay", type=float, default=0.96, help="per-epoch learning-rate multiplier")
    p.add_argument("--batch-size", type=int, default=32)


def _add_audit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=1.0, help="reward exponent on correct answers")
    p.add_argument("--beta", type=float, default=1.0, help="penalty exponent on incorrect answers")
    p.add_argument("--gamma", type=float, default=0.5, help="KDE bandwidth constant (h = gamma/sqrt(N))")
    p.add_argument("--grid-points", type=int, default=1000)
    p.add_argument("--group-by", choices=["predicted", "oracle"], default="predicted",
                   help="label that defines a density scenario (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fintrust", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only print warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="balance, split, standardize and train the classifier")
    p.add_argument("--data", required=True, help="credit-default CSV")
    p.add_argument("--model-out", required=True, help="model JSON to write")
    p.add_argument("--log-out", help="per-epoch TSV log (default: <model-out>.log.tsv)")
    p.add_argument("--test-out", help="write the held-out split as CSV")
    _add_split_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("predict", help="score every record of a CSV with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="predictions CSV to write")

    p = sub.add_parser("audit", help="trust report and densities from a predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--report-out", required=True)
    p.add_argument("--density-dir", help="directory for per-scenario density TSVs")
    _add_audit_flags(p)

    p = sub.add_parser("run-all", help="train, predict on the held-out split and audit")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    _add_split_flags(p)
    _add_train_flags(p)
    _add_audit_flags(p)
    return parser


def _split_spec(args) -> dataset.SplitSpec:
    return dataset.SplitSpec(args.train_fraction, args.seed, dataset.BalanceMode(args.balance))


def _train_config(args) -> model.TrainConfig:
    return model.TrainConfig(
        epochs=args.epochs, lr0=args.lr, decay=args.decay, batch_size=args.batch_size, seed=args.seed
    )


def _audit_configs(args) -> tuple[TrustConfig, DensityConfig]:
    return (
        TrustConfig(args.alpha, args.beta),
        DensityConfig(args.gamma, args.grid_points, args.group_by),
    )


def cmd_train(args) -> int:
    spec, cfg = _split_spec(args), _train_config(args)
    records = dataset.load_records(args.data)
    logger.info("loaded %d records from %s", len(records), args.data)
    data = pipeline.prepare(records, spec)
    result = pipeline.train_model(data, cfg)
    model.save_model(result.model, data.params, args.model_out, cfg,
                     extra={"split": pipeline.split_echo(spec), "counts": data.counts})
    log_out = args.log_out or f"{args.model_out}.log.tsv"
    pipeline.write_train_log(log_out, result.history)
    if args.test_out:
        dataset.write_records(args.test_out, data.test)
    logger.info("model written to %s", args.model_out)
    return EXIT_OK


def cmd_predict(args) -> int:
    mlp, params = model.load_model(args.model)
    records = dataset.load_records(args.data)
    predictions = model.predict_many(mlp, records, params)
    model.write_predictions(args.out, predictions)
    logger.info("%d predictions written to %s", len(predictions), args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    trust_cfg, density_cfg = _audit_configs(args)
    predictions = model.read_predictions(args.predictions)
    report, densities = pipeline.audit(predictions, trust_cfg, density_cfg, args.density_dir)
    write_report(report, args.report_out)
    logger.info(
        "accuracy=%.4f net_trust=%.4f report=%s densities=%d",
        report.accuracy, report.net_trust_score, args.report_out, len(densities),
    )
    return EXIT_OK


def cmd_run_all(args) -> int:
    spec, cfg = _split_spec(args), _train_config(args)
    trust_cfg, density_cfg = _audit_configs(args)
    manifest = pipeline.run_all(args.data, args.out_dir, spec, cfg, trust_cfg, density_cfg)
    for kind, entries in manifest.items():
        for e in entries:
            logger.info("%s: %s", kind, Path(args.out_dir) / e["path"])
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "audit": cmd_audit,
    "run-all": cmd_run_all,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return COMMANDS[args.command](args)
    except FintrustError as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
