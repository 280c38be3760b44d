#!/usr/bin/env python3
"""
missbart - BART with missingness-aware splitting rules
Main entry point for fitting, prediction, MDM simulation and the benchmark studies.
"""

import argparse
import json
import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

import structlog
from dotenv import load_dotenv

from utils.config import load_config, get_default_config
from utils.logger import setup_logging
from controller import MissBARTController
from harness import METHODS
from mdm import list_presets

logger = structlog.get_logger(__name__)

EXIT_DOMAIN_ERROR = 2
EXIT_CHECK_FAILED = 1


def _add_hyper_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model hyperparameters (override config.yaml)")
    group.add_argument("--m", type=int, help="Number of trees")
    group.add_argument("--alpha", type=float, help="Split-probability base")
    group.add_argument("--beta", type=float, help="Split-probability depth exponent")
    group.add_argument("--k", type=float, help="Leaf prior shrinkage")
    group.add_argument("--nu", type=float, help="Error-variance prior degrees of freedom")
    group.add_argument("--q", type=float, help="Error-variance prior quantile")
    group.add_argument("--n-burn", type=int, help="Burn-in iterations")
    group.add_argument("--n-post", type=int, help="Retained iterations")


def _hyper_overrides(args: argparse.Namespace) -> dict:
    return {
        "m": args.m, "alpha": args.alpha, "beta": args.beta, "k": args.k,
        "nu": args.nu, "q": args.q, "n_burn": args.n_burn, "n_post": args.n_post,
    }


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--missing-token", help="Cell value read as missing (default: config data.missing_token)")
    parser.add_argument("--response-col", help="Response column name (default: config data.response_column)")


def _add_bench_flags(parser: argparse.ArgumentParser, default_scenario: str) -> None:
    parser.add_argument("--scenario", default=default_scenario, help=f"Scenario preset (default: {default_scenario})")
    parser.add_argument("--levels", type=int, nargs="+", help="Level indices to run (default: all)")
    parser.add_argument("--replicates", type=int, help="Replicates per level")
    parser.add_argument("--seed-base", type=int, help="Replicate r uses seed seed_base + r")
    parser.add_argument("--workers", type=int, help="Worker processes (1 runs inline)")
    parser.add_argument("--baselines", nargs="+", choices=METHODS,
                        help="Methods to fit (default: per data source, see config harness.baselines)")
    parser.add_argument("--full-fidelity", action="store_true",
                        help="Use 1000 burn-in / 1000 retained iterations instead of the sweep budget")
    parser.add_argument("--out-dir", help="Directory for the raw CSV and summary JSON")
    parser.add_argument("--check", action="store_true", help="Exit non-zero when an acceptance check fails")
    _add_hyper_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="missbart - BART with missingness-aware splitting rules",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Fit a model and save its posterior draws
  python main.py fit --train data/train.csv --response-col y --out outputs/train.model.json.gz

  # Predict with 95% credible intervals
  python main.py predict --model outputs/train.model.json.gz --data data/test.csv --out outputs/pred.csv

  # Draw one masked dataset from a scenario preset
  python main.py simulate-mdm --scenario selection_mar --level 3 --seed 7 --out data/mar.csv

  # Generated-surface study with acceptance checks
  python main.py bench-selection --scenario selection_mar --replicates 10 --check

  # Boston Housing study (download the CSV first)
  python main.py fetch-bhd --dest data/BostonHousing.csv
  python main.py bench-bhd --scenario bhd_pattern_mixture --csv data/BostonHousing.csv
        """
    )
    parser.add_argument(
        "--config", "-c",
        default="config.yaml",
        help="Path to configuration file (default: config.yaml)"
    )
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: config general.log_level)"
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    fit = commands.add_parser("fit", help="Fit a model to a training CSV")
    fit.add_argument("--train", required=True, help="Training CSV")
    fit.add_argument("--out", help="Model file (.json or .json.gz)")
    fit.add_argument("--seed", type=int, default=1, help="Random seed (default: 1)")
    fit.add_argument("--nominal", nargs="+", default=[], metavar="COLUMN",
                     help="Columns to integer-encode as nominal levels")
    fit.add_argument("--chains", type=int, help="Independent chains to pool")
    fit.add_argument("--workers", type=int, default=1, help="Worker processes for chains")
    fit.add_argument("--diagnostics", action="store_true", help="Write sigma-squared trace and move counts as CSV")
    fit.add_argument("--debug-checks", action="store_true", help="Verify residual consistency every iteration")
    _add_data_flags(fit)
    _add_hyper_flags(fit)

    predict = commands.add_parser("predict", help="Predict rows of a CSV with a saved model")
    predict.add_argument("--model", required=True, help="Model file written by fit")
    predict.add_argument("--data", required=True, help="CSV of rows to predict")
    predict.add_argument("--out", help="Predictions CSV")
    predict.add_argument("--per-draw", help="Also write the per-draw prediction matrix to this CSV")
    predict.add_argument("--level", type=float, help="Credible level (default: config posterior.level)")
    predict.add_argument("--point", choices=["mean", "median"], help="Point estimate")
    predict.add_argument("--levels", dest="levels_path", help="Level dictionary JSON (default: the one written beside the model)")
    _add_data_flags(predict)

    simulate = commands.add_parser("simulate-mdm", help="Write one masked dataset from a scenario preset")
    simulate.add_argument("--scenario", required=True, help=f"One of: {', '.join(list_presets())}")
    simulate.add_argument("--level", type=int, required=True, help="Level index within the scenario")
    simulate.add_argument("--seed", type=int, default=1, help="Random seed (default: 1)")
    simulate.add_argument("--n", type=int, help="Rows to generate (surface scenarios)")
    simulate.add_argument("--csv", help="Boston Housing CSV (BHD scenarios)")
    simulate.add_argument("--out", help="Output CSV")

    selection = commands.add_parser("bench-selection", help="Selection-model study on the generated surface")
    _add_bench_flags(selection, "selection_mar")
    selection.add_argument("--n-train", type=int, help="Training rows per replicate")
    selection.add_argument("--n-test", type=int, help="Test rows per replicate")

    bhd = commands.add_parser("bench-bhd", help="Missingness study on Boston Housing")
    _add_bench_flags(bhd, "bhd_pattern_mixture")
    bhd.add_argument("--csv", help="Boston Housing CSV (default: config bhd.csv_path)")
    bhd.add_argument("--train-fraction", type=float, help="Training share of rows")

    illustration = commands.add_parser("bench-illustration", help="Credible-interval coverage at four test points")
    _add_bench_flags(illustration, "pattern_mixture_illustration")
    illustration.add_argument("--level", dest="credible_level", type=float, help="Credible level")

    fetch = commands.add_parser("fetch-bhd", help="Download the Boston Housing CSV")
    fetch.add_argument("--dest", help="Destination path (default: config bhd.csv_path)")
    fetch.add_argument("--url", help="Source URL (default: config bhd.source_url)")

    return parser


def _print_checks(checks) -> None:
    for check in checks:
        icon = "✅" if check.passed else "❌"
        print(f"{icon} {check.name}: {check.detail}")


def run_command(controller: MissBARTController, args: argparse.Namespace) -> int:
    """Dispatch one subcommand; returns the process exit status."""
    if args.command == "fit":
        hyper = controller.hyperparams(**_hyper_overrides(args))
        draws, model_path = controller.fit(
            args.train,
            model_out=args.out,
            hyper=hyper,
            seed=args.seed,
            nominal={name: [] for name in args.nominal},
            n_chains=args.chains,
            workers=args.workers,
            diagnostics=args.diagnostics or None,
            debug_checks=args.debug_checks or None,
            response_column=args.response_col,
            missing_token=args.missing_token,
        )
        rates = {k: round(v, 3) for k, v in draws.acceptance_rates().items()}
        print(f"✅ Model saved: {model_path} ({draws.n_post} draws, acceptance {rates})")
        return 0

    if args.command == "predict":
        results, out_path = controller.predict(
            args.model,
            args.data,
            out=args.out,
            per_draw_out=args.per_draw,
            level=args.level,
            point=args.point,
            levels_path=args.levels_path,
            response_column=args.response_col,
            missing_token=args.missing_token,
        )
        print(f"✅ {len(results)} predictions written: {out_path}")
        return 0

    if args.command == "simulate-mdm":
        masked, out_path = controller.simulate_mdm(
            args.scenario, args.level, seed=args.seed, out=args.out, source_csv=args.csv, n=args.n
        )
        print(f"✅ {masked.n} rows ({masked.row_missing_fraction():.1%} with missing entries) written: {out_path}")
        return 0

    if args.command == "fetch-bhd":
        path = controller.fetch_bhd(args.dest, args.url)
        print(f"✅ Boston Housing data saved: {path}")
        return 0

    kind = {"bench-selection": "selection", "bench-bhd": "bhd", "bench-illustration": "illustration"}[args.command]
    overrides = {
        "levels": args.levels,
        "replicates": args.replicates,
        "seed_base": args.seed_base,
        "workers": args.workers,
        "baselines": args.baselines,
        "n_train": getattr(args, "n_train", None),
        "n_test": getattr(args, "n_test", None),
        "train_fraction": getattr(args, "train_fraction", None),
        "bhd_csv": getattr(args, "csv", None),
        "credible_level": getattr(args, "credible_level", None),
    }
    experiment = controller.experiment_config(args.scenario, **overrides)
    hyper = experiment.hyper.full_fidelity() if args.full_fidelity else experiment.hyper
    experiment = experiment.model_copy(update={"hyper": hyper.with_overrides(**_hyper_overrides(args))})

    outcome = controller.run_study(kind, experiment, out_dir=args.out_dir)
    print(f"✅ Raw results: {outcome['raw_csv']}")
    print(f"✅ Summary: {outcome['summary_json']}")
    _print_checks(outcome["checks"])
    if args.check and not controller.checks_passed(outcome["checks"]):
        print(json.dumps({"failed": [c.name for c in outcome["checks"] if not c.passed]}))
        return EXIT_CHECK_FAILED
    return 0


def main(argv=None) -> int:
    """Main entry point."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_DOMAIN_ERROR

    # Load configuration
    try:
        config = load_config(args.config)
    except FileNotFoundError:
        print(f"Config file not found: {args.config}")
        print("Using default configuration...")
        config = get_default_config()
    except ValueError as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR

    general = config.get("general", {})
    setup_logging(args.log_level or general.get("log_level", "INFO"), general.get("log_dir", "./logs"))

    controller = MissBARTController(config)
    try:
        return run_command(controller, args)
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed", error=str(e))
        print(f"❌ Error: {str(e).splitlines()[0]}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
