import argparse
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from .config import ExperimentConfig, load_config, parse_config, render_config
from .experiments import run_command
from .utils.csv_export import render_csv, write_csv
from .utils.parameters import COMMANDS, describe_command

load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 2


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Path of a `key = value` configuration file (defaults apply without one)")
    parser.add_argument("--out", help="CSV output path; overrides the `output` key, stdout when neither is set")
    parser.add_argument("--seed", type=int, help="Master seed override (unsigned 64-bit)")
    parser.add_argument("--workers", type=int, help="Worker processes override")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airsum",
        description="Blind over-the-air federated edge learning simulator with digital q-QAM aggregation",
    )
    parser.add_argument("--log-level", default=os.getenv("AIRSUM_LOG_LEVEL", "INFO"), help="Logging level")
    commands = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = commands.add_parser(
            command,
            help=f"Run {command} and write its CSV",
            description=describe_command(command),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        _add_run_arguments(sub)
        if command == "train":
            sub.add_argument("--dataset-idx", help="Directory of MNIST-layout IDX files; sets dataset = idx")
    serve = commands.add_parser("serve", help="Serve the HTTP API with uvicorn")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if getattr(args, "dataset_idx", None):
        overrides["dataset"] = "idx"
        overrides["dataset_dir"] = args.dataset_idx
    if args.out:
        overrides["output"] = args.out
    if overrides:
        # Round-trip through the text form so overrides are validated like file values.
        text = render_config(cfg.model_copy(update=overrides))
        cfg = parse_config(text)
    return cfg


def _serve(host: str, port: int) -> int:
    import uvicorn

    uvicorn.run("airsum.main:app", host=host, port=port)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")

    if args.command == "serve":
        return _serve(args.host, args.port)

    try:
        cfg = _resolve_config(args)
        logger.info(f"Running {args.command} with seed {cfg.seed}")
        table = run_command(args.command, cfg, progress=args.progress)
        if cfg.output:
            write_csv(table, cfg.output)
        else:
            sys.stdout.write(render_csv(table))
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"airsum {args.command}: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
