#!/usr/bin/env python3
"""
NNPhD - Main Entry Point

Command line driver: ``nnphd run <config>`` runs one experiment (or a batch)
from a JSON/YAML config file or a preset name and writes its artifacts.

Exit codes: 0 success, 2 configuration error or missing dependency,
3 numerical failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.utils.dependency_checker import DependencyChecker

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger(__name__)


def check_dependencies_before_startup() -> bool:
    """Check the numerical stack; print install instructions when something required is missing."""
    checker = DependencyChecker()
    results = checker.check_all()

    if results['missing_optional']:
        for dep in results['missing_optional']:
            logger.warning("Optional dependency %s missing (%s)", dep.name, dep.description)
    if not results['required_installed']:
        print("Missing required dependencies:", file=sys.stderr)
        print(checker.get_install_instructions(results['missing_required']), file=sys.stderr)
        return False
    return True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='nnphd',
        description="Split a force field into a Lagrangian part and a non-conservative residual.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  nnphd run presets/oscillators-p1.json --output-dir results/p1
  nnphd run trajectory-sweeps --threads 3
  nnphd presets
  nnphd presets import my-sweep.yaml --name my-sweep
  nnphd presets export oscillators-p1 oscillators-p1.yaml
  nnphd systems
        """,
    )
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Logging verbosity (default: INFO)")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment config or preset")
    run.add_argument("config", help="Config file (.json/.yaml) or preset name")
    run.add_argument("--output-dir", default=None, help="Override the config's output directory")
    run.add_argument("--seed", type=int, default=None, help="Override the config's seed")
    run.add_argument("--threads", type=int, default=1,
                     help="Worker threads for batch entries and symbolic fit restarts")

    presets = commands.add_parser("presets", help="List, import or export presets")
    preset_actions = presets.add_subparsers(dest="preset_command")
    preset_actions.add_parser("list", help="List presets (default)")
    import_cmd = preset_actions.add_parser("import", help="Validate a config file and store it as a preset")
    import_cmd.add_argument("path", help="Config file (.json/.yaml)")
    import_cmd.add_argument("--name", default=None, help="Preset name (default: file name)")
    export_cmd = preset_actions.add_parser("export", help="Write a preset to a file")
    export_cmd.add_argument("name", help="Preset name")
    export_cmd.add_argument("path", help="Destination file")
    export_cmd.add_argument("--format", choices=["json", "yaml"], default=None,
                            help="Output format (default: from the file suffix)")
    commands.add_parser("systems", help="List registered dynamical systems")
    return parser


def configure_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def cmd_run(args) -> int:
    from src.errors import ConfigError, NNPhDError
    from src.experiments import BatchConfig, PresetManager, run_batch, run_experiment

    if args.threads < 1:
        print("Error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = PresetManager().resolve(args.config).with_overrides(args.output_dir, args.seed)
        if isinstance(config, BatchConfig):
            outputs = run_batch(config, threads=args.threads)
        else:
            outputs = [run_experiment(config, threads=args.threads)]
    except ConfigError as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NNPhDError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL

    for path in outputs:
        print(path)
    return EXIT_OK


def cmd_presets(args) -> int:
    from src.errors import ConfigError
    from src.experiments import PresetManager

    manager = PresetManager()
    action = getattr(args, 'preset_command', None)
    try:
        if action == 'import':
            print(manager.import_preset(args.path, name=args.name))
            return EXIT_OK
        if action == 'export':
            fmt = args.format or ('yaml' if args.path.lower().endswith(('.yaml', '.yml')) else 'json')
            print(manager.export_preset(args.name, args.path, format=fmt))
            return EXIT_OK
    except ConfigError as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    for name in manager.list_presets():
        try:
            print(f"{name:24s} {manager.describe(name)}")
        except ConfigError as e:
            print(f"{name:24s} (unreadable: {e})")
    return EXIT_OK


def cmd_systems(args) -> int:
    from src.dynamics import SYSTEMS

    for name in sorted(SYSTEMS):
        definition = SYSTEMS[name]
        constants = ", ".join(f"{k}={v:g}" for k, v in definition.defaults.items())
        print(f"{name:24s} n={definition.n}  {constants}")
        print(f"{'':24s} {definition.description}")
    return EXIT_OK


COMMANDS = {
    'run': cmd_run,
    'presets': cmd_presets,
    'systems': cmd_systems,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the command line."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    if not check_dependencies_before_startup():
        return EXIT_CONFIG
    return COMMANDS[args.command](args)


if __name__ == '__main__':
    sys.exit(main())
