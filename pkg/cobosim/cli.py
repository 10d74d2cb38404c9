"""Command-line interface for cobosim."""

import json as jsonlib
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click

from . import __version__
from .config.manager import (
    ConfigManager,
    ExperimentConfig,
    config_to_dict,
    dump_config,
    read_config_file,
    save_config,
)
from .config.presets import PRESETS, get_preset, list_presets, merge_raw
from .errors import CoboError, ConfigError
from .operations.compare import compare_algorithms, print_comparison, summarize
from .operations.inspect import inspect_task, print_inspection
from .operations.report import (
    write_ema_csv,
    write_json,
    write_metrics_csv,
    write_snapshots,
    write_summary,
)
from .operations.runner import run_algorithms
from .operations.verify import print_theory_report, verify_theory
from .tasks.layout import ClusterLayout
from .utils.paths import strip_quotes

EXIT_INVALID = 1
EXIT_BOUND_VIOLATION = 2


def _setup_logging(quiet: bool, verbose: bool):
    level = logging.WARNING if quiet else (logging.DEBUG if verbose else logging.INFO)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def _resolve_config(config_file: Optional[str], config_opt: Optional[str], preset: Optional[str],
                    output: Optional[str], seed: Optional[int]) -> ExperimentConfig:
    """Defaults < preset < config file < CLI flags."""
    if config_file and config_opt:
        raise ConfigError("give the config either as an argument or with --config, not both", key="config")
    path = config_file or config_opt
    raw: Dict[str, Any] = get_preset(preset) if preset else {}
    if path:
        raw = merge_raw(raw, read_config_file(strip_quotes(path)))
    if seed is not None:
        raw = merge_raw(raw, {"train": {"seed": seed}})
    if output:
        raw["output_dir"] = strip_quotes(output)
    return ConfigManager().build(raw)


def experiment_options(func):
    """Options shared by the commands that run or describe an experiment."""
    decorators = [
        click.argument("config_file", required=False, type=click.Path(exists=True, dir_okay=False)),
        click.option("--config", "config_opt", type=click.Path(exists=True, dir_okay=False),
                     help="Experiment config file (JSON or YAML)"),
        click.option("--preset", type=click.Choice(sorted(PRESETS)), help="Start from a preset configuration"),
        click.option("--output", "-o", type=click.Path(file_okay=False), help="Output directory"),
        click.option("--seed", type=int, help="Override train.seed"),
        click.option("--quiet", "-q", is_flag=True, help="Only print warnings and results"),
        click.option("--verbose", "-v", is_flag=True, help="Print debug logging"),
        click.option("--json", "as_json", is_flag=True, help="Output result in JSON format"),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def _fail(e: Exception, code: int = EXIT_INVALID):
    click.echo(f"Error: {e}", err=True)
    sys.exit(code)


@click.group()
@click.version_option(version=__version__)
def cli():
    """cobosim - Simulator for collaborative learning with learned client weights."""
    pass


@cli.command()
@experiment_options
@click.option("--jobs", "-j", type=click.IntRange(min=1), default=1, help="Parallel worker processes")
def run(config_file, config_opt, preset, output, seed, quiet, verbose, as_json, jobs):
    """Run each configured algorithm and write per-round metrics.

    CONFIG_FILE: Experiment config (JSON or YAML)
    """
    _setup_logging(quiet, verbose)
    try:
        cfg = _resolve_config(config_file, config_opt, preset, output, seed)
        out_dir = Path(cfg.output_dir)
        layout = ClusterLayout.blocks(cfg.task.K, cfg.task.c)
        results = run_algorithms(cfg, cfg.algorithms, jobs=jobs, progress=not quiet)

        for result in results.values():
            write_metrics_csv(result, layout, out_dir)
            if cfg.emit_snapshots:
                write_snapshots(result, out_dir)
                write_ema_csv(result, out_dir)
        save_config(cfg, out_dir / "config.json")

        summary = summarize(results, cfg.train.tail_fraction)
        summary.update(seed=cfg.train.seed, T=cfg.train.T)
        if as_json:
            click.echo(jsonlib.dumps(summary, indent=2))
        else:
            print_comparison(summary)
            click.echo(f"✓ Results written to {out_dir}")
    except Exception as e:
        _fail(e)


@cli.command()
@experiment_options
@click.option("--jobs", "-j", type=click.IntRange(min=1), default=1, help="Parallel worker processes")
def compare(config_file, config_opt, preset, output, seed, quiet, verbose, as_json, jobs):
    """Run every algorithm on the same task instance and summarize.

    CONFIG_FILE: Experiment config (JSON or YAML)
    """
    _setup_logging(quiet, verbose)
    try:
        cfg = _resolve_config(config_file, config_opt, preset, output, seed)
        out_dir = Path(cfg.output_dir)
        summary = compare_algorithms(cfg, jobs=jobs, progress=not quiet)
        write_summary(summary, out_dir)
        save_config(cfg, out_dir / "config.json")
        if as_json:
            click.echo(jsonlib.dumps(summary, indent=2))
        else:
            print_comparison(summary)
            click.echo(f"✓ Summary written to {out_dir}")
    except Exception as e:
        _fail(e)


@cli.command("verify-theory")
@experiment_options
def verify_theory_cmd(config_file, config_opt, preset, output, seed, quiet, verbose, as_json):
    """Run CoBo at theorem-compliant settings and check the bounds.

    Exits 0 when every rate-form bound holds and 2 when a condition or bound fails.

    CONFIG_FILE: Experiment config with a clustered_quadratics task
    """
    _setup_logging(quiet, verbose)
    try:
        cfg = _resolve_config(config_file, config_opt, preset, output, seed)
        out_dir = Path(cfg.output_dir)
        report, _ = verify_theory(cfg, progress=not quiet)
        write_json(report.to_dict(), out_dir / "theory_report.json")
        save_config(cfg, out_dir / "config.json")
    except Exception as e:
        _fail(e)

    if as_json:
        click.echo(jsonlib.dumps(report.to_dict(), indent=2))
    else:
        print_theory_report(report)
    if not report.passed:
        sys.exit(EXIT_BOUND_VIOLATION)


@cli.command()
@experiment_options
def inspect(config_file, config_opt, preset, output, seed, quiet, verbose, as_json):
    """Describe the generated task instance.

    CONFIG_FILE: Experiment config (JSON or YAML)
    """
    _setup_logging(quiet, verbose)
    try:
        cfg = _resolve_config(config_file, config_opt, preset, output, seed)
        info = inspect_task(cfg)
        if as_json:
            click.echo(jsonlib.dumps(info, indent=2))
        else:
            print_inspection(info)
    except Exception as e:
        _fail(e)


@cli.group()
def config():
    """Show or create experiment configuration files."""
    pass


@config.command()
@experiment_options
def show(config_file, config_opt, preset, output, seed, quiet, verbose, as_json):
    """Show the fully resolved configuration.

    CONFIG_FILE: Experiment config (JSON or YAML)
    """
    try:
        cfg = _resolve_config(config_file, config_opt, preset, output, seed)
    except CoboError as e:
        _fail(e)
    if as_json:
        click.echo(jsonlib.dumps(config_to_dict(cfg), indent=2))
    else:
        click.echo(dump_config(cfg, ".yaml"), nl=False)


@config.command()
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--preset", type=click.Choice(sorted(PRESETS)), help="Start from a preset configuration")
@click.option("--overwrite", is_flag=True, help="Overwrite the file if it exists")
def init(path: str, preset: Optional[str], overwrite: bool):
    """Write a complete config file with every default filled in.

    PATH: Destination (.json, .yaml or .yml)
    """
    target = Path(strip_quotes(path))
    if target.exists() and not overwrite:
        click.echo(f"Error: File exists: {target}. Use --overwrite to overwrite.", err=True)
        sys.exit(EXIT_INVALID)
    try:
        cfg = ConfigManager().build(get_preset(preset) if preset else {})
        save_config(cfg, target)
        click.echo(f"✓ Wrote {target}")
    except Exception as e:
        _fail(e)


@cli.command()
def presets():
    """List available presets."""
    presets_dict = list_presets()

    click.echo("Available presets:")
    click.echo("")
    for name, preset in presets_dict.items():
        click.echo(f"  {name}:")
        click.echo(f"    {preset.get('description', 'No description')}")
        raw = preset["config"]
        task = raw.get("task", {})
        train = raw.get("train", {})
        click.echo(f"    task: {task.get('kind')} K={task.get('K')} c={task.get('c')} d={task.get('d')}")
        click.echo(f"    algorithms: {', '.join(raw.get('algorithms', []))}")
        click.echo(f"    train: {', '.join(f'{k}={v}' for k, v in train.items())}")
        click.echo("")


def main():
    """Main entry point for CLI."""
    cli()


if __name__ == "__main__":
    main()
