#!/usr/bin/env python3
"""
Command-line interface for the projected cooling simulator.
"""

import sys
from pathlib import Path
from typing import Dict, List, Optional

import click

from .checks import SUITES, check_all
from .config import EXPERIMENTS, Config, ExperimentConfig, apply_overrides
from .exceptions import ConfigurationError, ProjectedCoolingError
from .harness import ExperimentRunner

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _fail(message: str, code: int, verbose: bool) -> None:
    click.echo(f"❌ {message}", err=True)
    if verbose:
        import traceback
        traceback.print_exc()
    sys.exit(code)


def _settings(ctx) -> Config:
    return ctx.obj['config']


def _execute(ctx, config: ExperimentConfig, output_dir: Optional[str], workers: Optional[int]) -> None:
    """Run one config and exit with the acceptance status."""
    settings = _settings(ctx)
    verbose = ctx.obj['verbose']
    out = output_dir or config.output_dir or settings.default_output_dir
    runner = ExperimentRunner(output_dir=out, verbose=verbose,
                              workers=workers or settings.default_workers)
    try:
        artifact = runner.run(config)
    except KeyboardInterrupt:
        click.echo("\n⏹️  Run interrupted by user")
        raise click.Abort()
    except ConfigurationError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG, verbose)
    except ProjectedCoolingError as e:
        _fail(f"Simulation error: {e}", EXIT_FAILED, verbose)

    click.echo(f"📁 Files saved to: {Path(out).absolute()}")
    if artifact.checks and not artifact.passed:
        names = ', '.join(c.name for c in artifact.failures())
        _fail(f"Acceptance failed: {names}", EXIT_FAILED, False)
    if artifact.checks:
        click.echo(f"🎉 All {len(artifact.checks)} acceptance checks passed")


def _figure_config(ctx, experiment: str, seed: Optional[int], eps: Optional[float],
                   realizations: Optional[int] = None) -> ExperimentConfig:
    overrides: Dict[str, object] = {'seed': seed if seed is not None else _settings(ctx).default_seed}
    if eps is not None:
        overrides['epsilon'] = eps
    if realizations is not None:
        overrides['realizations'] = realizations
    try:
        return apply_overrides(ExperimentConfig.for_experiment(experiment), overrides)
    except ConfigurationError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG, ctx.obj['verbose'])


def _load(ctx, config_file: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.load(config_file)
    except ConfigurationError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG, ctx.obj['verbose'])


@click.group(invoke_without_command=True)
@click.pass_context
@click.option(
    '--env-file',
    default='.env',
    help='Path to .env file (default: .env)'
)
@click.option(
    '--verbose', '-v',
    is_flag=True,
    help='Enable verbose output'
)
def cli(ctx, env_file, verbose):
    """
    Projected cooling simulator - prepare localized ground states on lattice chains.

    If no subcommand is provided, shows this help.
    """
    ctx.ensure_object(dict)
    ctx.obj['config'] = Config(env_file)
    ctx.obj['verbose'] = verbose
    if verbose and Path(env_file).exists():
        click.echo(f"Loaded environment from {env_file}")
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


def _figure_options(func):
    func = click.option('--workers', '-j', type=int, help='Worker processes (default: PCOOL_WORKERS or 1)')(func)
    func = click.option('--eps', type=float, help='Noise strength for the noisy curves')(func)
    func = click.option('--seed', type=int, help='Root seed (default: PCOOL_SEED or 1)')(func)
    func = click.option('--out', '-o', help='Output directory (default: PCOOL_OUTPUT_DIR or pcool_results)')(func)
    return func


@cli.command()
@click.argument('config_file')
@click.option('--out', '-o', help='Output directory (overrides the config file)')
@click.option('--workers', '-j', type=int, help='Worker processes')
@click.pass_context
def run(ctx, config_file, out, workers):
    """Run the experiment described by a JSON config file."""
    _execute(ctx, _load(ctx, config_file), out, workers)


@cli.command()
@_figure_options
@click.pass_context
def fig1(ctx, out, seed, eps, workers):
    """Five random initial states converge to the Model 1A bound state."""
    _execute(ctx, _figure_config(ctx, 'fig1', seed, eps), out, workers)


@cli.command()
@_figure_options
@click.option('--realizations', type=int, help='Noise realizations averaged per noisy curve (default: 1)')
@click.pass_context
def fig2a(ctx, out, seed, eps, workers, realizations):
    """Projected cooling vs adiabatic evolution on Model 1B."""
    _execute(ctx, _figure_config(ctx, 'fig2a', seed, eps, realizations), out, workers)


@cli.command()
@_figure_options
@click.option('--realizations', type=int, help='Noise realizations averaged per noisy curve (default: 1)')
@click.pass_context
def fig2b(ctx, out, seed, eps, workers, realizations):
    """Projected cooling vs adiabatic evolution on the two-chain Model 2."""
    _execute(ctx, _figure_config(ctx, 'fig2b', seed, eps, realizations), out, workers)


@cli.command()
@_figure_options
@click.pass_context
def fig3(ctx, out, seed, eps, workers):
    """Interior wavefunction grids for Model 2: exact, AE and PC."""
    _execute(ctx, _figure_config(ctx, 'fig3', seed, eps), out, workers)


@cli.command()
@click.option(
    '--suite', '-s',
    multiple=True,
    type=click.Choice(SUITES),
    help='Suite to run (repeatable; default: all)'
)
@click.option('--workers', '-j', type=int, help='Worker processes for the figure suites')
@click.pass_context
def check(ctx, suite, workers):
    """
    Run qubit-equivalence, invariant, oracle and acceptance checks.

    Exits with status 1 if any check fails.
    """
    verbose = ctx.obj['verbose']
    try:
        report = check_all(list(suite) or None, workers=workers or _settings(ctx).default_workers)
    except ProjectedCoolingError as e:
        _fail(f"Check aborted: {e}", EXIT_FAILED, verbose)

    for result in report.results:
        if verbose or not result.passed:
            click.echo(result.describe())
    passed = len(report.results) - len(report.failures())
    click.echo(f"\n📊 {passed}/{len(report.results)} checks passed")
    if not report.passed:
        sys.exit(EXIT_FAILED)


def _parse_params(params: List[str]) -> Dict[str, List[str]]:
    grid: Dict[str, List[str]] = {}
    for param in params:
        key, sep, values = param.partition('=')
        if not sep or not key or not values:
            raise ConfigurationError(f"Expected key=v1,v2,... got '{param}'")
        grid[key.strip()] = [v.strip() for v in values.split(',') if v.strip()]
    return grid


@cli.command()
@click.argument('config_file')
@click.option(
    '--param', '-p',
    multiple=True,
    required=True,
    help='Override grid, e.g. model.kinetic_scale=1,2,4 (repeatable)'
)
@click.option('--out', '-o', help='Output directory (overrides the config file)')
@click.option('--workers', '-j', type=int, help='Worker processes for sweep points')
@click.pass_context
def sweep(ctx, config_file, param, out, workers):
    """Run a cartesian grid of parameter overrides on a base config."""
    settings = _settings(ctx)
    verbose = ctx.obj['verbose']
    config = _load(ctx, config_file)
    out = out or config.output_dir or settings.default_output_dir
    runner = ExperimentRunner(output_dir=out, verbose=verbose,
                              workers=workers or settings.default_workers)
    try:
        artifacts = runner.sweep(config, _parse_params(list(param)))
    except ConfigurationError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG, verbose)
    except ProjectedCoolingError as e:
        _fail(f"Simulation error: {e}", EXIT_FAILED, verbose)

    click.echo(f"\n📊 Sweep complete: {len(artifacts)} points")
    for artifact in artifacts:
        status = "✅" if artifact.passed else "❌"
        click.echo(f"   {status} {artifact.name}")
    click.echo(f"📁 Files saved to: {Path(out).absolute()}")
    if not all(a.passed for a in artifacts):
        sys.exit(EXIT_FAILED)


@cli.command('init-config')
@click.argument('experiment', type=click.Choice(EXPERIMENTS))
@click.argument('config_file')
@click.option('--force', is_flag=True, help='Overwrite an existing file')
def init_config(experiment, config_file, force):
    """Write the default config of an experiment to a JSON file."""
    path = Path(config_file)
    if path.exists() and not force:
        click.echo(f"❌ {config_file} already exists (use --force to overwrite)", err=True)
        sys.exit(EXIT_CONFIG)
    ExperimentConfig.for_experiment(experiment).save(path)
    click.echo(f"✅ Created {experiment} config: {config_file}")


def main():
    """Main entry point."""
    cli()


if __name__ == '__main__':
    cli()
