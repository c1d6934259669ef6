# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.cli

'''
Command line entry point

```sh
stqlearn run --mode st --seed 1 --out-dir runs/st
stqlearn run --config my.cfg --mode full --sweep alpha=0.01,1.0
stqlearn oracle
```
'''

import logging

import click
import numpy as np

from stqlearn.config import ConfigurationError
from stqlearn.harness import FOUR_AGENT_CONFIG, emit_csv, load_config, parse_sweep, run_experiment, sweep, with_override
from stqlearn.lti_core import closed_loop, spectral_radius
from stqlearn.riccati import solve_dare


def _load(config_path):
    try:
        return load_config(config_path or FOUR_AGENT_CONFIG)
    except ConfigurationError as e:
        raise click.ClickException(str(e))


def _echo_summary(label, result):
    s = result.summary()
    line = f'{label}{s.termination} after {s.iterations} iterations, ‖K̂ - K*‖_F = {s.gain_err:.6f}'
    if s.error:
        line += f' ({s.error})'
    click.echo(line)


# Command line arguments defined in click decorators
@click.group()
@click.option('--verbose', '-v', is_flag=True, default=False, help='Log per-step detail (DEBUG)')
def main(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


@main.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Experiment file (TOML); defaults to the bundled four-agent experiment')
@click.option('--mode', type=click.Choice(['st', 'full', 'partial']), default=None,
              help='Observation mode: state tracking, full observation (DQG), zero-filled partial (DQP)')
@click.option('--seed', type=int, default=None, help='PRNG seed')
@click.option('--out-dir', type=click.Path(file_okay=False), default=None, help='Directory for the CSV output')
@click.option('--max-iters', type=int, default=None, help='Policy iteration cap (q_max)')
@click.option('--sweep', 'sweep_spec', default=None, help='Ablation, e.g. N=50,1000 or alpha=0.01,1.0')
@click.option('--serial', is_flag=True, default=False, help='Run sweep values one after another')
def run(config_path, mode, seed, out_dir, max_iters, sweep_spec, serial):
    '''
    Run the learner & write metrics.csv plus final_gains.csv
    '''
    config = _load(config_path)
    try:
        for key, value in (('mode', mode), ('seed', seed), ('q_max', max_iters), ('out_dir', out_dir)):
            if value is not None:
                config = with_override(config, key, value)
        if sweep_spec:
            param, values = parse_sweep(sweep_spec)
            for value, result in sweep(config, param, values, parallel=not serial):
                _echo_summary(f'{param}={value}: ', result)
            return
    except ConfigurationError as e:
        raise click.ClickException(str(e))

    result = run_experiment(config)
    paths = emit_csv(result.records, config.out_dir, result.final_gains)
    _echo_summary('', result)
    for path in paths:
        click.echo(f'Wrote {path}')


@main.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Experiment file (TOML); defaults to the bundled four-agent experiment')
def oracle(config_path):
    '''
    Print the optimal gain K* from the Riccati equation
    '''
    config = _load(config_path)
    solution = solve_dare(config.model)
    with np.printoptions(precision=4, suppress=True):
        click.echo(f'K* ({solution.iterations} Riccati iterations, final change {solution.residual:.2e}):')
        click.echo(str(solution.K_star))
    click.echo(f'Closed loop spectral radius: {spectral_radius(closed_loop(config.model, solution.K_star)):.6f}')
    click.echo(f'K1 closed loop spectral radius: {spectral_radius(closed_loop(config.model, config.K1)):.6f}')


if __name__ == '__main__':
    # CLI entry point. Also protects against re-execution of main() after process fork
    # viz https://docs.python.org/3/library/multiprocessing.html#multiprocessing-safe-main-import
    main()
