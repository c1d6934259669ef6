# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn/demo/compare_modes.py
'''
Runs the bundled four-agent experiment three times side by side, once per observation mode
(state tracking, full observation, zero-filled partial observation), each in its own process.
Shows a progress indicator while the runs are going, then a per-iteration comparison of the
gain error ‖K̂ - K*‖_F.

```sh
python demo/compare_modes.py --max-iters 10 --out-dir runs/compare
```
'''
import asyncio
import concurrent.futures
from pathlib import Path

import click

from stqlearn.async_helper import console_progress_indicator, schedule_callable
from stqlearn.harness import FOUR_AGENT_CONFIG, load_config, run_and_emit, with_override

MODES = ('st', 'full', 'partial')


async def async_main(configs, out_dir):
    '''
    Main entry point for asyncio
    configs - one ExperimentConfig per mode, in MODES order
    '''
    # Pro tip: hold a reference to the indicator task, lest it get garbage collected mid-run
    indicator_task = asyncio.create_task(console_progress_indicator())
    with concurrent.futures.ProcessPoolExecutor() as executor:
        run_tasks = [schedule_callable(run_and_emit, cfg, out_dir / mode, executor=executor)
                     for mode, cfg in zip(MODES, configs)]
        # Need to gather to make sure all runs are completed
        gathered_runs = asyncio.gather(*run_tasks)
        done, _ = await asyncio.wait((indicator_task, gathered_runs), return_when=asyncio.FIRST_COMPLETED)
    indicator_task.cancel()
    print()

    # Completed task is the gather() of the runs; results in original task arg order
    results = next(iter(done)).result()
    longest = max(len(r.records) for r in results)
    print(f'{"q":>4}' + ''.join(f'{m:>12}' for m in MODES))
    for q in range(longest):
        cells = [f'{r.records[q].gain_err_global:12.5f}' if q < len(r.records) else ' ' * 12 for r in results]
        print(f'{q + 1:>4}' + ''.join(cells))
    print('-'*52)
    for mode, result in zip(MODES, results):
        summary = result.summary()
        print(f'{mode:>8}: {summary.termination}' + (f' ({summary.error})' if summary.error else ''))


# Command line arguments defined in click decorators
@click.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=str(FOUR_AGENT_CONFIG),
              help='Experiment file (TOML)')
@click.option('--max-iters', default=10, type=int, help='Policy iteration cap for each run')
@click.option('--seed', default=1, type=int, help='PRNG seed, shared by all three runs')
@click.option('--out-dir', default='runs/compare', type=click.Path(file_okay=False),
              help='Each mode writes its CSVs into a sub-directory of this')
def main(config_path, max_iters, seed, out_dir):
    base = with_override(with_override(load_config(config_path), 'q_max', max_iters), 'seed', seed)
    configs = [with_override(base, 'mode', mode) for mode in MODES]
    asyncio.run(async_main(configs, Path(out_dir)))


if __name__ == '__main__':
    # CLI entry point. Also protects against re-execution of main() after process fork
    # viz https://docs.python.org/3/library/multiprocessing.html#multiprocessing-safe-main-import
    main()
