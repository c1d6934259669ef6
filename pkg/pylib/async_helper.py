# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.async_helper

'''
Coroutines to make it a little easier to run independent experiments side by side
using Python asyncio plus a process pool (each run is CPU-bound & single-threaded)
'''
import sys
import asyncio
import concurrent.futures
from functools import partial


async def console_progress_indicator(pause=0.5, file=sys.stderr):
    '''
    Simple progress indicator for the console. Just prints dots.

    pause - seconds between each dot printed to console, default half a sec

    file - file for dots output, default STDERR
    '''
    while True:
        print('.', end='', flush=True, file=file)
        await asyncio.sleep(pause)


async def schedule_callable(callable, *args, executor=None, **kwargs):
    '''
    Schedule long-running/blocking function call in a separate process,
    wrapped to work well in an asyncio event loop

    e.g. `run_task = asyncio.create_task(schedule_callable(run_and_emit, config, out_dir))`

    Can then use asyncio.wait(), asyncio.gather(), etc. with `run_task`

    Args:
        callable (callable): Callable to be scheduled; must be picklable (module-level)

        executor (concurrent.futures.Executor, optional): pool to use; if omitted, a fresh
            ProcessPoolExecutor runs just this call & is shut down afterward

    Returns:
        Whatever the callable returns
    '''
    loop = asyncio.get_running_loop()
    # Need to partial execute to get in any kwargs for the target callable
    prepped_callable = partial(callable, **kwargs)
    if executor is None:
        with concurrent.futures.ProcessPoolExecutor() as own_pool:
            return await loop.run_in_executor(own_pool, prepped_callable, *args)
    return await loop.run_in_executor(executor, prepped_callable, *args)


async def gather_with_progress(tasks, indicator=True, pause=0.5, file=sys.stderr):
    '''
    Await all the given coroutines/tasks, printing progress dots until they complete.
    Results come back in task order
    '''
    gathered = asyncio.gather(*tasks)
    if not indicator:
        return await gathered
    # Hold a reference to the indicator task, lest it get garbage collected mid-flight
    indicator_task = asyncio.create_task(console_progress_indicator(pause, file))
    try:
        return await gathered
    finally:
        indicator_task.cancel()
        print(file=file)
