# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# test/test_async_helper.py
'''
pytest test

or

pytest test/test_async_helper.py
'''

import asyncio
import concurrent.futures
import io

from stqlearn.async_helper import gather_with_progress, schedule_callable


async def _slow(value, delay):
    await asyncio.sleep(delay)
    return value


def _power(base, exponent=2):
    return base ** exponent


class _TrackedPool(concurrent.futures.ThreadPoolExecutor):
    # Stands in for a process pool, recording whether it was shut down
    instances = []

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.closed = False
        _TrackedPool.instances.append(self)

    def shutdown(self, *args, **kwargs):
        self.closed = True
        super().shutdown(*args, **kwargs)


def test_gather_keeps_task_order():
    out = io.StringIO()
    tasks = [_slow('a', 0.06), _slow('b', 0.01), _slow('c', 0.03)]
    results = asyncio.run(gather_with_progress(tasks, pause=0.01, file=out))
    assert results == ['a', 'b', 'c']
    assert '.' in out.getvalue()
    assert out.getvalue().endswith('\n')


def test_gather_without_indicator():
    out = io.StringIO()
    results = asyncio.run(gather_with_progress([_slow(1, 0.0), _slow(2, 0.0)], indicator=False, file=out))
    assert results == [1, 2]
    assert out.getvalue() == ''


def test_schedule_callable_passes_kwargs():
    async def run():
        with concurrent.futures.ThreadPoolExecutor() as executor:
            return await asyncio.gather(schedule_callable(_power, 3, executor=executor),
                                        schedule_callable(_power, 2, exponent=5, executor=executor))
    assert asyncio.run(run()) == [9, 32]


def test_schedule_callable_closes_its_own_pool(mocker):
    _TrackedPool.instances.clear()
    mocker.patch('concurrent.futures.ProcessPoolExecutor', _TrackedPool)
    assert asyncio.run(schedule_callable(_power, 4)) == 16
    assert len(_TrackedPool.instances) == 1
    assert _TrackedPool.instances[0].closed


if __name__ == '__main__':
    raise SystemExit("Attention! Run with pytest")
