import asyncio
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar


T = TypeVar('T')
R = TypeVar('R')


class ScanExecutorBase:
    """Maps a pure function over scan points. Results always come back in input order."""

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


class SerialScanExecutor(ScanExecutorBase):

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        return [fn(item) for item in items]


class ScanPoolExecutor(ScanExecutorBase):
    """Runs scan points on a thread pool; numpy releases the GIL inside the per-point kernels."""

    def __init__(self, *, max_workers: Optional[int] = None):
        if max_workers is None:
            max_workers = 1
        self._thread_pool_executor = ThreadPoolExecutor(max_workers=max_workers)

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        return list(self._thread_pool_executor.map(fn, items))

    def close(self):
        self._thread_pool_executor.shutdown()


class AsyncScanPoolExecutor:
    """Non-blocking front end for asyncio applications; the work itself runs on a thread pool."""

    def __init__(self, *, max_workers: Optional[int] = None):
        if max_workers is None:
            max_workers = 1
        self._thread_pool_executor = ThreadPoolExecutor(max_workers=max_workers)

    async def run(self, fn: Callable[..., R], *args) -> R:
        loop = asyncio.get_event_loop()
        return await loop.run_in_executor(self._thread_pool_executor, fn, *args)

    async def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        # gather preserves argument order
        return list(await asyncio.gather(*(self.run(fn, item) for item in items)))

    def close(self):
        self._thread_pool_executor.shutdown()

    async def __aenter__(self):
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        self.close()
