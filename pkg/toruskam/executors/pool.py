from concurrent import futures
from typing import Any, Callable, Iterable

from toruskam.executors.base import BaseExecutor
from toruskam.utils.logger import logger

MAX_WORKERS_THREAD_POOL_EXECUTOR = 8


class PoolExecutor(BaseExecutor):
    """
    A pool executor that evaluates chunks concurrently on a `concurrent.futures` pool.

    Args:
        pool_executor (type): The type of pool executor to use.
        max_workers (int, optional): The maximum number of workers in the pool. Defaults to None.
    """

    def __init__(
        self,
        pool_executor: type[futures.ThreadPoolExecutor],
        max_workers: int | None = None,
    ):
        super().__init__(max_workers=max_workers)
        self.executor = pool_executor(max_workers=max_workers)

    def shutdown(self, wait: bool = True):
        """
        Shuts down the executor.

        Args:
            wait (bool, optional): Whether to wait for pending futures to complete. Defaults to True.
        """
        self.executor.shutdown(wait=wait)

    def map_chunks(self, func: Callable[[Any], Any], chunks: Iterable[Any]) -> list[Any]:
        """
        Submits every chunk and merges the results in submission order.

        Args:
            func (Callable[[Any], Any]): Pure function evaluated on one chunk.
            chunks (Iterable[Any]): Work chunks.

        Returns:
            list[Any]: Chunk results in input order.
        """
        submitted = [self.executor.submit(func, chunk) for chunk in chunks]
        results = []
        for index, future in enumerate(submitted):
            try:
                results.append(future.result())
            except Exception as e:
                logger.error(f"Chunk {index}: execution failed due the unexpected error. Error: {e}")
                raise
        return results


class ThreadExecutor(PoolExecutor):
    """
    A thread-based pool executor.

    Args:
        max_workers (int, optional): The maximum number of worker threads. Defaults to None.
    """

    def __init__(self, max_workers: int | None = None):
        max_workers = max_workers or MAX_WORKERS_THREAD_POOL_EXECUTOR
        super().__init__(pool_executor=futures.ThreadPoolExecutor, max_workers=max_workers)
