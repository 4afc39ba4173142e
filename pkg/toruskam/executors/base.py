from abc import ABC, abstractmethod
from typing import Any, Callable, Iterable


class BaseExecutor(ABC):
    """
    Abstract base class for executors that evaluate independent work chunks.

    Attributes:
        max_workers (int | None): Maximum number of concurrent workers. None means no limit.
    """

    def __init__(self, max_workers: int | None = None):
        self.max_workers = max_workers

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.shutdown(wait=True)

    @abstractmethod
    def shutdown(self, wait: bool = True):
        """
        Shut down the executor.

        Args:
            wait (bool, optional): Whether to wait for pending tasks to complete. Defaults to True.

        Raises:
            NotImplementedError: This method must be implemented by subclasses.
        """
        raise NotImplementedError

    @abstractmethod
    def map_chunks(self, func: Callable[[Any], Any], chunks: Iterable[Any]) -> list[Any]:
        """
        Apply `func` to every chunk and return the results in chunk order.

        Args:
            func (Callable[[Any], Any]): Pure function evaluated on one chunk.
            chunks (Iterable[Any]): Work chunks.

        Returns:
            list[Any]: Results, ordered like the input chunks regardless of completion order.

        Raises:
            NotImplementedError: This method must be implemented by subclasses.
        """
        raise NotImplementedError
