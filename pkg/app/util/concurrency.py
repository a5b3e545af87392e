import threading
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


class KeyedMemoryLockManager:
    """One lock per key, created on first use. Guards lazy service and bundle creation."""

    def __init__(self) -> None:
        self.locks: dict[str, threading.Lock] = {}
        self.global_lock = threading.Lock()

    def _get_lock(self, key: str) -> threading.Lock:
        with self.global_lock:
            if key not in self.locks:
                self.locks[key] = threading.Lock()
            return self.locks[key]

    @contextmanager
    def lock(self, key: str) -> Iterator[None]:
        lock = self._get_lock(key)
        lock.acquire()
        try:
            yield
        finally:
            lock.release()


def ordered_map(fn: Callable[[T], R], items: Iterable[T], max_workers: int | None = None) -> list[R]:
    """Apply `fn` on a thread pool and return results in input order, whatever the completion order."""
    work = list(items)
    if (max_workers is not None and max_workers <= 1) or len(work) <= 1:
        return [fn(item) for item in work]
    with ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="mpp") as pool:
        return list(pool.map(fn, work))
