"""
工作线程池管理器

扫描点与 BER 试验块彼此独立，统一交给一个共享的线程池执行；
结果总是按输入顺序返回，与线程数和调度无关。
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

logger = logging.getLogger("ulprx.worker_pool")

T = TypeVar("T")
U = TypeVar("U")


class WorkerPool:
    """
    线程池单例

    numpy/scipy 的重计算会释放 GIL，线程池足以并行；
    workers=1 时直接串行执行，便于调试。
    """

    _instance: Optional["WorkerPool"] = None
    _lock = threading.Lock()

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
                    cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if not self._initialized:
            self._executor: Optional[ThreadPoolExecutor] = None
            self._workers = 4
            self._submitted = 0
            self._state_lock = threading.Lock()
            self._initialized = True
            logger.debug("WorkerPool 初始化完成")

    def configure(self, workers: int) -> None:
        """调整线程数；已有线程池会被关闭重建"""
        if workers < 1:
            raise ValueError("workers 必须 ≥ 1")
        with self._state_lock:
            if workers == self._workers:
                return
            self._workers = workers
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None
        logger.info(f"WorkerPool 线程数设为 {workers}")

    @property
    def workers(self) -> int:
        return self._workers

    def _get_executor(self) -> ThreadPoolExecutor:
        with self._state_lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=self._workers, thread_name_prefix="ulprx")
            return self._executor

    def map_ordered(self, fn: Callable[[T], U], items: Iterable[T],
                    on_done: Optional[Callable[[], None]] = None) -> List[U]:
        """并行执行 fn，结果顺序与 items 一致"""
        items = list(items)
        with self._state_lock:
            self._submitted += len(items)
        if self._workers == 1 or len(items) <= 1:
            results = []
            for item in items:
                results.append(fn(item))
                if on_done:
                    on_done()
            return results

        executor = self._get_executor()
        futures = [executor.submit(fn, item) for item in items]
        if on_done:
            for future in futures:
                future.add_done_callback(lambda _f: on_done())
        return [future.result() for future in futures]

    def stats(self) -> Dict[str, Any]:
        return {
            "workers": self._workers,
            "active": self._executor is not None,
            "submitted": self._submitted,
        }

    def close_all(self) -> None:
        with self._state_lock:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None
        logger.info("WorkerPool 已关闭")


worker_pool = WorkerPool()


__all__ = ['WorkerPool', 'worker_pool']
