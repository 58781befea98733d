#!/usr/bin/env python3
"""
线程池与评估缓存测试
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import threading
import time
import unittest

from receiver.core.cache_manager import EvaluationCache
from receiver.core.types import DesignPoint, replace
from worker_pool import WorkerPool, worker_pool


class TestWorkerPool(unittest.TestCase):

    def setUp(self):
        self.original = worker_pool.workers

    def tearDown(self):
        worker_pool.configure(self.original)

    def test_singleton(self):
        self.assertIs(WorkerPool(), worker_pool)

    def test_results_keep_input_order(self):
        worker_pool.configure(4)

        def slow_square(x):
            # 前面的任务更慢，完成顺序与输入顺序相反
            time.sleep(0.002 * (10 - x))
            return x * x

        self.assertEqual(worker_pool.map_ordered(slow_square, range(10)), [x * x for x in range(10)])

    def test_serial_mode_runs_inline(self):
        worker_pool.configure(1)
        threads = worker_pool.map_ordered(lambda _: threading.current_thread().name, range(3))
        self.assertEqual(set(threads), {threading.current_thread().name})

    def test_progress_callback(self):
        worker_pool.configure(3)
        done = []
        lock = threading.Lock()

        def on_done():
            with lock:
                done.append(1)

        worker_pool.map_ordered(lambda x: x, range(7), on_done=on_done)
        self.assertEqual(len(done), 7)

    def test_exception_propagates(self):
        worker_pool.configure(2)

        def fail(x):
            if x == 3:
                raise RuntimeError("boom")
            return x

        with self.assertRaises(RuntimeError):
            worker_pool.map_ordered(fail, range(5))

    def test_configure_rejects_zero(self):
        with self.assertRaises(ValueError):
            worker_pool.configure(0)

    def test_stats(self):
        worker_pool.configure(2)
        before = worker_pool.stats()["submitted"]
        worker_pool.map_ordered(lambda x: x, range(5))
        stats = worker_pool.stats()
        self.assertEqual(stats["workers"], 2)
        self.assertEqual(stats["submitted"], before + 5)

    def test_submitted_count_under_concurrency(self):
        # 多个线程同时提交，计数不丢失
        worker_pool.configure(1)
        before = worker_pool.stats()["submitted"]
        threads = [threading.Thread(target=worker_pool.map_ordered, args=(lambda x: x, range(200)))
                   for _ in range(8)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        self.assertEqual(worker_pool.stats()["submitted"], before + 8 * 200)


class TestEvaluationCache(unittest.TestCase):

    def test_key_depends_on_point_and_context(self):
        a = DesignPoint()
        b = replace(a, data_rate=1e6)
        self.assertEqual(EvaluationCache.compute_key(a, "cal"), EvaluationCache.compute_key(DesignPoint(), "cal"))
        self.assertNotEqual(EvaluationCache.compute_key(a, "cal"), EvaluationCache.compute_key(b, "cal"))
        self.assertNotEqual(EvaluationCache.compute_key(a, "cal"), EvaluationCache.compute_key(a, "other"))
        self.assertTrue(EvaluationCache.compute_key(a).startswith("design:"))

    def test_lru_eviction(self):
        cache = EvaluationCache(max_size=2)
        cache.set("a", 1)
        cache.set("b", 2)
        self.assertEqual(cache.get("a"), 1)
        cache.set("c", 3)
        self.assertIsNone(cache.get("b"))
        self.assertEqual(cache.get("a"), 1)
        self.assertEqual(cache.get("c"), 3)
        self.assertEqual(len(cache), 2)

    def test_disabled_cache(self):
        cache = EvaluationCache(max_size=0)
        cache.set("a", 1)
        self.assertIsNone(cache.get("a"))
        self.assertEqual(len(cache), 0)

    def test_stats_and_clear(self):
        cache = EvaluationCache(max_size=8)
        cache.set("a", 1)
        cache.get("a")
        cache.get("missing")
        stats = cache.stats()
        self.assertEqual((stats["hits"], stats["misses"]), (1, 1))
        cache.clear()
        self.assertEqual(len(cache), 0)
        self.assertEqual(cache.stats()["hits"], 0)


if __name__ == "__main__":
    unittest.main()
