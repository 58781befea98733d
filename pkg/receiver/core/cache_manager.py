"""
设计点评估缓存
evaluate_design 是纯函数，同一设计点 + 同一标定只需算一次；按 LRU 淘汰。
"""
import hashlib
import logging
import threading
from collections import OrderedDict
from typing import Any, Dict, Optional

from pydantic import BaseModel

from utils import json

logger = logging.getLogger("ulprx.cache_manager")


class CacheEntry:
    """缓存条目"""

    __slots__ = ('value', 'access_count')

    def __init__(self, value: Any):
        self.value = value
        self.access_count = 0

    def touch(self):
        self.access_count += 1


class EvaluationCache:
    """线程安全的 LRU 缓存，max_size=0 表示不缓存"""

    def __init__(self, max_size: int = 4096):
        self.max_size = max_size
        self._cache: "OrderedDict[str, CacheEntry]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def compute_key(point: BaseModel, context: str = "") -> str:
        """设计点 JSON（键排序）+ 上下文（通常是标定哈希）的 md5"""
        payload = json.dumps(point.model_dump(mode="json"), sort_keys=True)
        digest = hashlib.md5(f"{context}|{payload}".encode()).hexdigest()
        return f"design:{digest}"

    def get(self, key: str) -> Optional[Any]:
        with self._lock:
            entry = self._cache.get(key)
            if entry is None:
                self.misses += 1
                return None
            self._cache.move_to_end(key)
            entry.touch()
            self.hits += 1
            return entry.value

    def set(self, key: str, value: Any) -> None:
        if self.max_size <= 0:
            return
        with self._lock:
            if key in self._cache:
                self._cache.move_to_end(key)
            self._cache[key] = CacheEntry(value)
            while len(self._cache) > self.max_size:
                evicted, _ = self._cache.popitem(last=False)
                logger.debug(f"淘汰缓存条目 {evicted}")

    def resize(self, max_size: int) -> None:
        if max_size < 0:
            raise ValueError(f"max_size 必须非负，当前为 {max_size}")
        with self._lock:
            self.max_size = max_size
            while len(self._cache) > max_size:
                self._cache.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        return len(self._cache)

    def stats(self) -> Dict[str, Any]:
        """获取缓存统计信息"""
        lookups = self.hits + self.misses
        return {
            "total_entries": len(self._cache),
            "max_size": self.max_size,
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": self.hits / lookups if lookups else 0.0,
        }


__all__ = ['EvaluationCache', 'CacheEntry']
