"""
ULP Receiver Explorer - 智能统一日志系统

分类日志：
1. process     流程日志：命令、配置、告警
2. performance 性能监控：扫描、仿真、BER 运行耗时
3. data        数据监控：关键结果指标
4. progress    进度显示：扫描点、BER 试验块

日志条目是 JSON 行（orjson），按类型写入 <log_dir>/<type>_<日期>.jsonl；
控制台输出一律走 stderr，保证 CLI 的 stdout 只有数据。
"""

import logging
import sys
import threading
import time
import uuid
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

from utils import json


# ============ 枚举定义 ============

class LogLevel(Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


_LEVEL_PRIORITY = {
    LogLevel.DEBUG: 10,
    LogLevel.INFO: 20,
    LogLevel.WARNING: 30,
    LogLevel.ERROR: 40,
    LogLevel.CRITICAL: 50,
}


class LogType(Enum):
    PROCESS = "process"
    PERFORMANCE = "performance"
    DATA = "data"
    PROGRESS = "progress"


# ============ 配置类 ============

class ProgressConfig:
    """进度条配置"""

    def __init__(self, config_data: Dict[str, Any]):
        self.enabled = config_data.get("enabled", True)
        self.show_percentage = config_data.get("show_percentage", True)
        self.show_elapsed_time = config_data.get("show_elapsed_time", True)


class LogTypeConfig:
    def __init__(self, config_data: Dict[str, Any]):
        self.enabled = config_data.get("enabled", True)
        self.save_to_file = config_data.get("save_to_file", False)
        self.show_in_console = config_data.get("show_in_console", False)


class LogConfig:
    """日志配置管理（对应配置文件的 logging 部分）"""

    def __init__(self, config_data: Dict[str, Any]):
        self.enabled = config_data.get("enabled", True)
        self.log_dir = Path(config_data.get("log_dir", "logs"))
        self.log_level = LogLevel(str(config_data.get("log_level", "INFO")).upper())

        log_types_config = config_data.get("log_types", {})
        self.type_configs = {
            log_type: LogTypeConfig(log_types_config.get(log_type.value, {}))
            for log_type in LogType
        }

        progress_data = dict(config_data.get("progress", {}))
        progress_data.setdefault("enabled", self.type_configs[LogType.PROGRESS].show_in_console)
        self.progress_config = ProgressConfig(progress_data)

        rotation_config = config_data.get("file_rotation", {})
        self.max_file_size_mb = rotation_config.get("max_size_mb", 100)
        self.backup_count = rotation_config.get("backup_count", 5)

    def is_type_enabled(self, log_type: LogType) -> bool:
        return self.enabled and self.type_configs[log_type].enabled

    def should_save_to_file(self, log_type: LogType) -> bool:
        return self.is_type_enabled(log_type) and self.type_configs[log_type].save_to_file

    def should_show_in_console(self, log_type: LogType) -> bool:
        return self.is_type_enabled(log_type) and self.type_configs[log_type].show_in_console

    def get_log_file_path(self, log_type: LogType) -> Path:
        timestamp = datetime.now().strftime('%Y%m%d')
        return self.log_dir / f"{log_type.value}_{timestamp}.jsonl"


# ============ 处理器 ============

class FileHandler:
    """JSONL 文件处理器，按大小轮转；目录在首次写入时创建"""

    def __init__(self, config: LogConfig):
        self.config = config
        self._locks = {log_type: threading.Lock() for log_type in LogType}

    def handle(self, log_entry: Dict[str, Any]) -> None:
        log_type = LogType(log_entry["type"])
        file_path = self.config.get_log_file_path(log_type)
        with self._locks[log_type]:
            try:
                file_path.parent.mkdir(parents=True, exist_ok=True)
                self._check_and_rotate(file_path)
                with open(file_path, 'a', encoding='utf-8') as f:
                    f.write(json.dumps(log_entry) + '\n')
            except OSError as e:
                sys.stderr.write(f"[FileHandler error] 写入日志文件失败: {e}\n")

    def _check_and_rotate(self, file_path: Path) -> None:
        if not file_path.exists():
            return
        if file_path.stat().st_size <= self.config.max_file_size_mb * 1024 * 1024:
            return
        for i in range(self.config.backup_count - 1, 0, -1):
            old_file = file_path.with_suffix(f".{i}.jsonl")
            if old_file.exists():
                old_file.replace(file_path.with_suffix(f".{i + 1}.jsonl"))
        file_path.replace(file_path.with_suffix(".1.jsonl"))


class ConsoleHandler:
    """控制台处理器（stderr）"""

    def __init__(self, config: LogConfig):
        self.config = config

    def handle(self, log_entry: Dict[str, Any]) -> None:
        log_type = LogType(log_entry["type"])
        if log_type == LogType.PROGRESS:
            return
        level = log_entry.get("level", "INFO")
        stamp = log_entry.get("timestamp_iso", "")
        if log_type == LogType.PERFORMANCE:
            line = f"[PERF {stamp}] {level}: {log_entry.get('message', '')}"
        elif log_type == LogType.DATA:
            line = f"[DATA {stamp}] {level}: {str(log_entry.get('data', ''))[:120]}"
        else:
            line = f"[{stamp}] {level}: {log_entry.get('message', '')}"
        sys.stderr.write(line + "\n")


# ============ 进度条 ============

class ProgressBar:
    """单行进度条，写到 stderr"""

    WIDTH = 10

    def __init__(self, total: int, description: str, config: ProgressConfig, bar_id: str):
        self.total = total
        self.current = 0
        self.description = description
        self.config = config
        self.bar_id = bar_id
        self.start_time = time.time()
        self.extra_info = ""
        self._closed = False
        self._lock = threading.Lock()
        self._render()

    def update(self, advance: int = 1, description: Optional[str] = None, extra_info: Optional[str] = None) -> None:
        with self._lock:
            if self._closed:
                return
            self.current = min(self.current + advance, self.total) if self.total > 0 else self.current + advance
            if description:
                self.description = description
            if extra_info is not None:
                self.extra_info = extra_info
            self._render()

    def _render(self) -> None:
        if not self.config.enabled:
            return
        if self.total > 0:
            filled = int(self.WIDTH * self.current / self.total)
            bar = "[" + "#" * filled + "." * (self.WIDTH - filled) + "]"
        else:
            bar = f"[{self.current}]"
        parts = [p for p in (self.description, bar) if p]
        if self.config.show_percentage and self.total > 0:
            parts.append(f"{100.0 * self.current / self.total:.1f}%")
        if self.config.show_elapsed_time:
            parts.append(f"{time.time() - self.start_time:.1f}s")
        if self.extra_info:
            parts.append(self.extra_info)
        sys.stderr.write("\r" + " ".join(parts))
        sys.stderr.flush()

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            if self.config.enabled:
                sys.stderr.write("\n")
                sys.stderr.flush()


class ProgressManager:
    """进度条管理器"""

    def __init__(self, config: LogConfig):
        self.config = config
        self._active_bars: Dict[str, ProgressBar] = {}
        self._lock = threading.Lock()

    def create(self, total: int, description: str = "", bar_id: Optional[str] = None) -> ProgressBar:
        bar_config = self.config.progress_config
        if not self.config.is_type_enabled(LogType.PROGRESS):
            bar_config = ProgressConfig({"enabled": False})
        bar_id = bar_id or str(uuid.uuid4())
        bar = ProgressBar(total=total, description=description, config=bar_config, bar_id=bar_id)
        with self._lock:
            self._active_bars[bar_id] = bar
        return bar

    def close(self, bar_id: str) -> None:
        with self._lock:
            bar = self._active_bars.pop(bar_id, None)
        if bar:
            bar.close()

    @property
    def active_count(self) -> int:
        with self._lock:
            return len(self._active_bars)


# ============ 日志分类器 ============

class LogCategory:
    """分类日志接口"""

    def __init__(self, logger: 'SmartLogger', log_type: LogType):
        self.logger = logger
        self.log_type = log_type

    def debug(self, message: str, **kwargs) -> None:
        self.logger.log(self.log_type, LogLevel.DEBUG, message, **kwargs)

    def info(self, message: str, **kwargs) -> None:
        self.logger.log(self.log_type, LogLevel.INFO, message, **kwargs)

    def warning(self, message: str, **kwargs) -> None:
        self.logger.log(self.log_type, LogLevel.WARNING, message, **kwargs)

    def error(self, message: str, **kwargs) -> None:
        self.logger.log(self.log_type, LogLevel.ERROR, message, **kwargs)

    def record(self, key: str, value: Any, level: LogLevel = LogLevel.INFO) -> None:
        """记录一个指标（DATA / PERFORMANCE）"""
        if self.log_type not in (LogType.DATA, LogType.PERFORMANCE):
            raise ValueError("record方法仅用于DATA和PERFORMANCE类型的日志")
        self.logger.log(self.log_type, level, f"记录数据: {key}", data={key: value})

    def start_timer(self, timer_name: str) -> None:
        if self.log_type != LogType.PERFORMANCE:
            raise ValueError("start_timer方法仅用于PERFORMANCE类型的日志")
        self.logger._start_timer(timer_name)

    def stop_timer(self, timer_name: str) -> float:
        """停止计时器，记录并返回耗时（秒）"""
        if self.log_type != LogType.PERFORMANCE:
            raise ValueError("stop_timer方法仅用于PERFORMANCE类型的日志")
        elapsed = self.logger._stop_timer(timer_name)
        self.logger.log(self.log_type, LogLevel.INFO, f"{timer_name} 耗时 {elapsed:.3f}s",
                        data={"timer": timer_name, "elapsed_s": elapsed})
        return elapsed


# ============ 主日志类 ============

class SmartLogger:
    """智能日志记录器（单例模式）"""

    _instance: Optional['SmartLogger'] = None
    _lock = threading.Lock()

    def __new__(cls, *args, **kwargs):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
                    cls._instance._initialized = False
        return cls._instance

    def __init__(self, config: Optional[LogConfig] = None):
        if getattr(self, '_initialized', False):
            return
        self._timers: Dict[str, float] = {}
        self._timers_lock = threading.Lock()
        self.process = LogCategory(self, LogType.PROCESS)
        self.performance = LogCategory(self, LogType.PERFORMANCE)
        self.data = LogCategory(self, LogType.DATA)
        self.reconfigure(config or LogConfig({}))
        self._initialized = True

    def reconfigure(self, config: LogConfig) -> None:
        """替换配置（CLI 读到配置文件之后调用）"""
        self.config = config
        self._file_handler = FileHandler(config)
        self._console_handler = ConsoleHandler(config)
        self.progress = ProgressManager(config)

    def log(self, log_type: LogType, level: LogLevel, message: str, **kwargs) -> None:
        if not self.config.is_type_enabled(log_type):
            return
        if _LEVEL_PRIORITY[level] < _LEVEL_PRIORITY[self.config.log_level]:
            return
        entry = {
            "id": str(uuid.uuid4()),
            "type": log_type.value,
            "level": level.value,
            "timestamp": time.time(),
            "timestamp_iso": datetime.now().isoformat(),
            "message": message,
            **kwargs,
        }
        if self.config.should_save_to_file(log_type):
            self._file_handler.handle(entry)
        if self.config.should_show_in_console(log_type):
            self._console_handler.handle(entry)

    def _start_timer(self, timer_name: str) -> None:
        with self._timers_lock:
            self._timers[timer_name] = time.perf_counter()

    def _stop_timer(self, timer_name: str) -> float:
        with self._timers_lock:
            start_time = self._timers.pop(timer_name, None)
        if start_time is None:
            return 0.0
        return time.perf_counter() - start_time

    def shutdown(self) -> None:
        for bar_id in list(self.progress._active_bars):
            self.progress.close(bar_id)


# ============ 全局实例和便利函数 ============

_smart_logger_instance: Optional[SmartLogger] = None


def get_smart_logger() -> SmartLogger:
    """获取全局实例"""
    global _smart_logger_instance
    if _smart_logger_instance is None:
        _smart_logger_instance = SmartLogger()
    return _smart_logger_instance


def init_smart_logger(config_data: Dict[str, Any]) -> SmartLogger:
    """按配置初始化；已存在的实例会被重新配置"""
    smart_logger = get_smart_logger()
    smart_logger.reconfigure(LogConfig(config_data))
    return smart_logger


def shutdown_smart_logger() -> None:
    if _smart_logger_instance is not None:
        _smart_logger_instance.shutdown()


# ============ 标准logging适配器 ============

class StandardLoggingAdapter(logging.Handler):
    """把标准 logging 记录转发给 SmartLogger"""

    _LEVEL_MAP = {
        logging.DEBUG: LogLevel.DEBUG,
        logging.INFO: LogLevel.INFO,
        logging.WARNING: LogLevel.WARNING,
        logging.ERROR: LogLevel.ERROR,
        logging.CRITICAL: LogLevel.CRITICAL,
    }

    def __init__(self, smart_logger: Optional[SmartLogger] = None):
        super().__init__()
        self.smart_logger = smart_logger or get_smart_logger()
        self.setFormatter(logging.Formatter('%(name)s - %(message)s'))

    def emit(self, record: logging.LogRecord) -> None:
        try:
            level = self._LEVEL_MAP.get(record.levelno, LogLevel.INFO)
            log_type = LogType.PERFORMANCE if record.name.endswith(".perf") else LogType.PROCESS
            extra = {
                field: getattr(record, field)
                for field in ("command", "seed", "config_hash", "block")
                if getattr(record, field, None) is not None
            }
            self.smart_logger.log(log_type, level, self.format(record), logger=record.name, **extra)
        except Exception as e:
            sys.stderr.write(f"[StandardLoggingAdapter error] {e}\n")


def setup_logging_integration(
    logger_name: str = "ulprx",
    level: Union[int, str] = logging.INFO,
    propagate: bool = False,
    smart_logger: Optional[SmartLogger] = None,
) -> None:
    """把指定 logger 接到 SmartLogger"""
    smart_logger = smart_logger or get_smart_logger()
    logger = logging.getLogger(logger_name)
    logger.setLevel(level)
    logger.propagate = propagate
    for handler in logger.handlers[:]:
        if isinstance(handler, StandardLoggingAdapter):
            logger.removeHandler(handler)
    logger.addHandler(StandardLoggingAdapter(smart_logger))


def configure_root_logging(
    level: Union[int, str] = logging.INFO,
    smart_logger: Optional[SmartLogger] = None,
) -> None:
    """项目根 logger（ulprx.*）使用 SmartLogger"""
    setup_logging_integration(logger_name="ulprx", level=level, propagate=False, smart_logger=smart_logger)


__all__ = [
    'SmartLogger', 'LogConfig', 'LogType', 'LogLevel',
    'get_smart_logger', 'init_smart_logger', 'shutdown_smart_logger',
    'StandardLoggingAdapter', 'setup_logging_integration', 'configure_root_logging',
    'ProgressManager', 'ProgressBar',
]
