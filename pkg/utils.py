"""
ULP Receiver Explorer - 通用工具函数

包含可复用的工具函数和配置，例如：
1. orjson初始化（性能优化的JSON处理）
2. dB/线性换算与Q函数（全项目唯一入口，避免换算漂移）
3. 领域异常层次
"""
import math
from typing import Optional

import numpy as np
from scipy import special

try:
    import orjson as _orjson

    class _FastJSON:
        @staticmethod
        def dumps(obj, **kwargs):
            option = _orjson.OPT_NON_STR_KEYS | _orjson.OPT_SERIALIZE_NUMPY
            if kwargs.get('sort_keys'):
                option |= _orjson.OPT_SORT_KEYS
            if kwargs.get('indent'):
                option |= _orjson.OPT_INDENT_2
            # orjson.dumps返回bytes，解码为str以保持兼容性
            return _orjson.dumps(obj, option=option).decode()

        @staticmethod
        def loads(s, **kwargs):
            return _orjson.loads(s)

    json = _FastJSON()
    import json as std_json
    json.JSONDecodeError = std_json.JSONDecodeError
except ImportError:
    import json


# ============ 常量 ============

SPEED_OF_LIGHT = 299_792_458.0      # m/s
BOLTZMANN = 1.380649e-23            # J/K
T0_KELVIN = 290.0                   # 噪声参考温度
THERMAL_FLOOR_DBM_HZ = -174.0       # kT @ 290 K


# ============ 异常 ============

class DomainError(ValueError):
    """领域错误：输入超出模型定义域，消息中带字段名"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class RangeError(DomainError):
    """参数超出标定范围"""


class InfeasibleError(DomainError):
    """不存在满足约束的解"""

    def __init__(self, message: str, field: Optional[str] = None, limit: Optional[float] = None):
        self.limit = limit
        super().__init__(message, field)


class UndersampledError(DomainError):
    """采样率低于 32×LO 下限"""


class ResolutionError(DomainError):
    """频谱分辨率不足"""


class DecodeError(DomainError):
    """8b/10b 解码错误，index 为出错码组序号"""

    def __init__(self, message: str, index: int, kind: str):
        self.index = index
        self.kind = kind
        super().__init__(f"{message} (group {index}, {kind})", field="bits")


class DesignError(DomainError):
    """设计点中某个模块不可行"""

    def __init__(self, block: str, cause: Exception):
        self.block = block
        self.cause = cause
        field = getattr(cause, "field", None)
        super().__init__(f"[{block}] {cause}", field=field or block)


class ConfigError(DomainError):
    """配置文件错误"""


# ============ dB 换算 ============

def db_to_linear(value_db):
    """功率 dB → 线性"""
    if np.ndim(value_db):
        return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)
    return 10.0 ** (float(value_db) / 10.0)


def linear_to_db(value):
    """线性功率比 → dB；0 → -inf"""
    if np.ndim(value):
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(np.asarray(value, dtype=float))
    value = float(value)
    if value == 0.0:
        return -math.inf
    if value < 0.0:
        raise DomainError("线性功率比必须非负", field="value")
    return 10.0 * math.log10(value)


def q_function(x):
    """高斯尾概率 Q(x) = erfc(x/√2)/2"""
    if np.ndim(x):
        return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return 0.5 * float(special.erfc(float(x) / math.sqrt(2.0)))


def q_inverse(p: float) -> float:
    """Q 函数反函数"""
    if not 0.0 < p < 1.0:
        raise DomainError(f"概率必须在(0,1)内，当前为 {p}", field="p")
    return math.sqrt(2.0) * float(special.erfcinv(2.0 * p))


def require_positive(value: float, field: str) -> float:
    """正数前置条件检查"""
    if not value > 0.0:
        raise DomainError(f"必须为正数，当前为 {value}", field=field)
    return float(value)


__all__ = [
    'json', 'SPEED_OF_LIGHT', 'BOLTZMANN', 'T0_KELVIN', 'THERMAL_FLOOR_DBM_HZ',
    'DomainError', 'RangeError', 'InfeasibleError', 'UndersampledError', 'ResolutionError',
    'DecodeError', 'DesignError', 'ConfigError',
    'db_to_linear', 'linear_to_db', 'q_function', 'q_inverse', 'require_positive',
]
