"""
领域值对象

所有记录都是不可变的 pydantic 模型，字段校验失败时抛出 ValidationError，
错误位置即字段名，CLI 与 HTTP 层据此报告出错字段。
"""
import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from utils import RangeError

# 开关导通电阻 × 宽度（Ω·m），未标定时的缺省值
DEFAULT_RSW_UNIT = 1e-4


class Detector(str, Enum):
    """OOK 检测方式"""
    COHERENT = "coherent-threshold"
    ENVELOPE = "envelope"


class LnaMode(str, Enum):
    RF = "rf"
    BASEBAND = "baseband-differential"


class DividerArch(str, Enum):
    FLIP_FLOP = "flip-flop"
    CIRCULAR = "circular"


class MatchTopology(str, Enum):
    """L 匹配元件排列（从天线侧看）"""
    SERIES_L_SHUNT_C = "series-l-shunt-c"
    SERIES_C_SHUNT_L = "series-c-shunt-l"


class Record(BaseModel):
    """值对象基类：不可变、拒绝未知字段"""
    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)


R = TypeVar("R", bound=BaseModel)


def replace(record: R, **changes: Any) -> R:
    """返回修改了部分字段的新记录（重新走校验）"""
    data = record.model_dump()
    data.update(changes)
    return type(record).model_validate(data)


# ============ linkbudget ============

class LinkParams(Record):
    """链路参数：载频、距离、EIRP、带宽、速率、误码目标、检测方式"""
    carrier_freq: float = Field(403.5e6, gt=0)
    distance: float = Field(3.0, gt=0)
    eirp: float = -16.0
    channel_bw: float = Field(300e3, gt=0)
    data_rate: float = Field(300e3, gt=0)
    ber_target: float = Field(1e-3, gt=0, lt=0.5)
    detector: Detector = Detector.COHERENT


class SensitivityReport(Record):
    sensitivity: float
    noise_floor_term: float
    snr_out: float
    nf: float
    margin_vs_link: Optional[float] = None


# ============ devicemodels ============

class BiasPoint(Record):
    """标定表的一行：栅偏压 → gm/Id、电流密度、本征增益"""
    gate_bias: float
    gm_over_id: float = Field(gt=0)
    current_density: float = Field(gt=0)
    intrinsic_gain_k: float = Field(10.5, ge=1, le=100)


class TransistorModel(Record):
    """参数化晶体管趋势模型，偏压之间线性插值"""
    bias_table: Tuple[BiasPoint, ...] = Field(min_length=1)
    max_width: float = Field(1e-3, gt=0)
    gamma_eff: float = Field(1.0, gt=0)
    off_feedback_resistance: float = Field(10e6, gt=0)

    @field_validator("bias_table")
    @classmethod
    def _sorted_unique(cls, table: Tuple[BiasPoint, ...]) -> Tuple[BiasPoint, ...]:
        table = tuple(sorted(table, key=lambda p: p.gate_bias))
        biases = [p.gate_bias for p in table]
        if len(set(biases)) != len(biases):
            raise ValueError("bias_table 中栅偏压重复")
        return table

    @property
    def bias_range(self) -> Tuple[float, float]:
        return self.bias_table[0].gate_bias, self.bias_table[-1].gate_bias

    def at(self, gate_bias: float) -> BiasPoint:
        """取某个偏压的标定值；超出标定范围抛 RangeError"""
        low, high = self.bias_range
        if not low - 1e-12 <= gate_bias <= high + 1e-12:
            raise RangeError(f"栅偏压 {gate_bias} V 超出标定范围 [{low}, {high}] V", field="gate_bias")
        xs = [p.gate_bias for p in self.bias_table]
        values = {
            name: float(np.interp(gate_bias, xs, [getattr(p, name) for p in self.bias_table]))
            for name in ("gm_over_id", "current_density", "intrinsic_gain_k")
        }
        return BiasPoint(gate_bias=gate_bias, **values)


class Feedback(Record):
    """反馈：电阻（value 欧姆）或关断晶体管"""
    kind: Literal["resistor", "off-transistor"] = "off-transistor"
    value: Optional[float] = Field(None, gt=0)


class LnaDesign(Record):
    """反相器 LNA 设计；宽度为差分对总宽度"""
    width_p: float = Field(10e-6, gt=0)
    width_n: float = Field(5e-6, gt=0)
    gate_bias: float = 0.45
    supply: float = Field(1.0, gt=0)
    feedback: Feedback = Feedback()
    load_cap: float = Field(0.5e-12, gt=0)
    mode: LnaMode = LnaMode.BASEBAND
    zin_target: Optional[float] = Field(None, gt=0)
    auto_size: bool = False
    source_impedance: Optional[float] = Field(None, gt=0)
    bandwidth_limit: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_feedback(self) -> "LnaDesign":
        if self.feedback.kind == "resistor" and self.feedback.value is None and self.zin_target is None:
            raise ValueError("feedback: 电阻反馈需要 value 或 zin_target")
        if self.auto_size and self.zin_target is None:
            raise ValueError("auto_size 需要 zin_target")
        if self.zin_target is not None and self.feedback.kind != "resistor":
            raise ValueError("zin_target 只能配合电阻反馈使用")
        if self.mode == LnaMode.RF and self.feedback.kind == "off-transistor":
            raise ValueError("feedback: RF 模式需要电阻反馈完成匹配")
        return self


class LnaReport(Record):
    power: float
    bandwidth: float
    flat_band_gain: float
    nf: float
    zin: float
    rf_used: float
    gm: float
    current: float
    width_p: float
    width_n: float


class MixerDesign(Record):
    """N 路无源混频器"""
    n_paths: Literal[2, 4] = 2
    duty: float = Field(0.25, gt=0, le=1)
    switch_width: float = Field(10e-6, gt=0)
    # None 表示取 calibration.rsw_unit
    rsw_unit: Optional[float] = Field(None, ge=0)
    source_impedance: float = Field(50.0, gt=0)
    baseband_cap: float = Field(100e-12, gt=0)
    lo_freq: float = Field(403.5e6, gt=0)
    divider_arch: DividerArch = DividerArch.CIRCULAR
    supply: float = Field(1.0, gt=0)

    @property
    def unit_switch_resistance(self) -> float:
        return DEFAULT_RSW_UNIT if self.rsw_unit is None else self.rsw_unit

    @property
    def switch_resistance(self) -> float:
        return self.unit_switch_resistance / self.switch_width

    @model_validator(mode="after")
    def _check_paths(self) -> "MixerDesign":
        if self.n_paths * self.duty > 1.0 + 1e-12:
            raise ValueError(f"duty: n_paths·duty = {self.n_paths * self.duty:g} > 1，无法不交叠")
        if self.switch_resistance >= self.source_impedance:
            raise ValueError(
                f"source_impedance: 开关电阻 {self.switch_resistance:g} Ω 不小于源阻抗 {self.source_impedance:g} Ω"
            )
        return self


class DividerModel(Record):
    arch: DividerArch = DividerArch.CIRCULAR
    effective_switched_cap: float = Field(gt=0)
    supply: float = Field(1.0, gt=0)
    activity_factor: float = Field(1.0, gt=0)


class MatchingNetwork(Record):
    """L 匹配网络

    series-l-shunt-c：rm 串 lm，混频器侧并联 cm（低通）；
    series-c-shunt-l：rm 串 cm，混频器侧并联 lm（高通）。
    """
    rm: float = Field(50.0, gt=0)
    lm: float = Field(180e-9, gt=0)
    cm: float = Field(0.854e-12, gt=0)
    topology: MatchTopology = MatchTopology.SERIES_L_SHUNT_C


class NfStage(Record):
    nf: float
    gain: float = 0.0


# ============ berlab ============

class OokParams(Record):
    amplitude_on: float = Field(1.0, gt=0)
    bit_rate: float = Field(300e3, gt=0)
    samples_per_bit: int = Field(1, ge=1)
    detector: Detector = Detector.COHERENT
    threshold: float = Field(0.5, gt=0, lt=1)


class BerResult(Record):
    bits_sent: int
    bit_errors: int
    ber_point: float
    ci_low: float
    ci_high: float
    snr: float
    seed: int
    detector: Detector
    bytes_sent: int = 0
    byte_errors: int = 0

    @model_validator(mode="after")
    def _check_interval(self) -> "BerResult":
        if not self.ci_low <= self.ber_point <= self.ci_high:
            raise ValueError("ci_low ≤ ber_point ≤ ci_high 不成立")
        return self


# ============ explorer ============

class DesignPoint(Record):
    lna: LnaDesign = LnaDesign()
    mixer: MixerDesign = MixerDesign()
    matching: MatchingNetwork = MatchingNetwork()
    link: LinkParams = LinkParams()
    data_rate: float = Field(300e3, gt=0)


class DesignMetrics(Record):
    total_power: float
    breakdown: Dict[str, float]
    system_nf: float
    sensitivity: float
    energy_per_bit: float
    feasible: bool
    reason: str = ""
    source_resistance: float = math.nan
    mixer_nf: float = math.nan
    lna_nf: float = math.nan
    lna_bandwidth: float = math.nan
    data_rate: float = math.nan


class Objective(Record):
    key: str
    direction: Literal["min", "max"] = "min"


class SweepSpec(Record):
    """参数路径 → 取值列表 的笛卡尔网格"""
    axes: Dict[str, List[Any]]
    fixed: DesignPoint = DesignPoint()
    objectives: List[Objective] = []


__all__ = [
    'Detector', 'LnaMode', 'DividerArch', 'MatchTopology', 'Record', 'replace', 'DEFAULT_RSW_UNIT',
    'LinkParams', 'SensitivityReport',
    'BiasPoint', 'TransistorModel', 'Feedback', 'LnaDesign', 'LnaReport',
    'MixerDesign', 'DividerModel', 'MatchingNetwork', 'NfStage',
    'OokParams', 'BerResult',
    'DesignPoint', 'DesignMetrics', 'Objective', 'SweepSpec',
]
