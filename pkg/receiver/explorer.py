"""
接收机设计空间探索

把 devicemodels 与 linkbudget 组合成整机设计点：
- evaluate_design：功耗分解、级联噪声系数、灵敏度、每比特能耗
- sweep：参数路径网格的笛卡尔扫描（并行、保序、失败点原位记录）
- pareto_front / optimize_min_power / energy_per_bit_curve / power_breakdown_report

灵敏度按 DDR 约定取数据带宽 = 数据率。
"""
import hashlib
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from config_loader import CalibrationConfig, DefaultsConfig, ExplorerConfig, LimitsConfig
from receiver.core.cache_manager import EvaluationCache
from receiver.core.types import (
    DesignMetrics, DesignPoint, Feedback, LnaDesign, Objective, Record, SweepSpec, replace,
)
from receiver.devicemodels import (
    cascade_nf, default_calibration, divider_power, lna_operating_point,
    matching_network_impedance, mixer_drive_power, mixer_noise_figure, resolve_switch_unit,
)
from receiver.linkbudget import (
    relaxed_sensitivity_target, required_sensitivity, required_snr_ook, sensitivity, snr_from_ebn0,
)
from smart_logger import get_smart_logger
from utils import DesignError, DomainError, json, require_positive
from worker_pool import worker_pool

logger = logging.getLogger("ulprx.explorer")
smart_logger = get_smart_logger()

BREAKDOWN_KEYS = ("lna", "divider_nlo", "mixer_drive")

# 已发表的参考设计（用于 report 对照）
REFERENCE_DESIGNS: Dict[str, Dict[str, float]] = {
    "medradio-compliant": {
        "data_rate": 300e3, "total_power": 29.2e-6, "energy_per_bit": 97.3e-12, "sensitivity": -83.0,
    },
    "high-rate": {
        "data_rate": 10e6, "total_power": 34e-6, "energy_per_bit": 3.4e-12, "sensitivity": -70.0,
    },
}

_evaluation_cache = EvaluationCache()


def energy_per_bit(power: float, data_rate: float) -> float:
    require_positive(data_rate, "data_rate")
    return power / data_rate


def _calibration_key(calibration: CalibrationConfig) -> str:
    payload = json.dumps(calibration.model_dump(mode="json"), sort_keys=True)
    return hashlib.md5(payload.encode()).hexdigest()


def _block(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DomainError as e:
        raise DesignError(name, e) from e


# ============ 单点评估 ============

def evaluate_design(point: DesignPoint, calibration: Optional[CalibrationConfig] = None) -> DesignMetrics:
    """整机评估（纯函数）

    system_nf = 级联(混频器 [R_s 取匹配网络变换后的实部]，LNA)；
    灵敏度 = -174 + 10log10(R) + SNR_o + system_nf + 实现损耗；
    总功耗 = LNA + 分频器 + 开关驱动。
    """
    cal = calibration or default_calibration()
    link = point.link
    rate = point.data_rate

    z_source = _block("matching", matching_network_impedance, point.matching, link.carrier_freq)
    rs = z_source.real
    mixer = _block("mixer", resolve_switch_unit, point.mixer, cal)
    mixer_nf = _block("mixer", mixer_noise_figure, mixer.switch_resistance, rs)

    lna = point.lna
    if lna.source_impedance is None:
        lna = replace(lna, source_impedance=rs)
    lna_report = _block("lna", lna_operating_point, lna, cal.transistor, cal.lna_match_margin)

    system_nf = cascade_nf([
        (mixer_nf, cal.mixer_conversion_gain_db),
        (lna_report.nf, lna_report.flat_band_gain),
    ])
    snr_out = _block("link", lambda: snr_from_ebn0(required_snr_ook(link.ber_target, link.detector), rate, rate))
    report = sensitivity(rate, snr_out, system_nf + cal.implementation_loss_db,
                         link_sensitivity=required_sensitivity(link))

    divider = _block("divider", divider_power, cal.divider_model(mixer.divider_arch, mixer.supply), mixer.lo_freq)
    drive = _block("mixer", mixer_drive_power, mixer, mixer.lo_freq, cal)
    breakdown = {
        "lna": lna_report.power,
        "divider_nlo": divider,
        "mixer_drive": drive - divider,
    }
    total = sum(breakdown.values())

    feasible, reason = True, ""
    if rate > lna_report.bandwidth:
        feasible = False
        reason = f"LNA 带宽 {lna_report.bandwidth:.4g} Hz 低于数据率 {rate:.4g} bit/s"

    return DesignMetrics(
        total_power=total, breakdown=breakdown, system_nf=system_nf, sensitivity=report.sensitivity,
        energy_per_bit=energy_per_bit(total, rate), feasible=feasible, reason=reason,
        source_resistance=rs, mixer_nf=mixer_nf, lna_nf=lna_report.nf,
        lna_bandwidth=lna_report.bandwidth, data_rate=rate,
    )


def evaluate_cached(point: DesignPoint, calibration: Optional[CalibrationConfig] = None,
                    cache: Optional[EvaluationCache] = None,
                    context: Optional[str] = None) -> DesignMetrics:
    cal = calibration or default_calibration()
    cache = _evaluation_cache if cache is None else cache
    key = cache.compute_key(point, context or _calibration_key(cal))
    cached = cache.get(key)
    if cached is not None:
        return cached
    metrics = evaluate_design(point, cal)
    cache.set(key, metrics)
    return metrics


# ============ 参数路径 ============

def apply_path(point: DesignPoint, path: str, value: Any, pn_ratio: float = 2.0) -> DesignPoint:
    """按参数路径修改设计点

    特殊路径：
    - lna.size：width_n = value，width_p = pn_ratio·value
    - lna.zin_target：切换为电阻反馈并按匹配目标自动定尺寸
    其余形如 section.field 或顶层字段（data_rate）。
    """
    if path == "lna.size":
        return replace(point, lna=replace(point.lna, width_n=value, width_p=pn_ratio * value))
    if path == "lna.zin_target":
        lna = replace(point.lna, zin_target=value, auto_size=value is not None,
                      feedback=Feedback(kind="resistor"))
        return replace(point, lna=lna)
    section, _, attr = path.partition(".")
    if section not in DesignPoint.model_fields:
        raise DomainError(f"未知参数路径 {path}", field="axes")
    if not attr:
        return replace(point, **{section: value})
    record = getattr(point, section)
    if attr not in type(record).model_fields:
        raise DomainError(f"未知参数路径 {path}", field="axes")
    return replace(point, **{section: replace(record, **{attr: value})})


def point_value(point: DesignPoint, path: str) -> Any:
    if path == "lna.size":
        return point.lna.width_n
    value: Any = point
    for part in path.split("."):
        value = getattr(value, part)
    return value


@dataclass
class SweepRow:
    """扫描结果的一行；失败点 metrics 为 None，error 给出原因"""
    index: int
    values: Dict[str, Any]
    point: Optional[DesignPoint] = None
    metrics: Optional[DesignMetrics] = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.metrics is not None

    def flat(self) -> Dict[str, Any]:
        """参数路径 + 指标名 的扁平字典（CSV 一行）"""
        row: Dict[str, Any] = dict(self.values)
        row.update(metrics_columns(self.metrics))
        row["error"] = self.error
        return row


METRIC_COLUMNS = (
    "total_power", "lna", "divider_nlo", "mixer_drive", "system_nf", "sensitivity",
    "energy_per_bit", "feasible", "reason", "source_resistance", "mixer_nf", "lna_nf",
    "lna_bandwidth", "data_rate",
)


def metrics_columns(metrics: Optional[DesignMetrics]) -> Dict[str, Any]:
    if metrics is None:
        return {name: None for name in METRIC_COLUMNS}
    data = metrics.model_dump()
    breakdown = data.pop("breakdown")
    row = {name: data.get(name, breakdown.get(name)) for name in METRIC_COLUMNS}
    return row


def grid_size(spec: SweepSpec) -> int:
    if not spec.axes:
        raise DomainError("扫描轴为空", field="axes")
    for path, values in spec.axes.items():
        if not values:
            raise DomainError(f"轴 {path} 没有取值", field="axes")
    return int(np.prod([len(v) for v in spec.axes.values()], dtype=np.int64))


def sweep(spec: SweepSpec, limits: Optional[LimitsConfig] = None,
          calibration: Optional[CalibrationConfig] = None,
          cache: Optional[EvaluationCache] = None) -> List[SweepRow]:
    """笛卡尔网格扫描，行序 = 轴的声明顺序（最后一个轴变化最快）"""
    limits = limits or LimitsConfig()
    cal = calibration or default_calibration()
    size = grid_size(spec)
    if size > limits.max_grid_size:
        raise DomainError(f"网格共 {size} 点，超过上限 {limits.max_grid_size}", field="axes")

    paths = list(spec.axes)
    combos = list(itertools.product(*(spec.axes[p] for p in paths)))
    context = _calibration_key(cal)

    def run(item: Tuple[int, Tuple[Any, ...]]) -> SweepRow:
        index, combo = item
        values = dict(zip(paths, combo))
        row = SweepRow(index=index, values=values)
        try:
            point = spec.fixed
            for path, value in values.items():
                point = apply_path(point, path, value, cal.pn_width_ratio)
            row.point = point
            row.metrics = evaluate_cached(point, cal, cache, context)
        except DomainError as e:
            row.error = str(e)
        except ValidationError as e:
            row.error = "; ".join(
                f"{'.'.join(str(p) for p in err.get('loc', ()))}: {err.get('msg', '')}" for err in e.errors())
        return row

    smart_logger.performance.start_timer("sweep")
    bar = smart_logger.progress.create(total=size, description="扫描")
    rows = worker_pool.map_ordered(run, list(enumerate(combos)), on_done=bar.update)
    smart_logger.progress.close(bar.bar_id)
    smart_logger.performance.stop_timer("sweep")

    failed = sum(1 for r in rows if not r.ok)
    logger.info(f"扫描完成: {size} 点，失败 {failed} 点")
    return rows


# ============ Pareto ============

def _objective_value(item: Any, key: str) -> float:
    if isinstance(item, Mapping):
        if key not in item:
            raise DomainError(f"未知目标键 {key}", field="objectives")
        return float(item[key])
    if hasattr(item, key):
        return float(getattr(item, key))
    breakdown = getattr(item, "breakdown", None)
    if isinstance(breakdown, Mapping) and key in breakdown:
        return float(breakdown[key])
    raise DomainError(f"未知目标键 {key}", field="objectives")


def _as_objective(obj: Union[Objective, Mapping[str, str], Tuple[str, str]]) -> Objective:
    if isinstance(obj, Objective):
        return obj
    if isinstance(obj, Mapping):
        return Objective(**obj)
    key, direction = obj
    return Objective(key=key, direction=direction)


def pareto_front(points: Sequence[Any], objectives: Sequence[Union[Objective, Mapping[str, str]]]) -> List[int]:
    """非支配点下标；按第一目标稳定排序，重复点全部保留"""
    if not points:
        raise DomainError("点集为空", field="points")
    objs = [_as_objective(o) for o in objectives]
    if not objs:
        raise DomainError("至少需要一个目标", field="objectives")
    # 统一成“越小越好”
    costs = np.array([
        [_objective_value(p, o.key) * (1.0 if o.direction == "min" else -1.0) for o in objs]
        for p in points
    ])
    front = []
    for i in range(len(points)):
        no_worse = np.all(costs <= costs[i], axis=1)
        better = np.any(costs < costs[i], axis=1)
        if not np.any(no_worse & better):
            front.append(i)
    return sorted(front, key=lambda i: costs[i, 0])


# ============ 优化 ============

@dataclass
class OptimizationResult:
    feasible: bool
    point: Optional[DesignPoint]
    metrics: Optional[DesignMetrics]
    target_sensitivity: float
    data_rate: float
    evaluated: int
    reason: str = ""

    @property
    def shortfall(self) -> float:
        """灵敏度差距（dB，正值表示没达到目标）"""
        if self.metrics is None:
            return math.inf
        return self.metrics.sensitivity - self.target_sensitivity


def optimize_min_power(targets: Mapping[str, float], space: SweepSpec,
                       limits: Optional[LimitsConfig] = None,
                       calibration: Optional[CalibrationConfig] = None) -> OptimizationResult:
    """穷举网格，返回满足灵敏度目标的最低总功耗点；都不满足时返回差距最小的点"""
    target = float(targets["sensitivity"])
    rate = float(targets.get("data_rate", space.fixed.data_rate))
    require_positive(rate, "data_rate")
    if "data_rate" not in space.axes:
        space = replace(space, fixed=replace(space.fixed, data_rate=rate))
    rows = sweep(space, limits, calibration)
    evaluated = [r for r in rows if r.ok]

    winners = [r for r in evaluated if r.metrics.feasible and r.metrics.sensitivity <= target]
    if winners:
        best = min(winners, key=lambda r: r.metrics.total_power)
        smart_logger.data.record("optimum", {"values": best.values, "total_power": best.metrics.total_power})
        return OptimizationResult(True, best.point, best.metrics, target, rate, len(rows))

    if not evaluated:
        return OptimizationResult(False, None, None, target, rate, len(rows), reason="所有网格点均评估失败")
    # 近似解：先看带宽是否满足，再比灵敏度差距，最后比功耗
    near = min(evaluated, key=lambda r: (not r.metrics.feasible, r.metrics.sensitivity - target,
                                         r.metrics.total_power))
    reason = near.metrics.reason or f"最佳灵敏度 {near.metrics.sensitivity:.2f} dBm 未达到目标 {target:.2f} dBm"
    logger.warning(f"{rate:.4g} bit/s 下无可行点: {reason}")
    return OptimizationResult(False, near.point, near.metrics, target, rate, len(rows), reason=reason)


@dataclass
class EnergyPoint:
    data_rate: float
    target_sensitivity: float
    energy_per_bit: float
    total_power: float
    breakdown: Dict[str, float] = field(default_factory=dict)
    feasible: bool = True
    point: Optional[DesignPoint] = None


def energy_per_bit_curve(rates: Sequence[float], space: SweepSpec,
                         limits: Optional[LimitsConfig] = None,
                         calibration: Optional[CalibrationConfig] = None) -> List[EnergyPoint]:
    """每个速率在放宽的灵敏度目标下做最低功耗优化"""
    if not rates:
        raise DomainError("速率列表为空", field="rates")
    if any(r <= 0 for r in rates):
        raise DomainError("速率必须为正", field="rates")
    if list(rates) != sorted(rates):
        raise DomainError("速率必须升序", field="rates")
    cal = calibration or default_calibration()
    link = space.fixed.link
    curve = []
    for rate in rates:
        target = relaxed_sensitivity_target(rate, cal.reference_nf_db, link.ber_target, link.detector)
        result = optimize_min_power({"sensitivity": target, "data_rate": rate}, space, limits, cal)
        metrics = result.metrics
        curve.append(EnergyPoint(
            data_rate=float(rate), target_sensitivity=target,
            energy_per_bit=metrics.energy_per_bit if metrics else math.nan,
            total_power=metrics.total_power if metrics else math.nan,
            breakdown=dict(metrics.breakdown) if metrics else {},
            feasible=result.feasible, point=result.point,
        ))
    return curve


# ============ 报告 ============

class BreakdownReport(Record):
    total_power: float
    breakdown: Dict[str, float]
    fractions: Dict[str, float]


def power_breakdown_report(point: DesignPoint, calibration: Optional[CalibrationConfig] = None) -> BreakdownReport:
    metrics = evaluate_design(point, calibration)
    total = metrics.total_power
    fractions = {key: value / total for key, value in metrics.breakdown.items()}
    return BreakdownReport(total_power=total, breakdown=dict(metrics.breakdown), fractions=fractions)


def compare_to_reference(metrics: DesignMetrics, reference: Optional[str] = None) -> Dict[str, Any]:
    """与参考设计对照的一行；未指定时取数据率最接近的参考"""
    if reference is None:
        reference = min(REFERENCE_DESIGNS,
                        key=lambda k: abs(math.log10(REFERENCE_DESIGNS[k]["data_rate"] / metrics.data_rate)))
    if reference not in REFERENCE_DESIGNS:
        raise DomainError(f"未知参考设计 {reference}", field="reference")
    ref = REFERENCE_DESIGNS[reference]
    return {
        "reference": reference,
        "data_rate": metrics.data_rate,
        "total_power": metrics.total_power,
        "energy_per_bit": metrics.energy_per_bit,
        "sensitivity": metrics.sensitivity,
        "system_nf": metrics.system_nf,
        "divider_fraction": metrics.breakdown["divider_nlo"] / metrics.total_power,
        "feasible": metrics.feasible,
        "ref_data_rate": ref["data_rate"],
        "ref_total_power": ref["total_power"],
        "ref_energy_per_bit": ref["energy_per_bit"],
        "ref_sensitivity": ref["sensitivity"],
        "power_ratio": metrics.total_power / ref["total_power"],
    }


# ============ 缺省搜索空间 ============

def default_point(defaults: Optional[DefaultsConfig] = None) -> DesignPoint:
    d = defaults or DefaultsConfig()
    return DesignPoint(lna=d.lna, mixer=d.mixer, matching=d.matching, link=d.link, data_rate=d.data_rate)


def default_space(defaults: Optional[DefaultsConfig] = None,
                  explorer: Optional[ExplorerConfig] = None) -> SweepSpec:
    cfg = explorer or ExplorerConfig()
    return SweepSpec(
        axes={k: list(v) for k, v in cfg.axes.items()},
        fixed=default_point(defaults),
        objectives=[Objective(key="total_power"), Objective(key="sensitivity")],
    )


def configure_cache(max_size: int) -> None:
    """按 explorer.cache_size 调整全局评估缓存容量"""
    _evaluation_cache.resize(max_size)


def clear_cache() -> None:
    _evaluation_cache.clear()


def cache_stats() -> Dict[str, Any]:
    return _evaluation_cache.stats()


__all__ = [
    'energy_per_bit', 'evaluate_design', 'evaluate_cached', 'apply_path', 'point_value',
    'SweepRow', 'METRIC_COLUMNS', 'metrics_columns', 'grid_size', 'sweep',
    'pareto_front', 'OptimizationResult', 'optimize_min_power', 'EnergyPoint', 'energy_per_bit_curve',
    'BreakdownReport', 'power_breakdown_report', 'compare_to_reference', 'REFERENCE_DESIGNS',
    'default_point', 'default_space', 'configure_cache', 'clear_cache', 'cache_stats', 'BREAKDOWN_KEYS',
]
