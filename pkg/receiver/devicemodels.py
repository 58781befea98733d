"""
前端器件模型

- LNA 输入阻抗与匹配（反馈电阻求解）
- 反相器 LNA 参数化趋势模型：功耗、带宽、增益、噪声系数
- N 路混频器噪声系数、开关电阻
- 分频器与混频器驱动动态功耗
- L 匹配网络阻抗变换
- 级联噪声系数

模型是标定过的趋势模型而不是器件物理；标定参数见配置文件 calibration 部分。
"""
import logging
import math
from typing import Iterable, Mapping, Optional, Tuple, Union

from config_loader import CalibrationConfig
from receiver.core.types import (
    DividerModel, Feedback, LnaDesign, LnaMode, LnaReport, MatchTopology, MatchingNetwork, MixerDesign,
    NfStage, TransistorModel, replace,
)
from utils import (
    DomainError, InfeasibleError, RangeError, db_to_linear, linear_to_db, require_positive,
)

logger = logging.getLogger("ulprx.devicemodels")

IDEAL_MIXER_NF_LINEAR = math.pi ** 2 / 4.0
OFF_TRANSISTOR_MAX_BW = 1e6
PN_RATIO_TOLERANCE = 0.25

_DEFAULT_CALIBRATION = CalibrationConfig()


def default_calibration() -> CalibrationConfig:
    return _DEFAULT_CALIBRATION


# ============ LNA 匹配 ============

def lna_input_impedance(rf: float, gm: float, ro: float) -> float:
    """Z_in = rf/(1+gm·ro) + ro/(1+gm·ro)"""
    require_positive(rf, "rf")
    require_positive(gm, "gm")
    require_positive(ro, "ro")
    loop = 1.0 + gm * ro
    return rf / loop + ro / loop


def lna_input_impedance_k(rf: float, gm: float, k: float) -> float:
    """以本征增益表示：Z_in = (rf + k/gm)/(1+k)"""
    return (rf + k / gm) / (1.0 + k)


def minimum_input_impedance(gm: float, k: float) -> float:
    """rf → 0 时可达到的最小 Z_in"""
    return k / (gm * (1.0 + k))


def solve_feedback_resistor(zin_target: float, gm: float, k: float) -> float:
    """rf = Z_in·(1+k) − k/gm；无正解时抛 InfeasibleError 并给出最小可达 Z_in"""
    require_positive(zin_target, "zin_target")
    require_positive(gm, "gm")
    if k < 0:
        raise DomainError(f"必须非负，当前为 {k}", field="k")
    rf = zin_target * (1.0 + k) - k / gm
    if rf <= 0.0:
        zmin = minimum_input_impedance(gm, k)
        raise InfeasibleError(
            f"Z_in = {zin_target:g} Ω 无法匹配，当前 gm 下最小可达 Z_in = {zmin:g} Ω",
            field="zin_target",
            limit=zmin,
        )
    return rf


def size_lna_for_zin(zin_target: float, gate_bias: float, model: TransistorModel,
                     margin: float = 2.0, pn_ratio: float = 2.0) -> Tuple[float, float]:
    """按匹配目标给出 (width_p, width_n)

    gm = margin·k/(Z_in(1+k))，即 k/gm 只占 Z_in(1+k) 的 1/margin，余下由 rf 补足。
    """
    require_positive(zin_target, "zin_target")
    if margin <= 1.0:
        raise DomainError(f"必须大于 1，当前为 {margin}", field="margin")
    point = model.at(gate_bias)
    k = point.intrinsic_gain_k
    gm = margin * k / (zin_target * (1.0 + k))
    current = gm / point.gm_over_id
    total_width = current / point.current_density
    width_n = total_width / (1.0 + pn_ratio)
    width_p = total_width - width_n
    if max(width_p, width_n) > model.max_width:
        raise RangeError(
            f"Z_in = {zin_target:g} Ω 在 {gate_bias} V 需要 {max(width_p, width_n) * 1e6:.1f} μm，"
            f"超过最大宽度 {model.max_width * 1e6:.1f} μm",
            field="width_p",
        )
    return width_p, width_n


def lna_operating_point(design: LnaDesign, model: TransistorModel,
                        match_margin: Optional[float] = None) -> LnaReport:
    """LNA 工作点

    功耗 = V_DD·J(bias)·(Wp+Wn)；gm = gm/Id·I；ro = k/gm；
    带宽 = 1/(2π·R_out·C_L)，R_out = ro ∥ rf；增益 = gm·R_out；
    F = 1 + γ_eff/(gm·Z_s)，Z_s 缺省取 Z_in。
    """
    point = model.at(design.gate_bias)
    k = point.intrinsic_gain_k

    width_p, width_n = design.width_p, design.width_n
    if design.auto_size:
        width_p, width_n = size_lna_for_zin(
            design.zin_target, design.gate_bias, model,
            margin=match_margin or _DEFAULT_CALIBRATION.lna_match_margin,
            pn_ratio=width_p / width_n,
        )
    for name, width in (("width_p", width_p), ("width_n", width_n)):
        if width > model.max_width:
            raise RangeError(f"{width * 1e6:.1f} μm 超过最大宽度 {model.max_width * 1e6:.1f} μm", field=name)
    _check_pn_ratio(width_p, width_n)

    current = point.current_density * (width_p + width_n)
    power = design.supply * current
    gm = point.gm_over_id * current
    ro = k / gm

    if design.feedback.kind == "off-transistor":
        rf = model.off_feedback_resistance
    elif design.zin_target is not None:
        rf = solve_feedback_resistor(design.zin_target, gm, k)
    else:
        rf = design.feedback.value

    zin = lna_input_impedance(rf, gm, ro)
    r_out = ro * rf / (ro + rf)
    bandwidth = 1.0 / (2.0 * math.pi * r_out * design.load_cap)
    if design.bandwidth_limit is not None:
        bandwidth = min(bandwidth, design.bandwidth_limit)
    if design.feedback.kind == "off-transistor" and bandwidth >= OFF_TRANSISTOR_MAX_BW:
        logger.warning(f"关断管反馈用于 {bandwidth / 1e6:.2f} MHz 带宽，超出 1 MHz 的适用范围")

    z_source = design.source_impedance or zin
    nf = linear_to_db(1.0 + model.gamma_eff / (gm * z_source))
    gain = 20.0 * math.log10(gm * r_out)

    return LnaReport(
        power=power, bandwidth=bandwidth, flat_band_gain=gain, nf=nf, zin=zin, rf_used=rf,
        gm=gm, current=current, width_p=width_p, width_n=width_n,
    )


def _check_pn_ratio(width_p: float, width_n: float) -> None:
    ratio = width_p / width_n
    if abs(ratio - 2.0) > PN_RATIO_TOLERANCE * 2.0:
        logger.warning(f"P/N 宽度比 {ratio:.2f} 偏离 2:1，输出偏置可能不在 V_DD/2")


def matched_lna_design(zin_target: float, gate_bias: float, mode: LnaMode = LnaMode.RF,
                       load_cap: float = 0.5e-12, supply: float = 1.0,
                       pn_ratio: float = 2.0) -> LnaDesign:
    """匹配到 zin_target 并自动定尺寸的 LNA 设计"""
    width_n = 1e-6
    return LnaDesign(
        width_p=pn_ratio * width_n, width_n=width_n, gate_bias=gate_bias, supply=supply,
        feedback=Feedback(kind="resistor"), load_cap=load_cap, mode=mode,
        zin_target=zin_target, auto_size=True,
    )


# ============ 混频器 ============

def mixer_noise_figure(rsw: float, rs: float) -> float:
    """NF = (π²/4)·(1 + rsw/rs)/(1 − rsw/rs)，dB"""
    require_positive(rs, "rs")
    if rsw < 0.0:
        raise DomainError(f"必须非负，当前为 {rsw}", field="rsw")
    if rsw >= rs:
        raise DomainError(f"开关电阻 {rsw:g} Ω 必须小于源阻抗 {rs:g} Ω", field="rsw")
    ratio = rsw / rs
    return linear_to_db(IDEAL_MIXER_NF_LINEAR * (1.0 + ratio) / (1.0 - ratio))


def switch_resistance(width: float, model: MixerDesign) -> float:
    """R_sw = rsw_unit / W"""
    require_positive(width, "width")
    return model.unit_switch_resistance / width


def resolve_switch_unit(mixer: MixerDesign, calibration: Optional[CalibrationConfig] = None) -> MixerDesign:
    """rsw_unit 未指定的混频器取标定值"""
    if mixer.rsw_unit is not None:
        return mixer
    cal = calibration or _DEFAULT_CALIBRATION
    rsw = cal.rsw_unit / mixer.switch_width
    if rsw >= mixer.source_impedance:
        raise RangeError(f"标定开关电阻 {rsw:g} Ω 不小于源阻抗 {mixer.source_impedance:g} Ω", field="rsw_unit")
    return replace(mixer, rsw_unit=cal.rsw_unit)


def divider_power(model: DividerModel, freq: float) -> float:
    """P = α·C_eff·V²·f"""
    if freq < 0.0:
        raise DomainError(f"必须非负，当前为 {freq}", field="freq")
    return model.activity_factor * model.effective_switched_cap * model.supply ** 2 * freq


def mixer_drive_power(mixer: MixerDesign, freq: float,
                      calibration: Optional[CalibrationConfig] = None) -> float:
    """分频器 + 开关栅电容（+ 可选 5 pF 外部负载）的动态功耗"""
    cal = calibration or _DEFAULT_CALIBRATION
    divider = cal.divider_model(mixer.divider_arch, mixer.supply)
    gate_cap = cal.switch_gate_cap_per_width * mixer.switch_width * mixer.n_paths
    load_cap = cal.external_load_cap if cal.include_external_load else 0.0
    augmented = divider.model_copy(update={
        "effective_switched_cap": divider.effective_switched_cap + gate_cap + load_cap,
    })
    return divider_power(augmented, freq)


# ============ 匹配网络 ============

def matching_transform(rm: float, lm: float, cm: float, freq: float,
                       topology: MatchTopology = MatchTopology.SERIES_L_SHUNT_C) -> complex:
    """从混频器输入端看进 L 匹配网络的阻抗

    series-l-shunt-c: (rm + jωLm) ∥ 1/(jωCm)
    series-c-shunt-l: (rm + 1/(jωCm)) ∥ jωLm
    """
    require_positive(rm, "rm")
    require_positive(lm, "lm")
    require_positive(cm, "cm")
    if freq < 0.0:
        raise DomainError(f"必须非负，当前为 {freq}", field="freq")
    omega = 2.0 * math.pi * freq
    if MatchTopology(topology) == MatchTopology.SERIES_C_SHUNT_L:
        # 直流时并联电感短路
        if omega == 0.0:
            return 0j
        series = complex(rm, -1.0 / (omega * cm))
        admittance = 1.0 / series + 1.0 / complex(0.0, omega * lm)
        return 1.0 / admittance
    series = complex(rm, omega * lm)
    admittance = 1.0 / series + complex(0.0, omega * cm)
    return 1.0 / admittance


def matching_network_impedance(network: MatchingNetwork, freq: float) -> complex:
    return matching_transform(network.rm, network.lm, network.cm, freq, network.topology)


def design_l_match(rm: float, r_target: float, freq: float,
                   topology: MatchTopology = MatchTopology.SERIES_L_SHUNT_C) -> MatchingNetwork:
    """把 rm 抬升到纯阻性 r_target 的 L 匹配元件值，Q = √(r_target/rm − 1)"""
    require_positive(rm, "rm")
    require_positive(freq, "freq")
    if r_target <= rm:
        raise DomainError(f"升压目标 {r_target:g} Ω 必须大于 rm = {rm:g} Ω", field="r_target")
    omega = 2.0 * math.pi * freq
    q = math.sqrt(r_target / rm - 1.0)
    if MatchTopology(topology) == MatchTopology.SERIES_C_SHUNT_L:
        cm = 1.0 / (omega * q * rm)
        lm = r_target / (omega * q)
    else:
        lm = q * rm / omega
        cm = lm / (rm ** 2 + (omega * lm) ** 2)
    return MatchingNetwork(rm=rm, lm=lm, cm=cm, topology=topology)


# ============ 级联 ============

StageLike = Union[NfStage, Mapping[str, float], Tuple[float, float]]


def _stage_values(stage: StageLike) -> Tuple[float, float]:
    if isinstance(stage, NfStage):
        return stage.nf, stage.gain
    if isinstance(stage, Mapping):
        return float(stage["nf"]), float(stage.get("gain", 0.0))
    nf, gain = stage
    return float(nf), float(gain)


def cascade_nf(stages: Iterable[StageLike]) -> float:
    """Friis 级联：F = F1 + Σ (Fi − 1)/Π G(j<i)，dB"""
    values = [_stage_values(s) for s in stages]
    if not values:
        raise DomainError("级联至少需要一级", field="stages")
    total = db_to_linear(values[0][0])
    gain_product = db_to_linear(values[0][1])
    for nf, gain in values[1:]:
        if math.isinf(gain_product):
            break
        total += (db_to_linear(nf) - 1.0) / gain_product
        gain_product *= db_to_linear(gain)
    return linear_to_db(total)


__all__ = [
    'IDEAL_MIXER_NF_LINEAR', 'default_calibration',
    'lna_input_impedance', 'lna_input_impedance_k', 'minimum_input_impedance',
    'solve_feedback_resistor', 'size_lna_for_zin', 'lna_operating_point', 'matched_lna_design',
    'mixer_noise_figure', 'switch_resistance', 'resolve_switch_unit', 'divider_power', 'mixer_drive_power',
    'matching_transform', 'matching_network_impedance', 'design_l_match', 'cascade_nf',
]
