"""
链路预算

纯解析计算：自由空间路径损耗、所需灵敏度、灵敏度公式、Eb/N0 与 SNR 换算、
OOK 所需 SNR。全部是无状态纯函数，可在任意线程并发调用。
"""
import logging
import math
from typing import Optional

from scipy import optimize

from receiver.core.types import Detector, LinkParams, SensitivityReport
from utils import (
    SPEED_OF_LIGHT, THERMAL_FLOOR_DBM_HZ, DomainError, linear_to_db, q_inverse, require_positive,
)

logger = logging.getLogger("ulprx.linkbudget")


def fspl(carrier_freq: float, distance: float) -> float:
    """Friis 自由空间路径损耗 20·log10(4π·d·f/c)，单位 dB"""
    require_positive(carrier_freq, "carrier_freq")
    require_positive(distance, "distance")
    return 20.0 * math.log10(4.0 * math.pi * distance * carrier_freq / SPEED_OF_LIGHT)


def required_sensitivity(link: LinkParams, extra_loss: float = 0.0) -> float:
    """接收端所需灵敏度 = EIRP − FSPL − 额外损耗（人体损耗、衰落余量由调用方给出）"""
    return link.eirp - fspl(link.carrier_freq, link.distance) - extra_loss


def sensitivity(channel_bw: float, snr_out: float, nf: float,
                link_sensitivity: Optional[float] = None) -> SensitivityReport:
    """-174 + 10·log10(BW) + SNRo + NF

    link_sensitivity 给定时，margin_vs_link = 链路所需灵敏度 − 接收机灵敏度（正值表示有余量）。
    """
    require_positive(channel_bw, "channel_bw")
    noise_floor_term = 10.0 * math.log10(channel_bw)
    value = THERMAL_FLOOR_DBM_HZ + noise_floor_term + snr_out + nf
    margin = None if link_sensitivity is None else link_sensitivity - value
    return SensitivityReport(
        sensitivity=value,
        noise_floor_term=noise_floor_term,
        snr_out=snr_out,
        nf=nf,
        margin_vs_link=margin,
    )


def snr_from_ebn0(ebn0: float, data_rate: float, data_bw: float) -> float:
    """SNR = Eb/N0 + 10·log10(R/BW)"""
    require_positive(data_rate, "data_rate")
    require_positive(data_bw, "data_bw")
    return ebn0 + 10.0 * math.log10(data_rate / data_bw)


def ebn0_from_snr(snr: float, data_rate: float, data_bw: float) -> float:
    """snr_from_ebn0 的反函数"""
    require_positive(data_rate, "data_rate")
    require_positive(data_bw, "data_bw")
    return snr - 10.0 * math.log10(data_rate / data_bw)


def _check_ber_target(ber_target: float) -> None:
    if not 0.0 < ber_target < 0.5:
        raise DomainError(f"必须在 (0, 0.5) 内，当前为 {ber_target}", field="ber_target")


def required_snr_ook(ber_target: float, detector: Detector = Detector.COHERENT) -> float:
    """达到 ber_target 所需的平均功率 SNR（dB）

    相干门限检测：BER = Q(√(SNR/2)) 的解析反演；
    包络检测：对 berlab 的 Rice/Rayleigh 模型做数值反演（二分法，dB 精度 1e-9）。
    """
    _check_ber_target(ber_target)
    detector = Detector(detector)
    if detector == Detector.COHERENT:
        x = q_inverse(ber_target)
        return linear_to_db(2.0 * x * x)

    from receiver.berlab import analytic_ber_ook_envelope

    def gap(snr_db: float) -> float:
        return analytic_ber_ook_envelope(snr_db) - ber_target

    low, high = -20.0, 40.0
    while gap(low) < 0.0:
        low -= 20.0
    if gap(high) > 0.0:
        raise DomainError(f"包络检测在 {high} dB 仍达不到 {ber_target}", field="ber_target")
    return float(optimize.bisect(gap, low, high, xtol=1e-9))


def relaxed_sensitivity_target(data_rate: float, reference_nf: float,
                               ber_target: float = 1e-3,
                               detector: Detector = Detector.COHERENT) -> float:
    """某速率下放宽后的灵敏度目标：带宽取数据率，NF 取参考值"""
    return sensitivity(data_rate, required_snr_ook(ber_target, detector), reference_nf).sensitivity


__all__ = [
    'fspl', 'required_sensitivity', 'sensitivity', 'snr_from_ebn0', 'ebn0_from_snr',
    'required_snr_ook', 'relaxed_sensitivity_target',
]
