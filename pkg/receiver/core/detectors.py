"""
OOK 判决器
提供统一接口：每比特统计量 + 门限 → 比特；判决器由工厂按 OokParams.detector 创建
"""
import abc
import logging
from typing import Dict, Optional, Type

import numpy as np

from receiver.core.types import Detector, OokParams
from utils import DomainError

logger = logging.getLogger("ulprx.detectors")


class BitDetector(abc.ABC):
    """判决器抽象基类"""

    kind: Detector

    def __init__(self, params: OokParams):
        self.params = params

    def _per_bit(self, samples: np.ndarray) -> np.ndarray:
        spb = self.params.samples_per_bit
        if samples.ndim != 1 or samples.size % spb:
            raise DomainError(
                f"采样数 {samples.size} 不是每比特采样数 {spb} 的整数倍", field="samples")
        return samples.reshape(-1, spb)

    @abc.abstractmethod
    def statistic(self, samples: np.ndarray) -> np.ndarray:
        """每比特判决统计量"""

    @abc.abstractmethod
    def threshold(self, snr_db: Optional[float] = None) -> float:
        """绝对门限（与 amplitude_on 同单位）"""

    def decide(self, samples: np.ndarray, snr_db: Optional[float] = None) -> np.ndarray:
        # 恰好等于门限判为 0
        stats = self.statistic(np.asarray(samples))
        return (stats > self.threshold(snr_db)).astype(np.uint8)


class CoherentThresholdDetector(BitDetector):
    """相干门限：每比特实部均值与 threshold·A 比较"""

    kind = Detector.COHERENT

    def statistic(self, samples: np.ndarray) -> np.ndarray:
        return np.real(self._per_bit(samples)).mean(axis=1)

    def threshold(self, snr_db: Optional[float] = None) -> float:
        return self.params.threshold * self.params.amplitude_on


class EnvelopeDetector(BitDetector):
    """非相干包络：每比特 |复包络| 的均值，门限按 SNR 数值优化

    最优门限来自每比特一个采样的 Rice/Rayleigh 模型；samples_per_bit > 1 时
    取模在平均之前，门限只是近似。
    """

    kind = Detector.ENVELOPE

    def statistic(self, samples: np.ndarray) -> np.ndarray:
        return np.abs(self._per_bit(samples)).mean(axis=1)

    def threshold(self, snr_db: Optional[float] = None) -> float:
        if snr_db is None:
            return 0.5 * self.params.amplitude_on
        from receiver.berlab import optimal_envelope_threshold
        return optimal_envelope_threshold(snr_db) * self.params.amplitude_on


class DetectorFactory:
    """判决器工厂"""

    _registry: Dict[Detector, Type[BitDetector]] = {
        Detector.COHERENT: CoherentThresholdDetector,
        Detector.ENVELOPE: EnvelopeDetector,
    }

    @classmethod
    def create(cls, params: OokParams) -> BitDetector:
        detector_cls = cls._registry.get(Detector(params.detector))
        if detector_cls is None:
            raise DomainError(f"不支持的判决器: {params.detector}", field="detector")
        logger.debug(f"创建判决器: {detector_cls.__name__}")
        return detector_cls(params)

    @classmethod
    def register(cls, kind: Detector, detector_cls: Type[BitDetector]) -> None:
        cls._registry[kind] = detector_cls


__all__ = ['BitDetector', 'CoherentThresholdDetector', 'EnvelopeDetector', 'DetectorFactory']
