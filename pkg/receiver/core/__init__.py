"""
Core components for the receiver models
提供各模块共用的值对象、线路编码、检测器与缓存
"""

from .types import (
    Detector, LnaMode, DividerArch, MatchTopology, LinkParams, SensitivityReport, TransistorModel,
    LnaDesign, LnaReport, MixerDesign, DividerModel, MatchingNetwork, OokParams,
    BerResult, DesignPoint, DesignMetrics, SweepSpec, Objective,
)
from .cache_manager import EvaluationCache

__all__ = [
    'Detector', 'LnaMode', 'DividerArch', 'MatchTopology', 'LinkParams', 'SensitivityReport',
    'TransistorModel', 'LnaDesign', 'LnaReport', 'MixerDesign', 'DividerModel',
    'MatchingNetwork', 'OokParams', 'BerResult', 'DesignPoint', 'DesignMetrics',
    'SweepSpec', 'Objective', 'EvaluationCache',
]
