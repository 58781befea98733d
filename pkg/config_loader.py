"""
配置加载模块

加载顺序：内置默认值 ← config.yaml ← 本地覆盖文件（config.local.yaml 等）。
合并结果经 pydantic 模式校验，未知键直接拒绝；解析后的配置计算哈希，
写进每个输出文件的来源信息头。
"""
import glob
import hashlib
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from receiver.core.types import (
    BiasPoint, DividerArch, DividerModel, LinkParams, LnaDesign, MatchingNetwork,
    MixerDesign, TransistorModel, replace,
)
from utils import ConfigError, json

logger = logging.getLogger("ulprx.config")

CONFIG_PATH_ENV = "ULPRX_CONFIG"
CONFIG_MODE_ENV = "ULPRX_CONFIG_MODE"
DEFAULT_CONFIG_PATH = "config.yaml"


def deep_merge(default: Dict[str, Any], user: Dict[str, Any]) -> Dict[str, Any]:
    """深度合并两个字典，用户配置覆盖默认配置"""
    if not isinstance(default, dict) or not isinstance(user, dict):
        return user if user is not None else default

    merged = default.copy()
    for key, value in user.items():
        if key in merged and isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


# ============ 配置模式 ============

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ToolSection(_Section):
    master_seed: int = Field(20240401, ge=0)


class DividerCalibration(_Section):
    activity_factor: float = Field(1.0, gt=0)
    effective_switched_cap: Dict[DividerArch, float] = {
        DividerArch.FLIP_FLOP: 120e-15,
        DividerArch.CIRCULAR: 45e-15,
    }

    @model_validator(mode="after")
    def _circular_cheaper(self) -> "DividerCalibration":
        caps = self.effective_switched_cap
        missing = [arch.value for arch in DividerArch if arch not in caps]
        if missing:
            raise ValueError(f"effective_switched_cap 缺少结构: {missing}")
        if any(cap <= 0 for cap in caps.values()):
            raise ValueError("effective_switched_cap 必须为正")
        if not caps[DividerArch.CIRCULAR] < caps[DividerArch.FLIP_FLOP]:
            raise ValueError("effective_switched_cap: circular 的等效电容必须小于 flip-flop")
        return self


def _default_transistor() -> TransistorModel:
    return TransistorModel(bias_table=(
        BiasPoint(gate_bias=0.45, gm_over_id=22.0, current_density=0.08, intrinsic_gain_k=10.5),
        BiasPoint(gate_bias=0.50, gm_over_id=16.0, current_density=0.6, intrinsic_gain_k=10.5),
        BiasPoint(gate_bias=0.55, gm_over_id=11.0, current_density=4.0, intrinsic_gain_k=10.5),
    ))


class CalibrationConfig(_Section):
    """器件标定：趋势模型参数，不是测量值"""
    transistor: TransistorModel = Field(default_factory=_default_transistor)
    lna_match_margin: float = Field(2.0, gt=1)
    pn_width_ratio: float = Field(2.0, gt=0)
    rsw_unit: float = Field(1e-4, ge=0)
    switch_gate_cap_per_width: float = Field(0.5e-9, ge=0)
    divider: DividerCalibration = DividerCalibration()
    external_load_cap: float = Field(5e-12, ge=0)
    include_external_load: bool = False
    mixer_conversion_gain_db: float = -3.92
    implementation_loss_db: float = Field(0.0, ge=0)
    reference_nf_db: float = 23.2

    def divider_model(self, arch: DividerArch, supply: float) -> DividerModel:
        return DividerModel(
            arch=arch,
            effective_switched_cap=self.divider.effective_switched_cap[arch],
            supply=supply,
            activity_factor=self.divider.activity_factor,
        )


class DefaultsConfig(_Section):
    link: LinkParams = LinkParams()
    lna: LnaDesign = LnaDesign()
    mixer: MixerDesign = MixerDesign()
    matching: MatchingNetwork = MatchingNetwork()
    data_rate: float = Field(300e3, gt=0)


def _default_axes() -> Dict[str, List[Any]]:
    return {
        "lna.gate_bias": [0.45, 0.50, 0.55],
        "lna.size": [5e-6, 10e-6, 20e-6, 40e-6, 80e-6, 120e-6, 160e-6, 240e-6],
        "mixer.switch_width": [5e-6, 10e-6, 20e-6],
    }


class ExplorerConfig(_Section):
    axes: Dict[str, List[Any]] = Field(default_factory=_default_axes)
    rates: List[float] = [1e4, 3e4, 1e5, 3e5, 1e6, 3e6, 1e7]
    compliant_target_dbm: float = -83.0
    compliant_rate: float = Field(300e3, gt=0)
    zin_targets: List[float] = [50.0, 200.0, 1000.0, 5000.0]
    cache_size: int = Field(4096, ge=0)


class NpathSimConfig(_Section):
    """波形仿真参数；噪声系数仿真使用频率缩放后的 LO"""
    oversampling: int = Field(32, ge=32)
    settle_fraction: float = Field(0.25, ge=0, lt=1)
    nf_lo_freq: float = Field(2e6, gt=0)
    nf_corner: float = Field(200e3, gt=0)
    nf_tone_offset: float = Field(10e3, gt=0)
    nf_band: Tuple[float, float] = (2e3, 40e3)
    nf_duration: float = Field(0.05, gt=0)
    nf_tone_amplitude: float = Field(1e-3, gt=0)
    nf_resolution: float = Field(500.0, gt=0)


def _default_presets() -> Dict[str, Dict[str, Any]]:
    return {
        "fig3": {"command": "lna", "gate_biases": [0.45, 0.50, 0.55], "zin_targets": [50.0, 200.0, 1000.0, 5000.0]},
        "fig8": {"command": "mixer", "rs": [50.0, 200.0, 1000.0], "rsw": [0.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0]},
        "fig11": {"command": "explore", "action": "sweep", "data_rate": 300e3},
        "fig12": {"command": "explore", "action": "energy-curve"},
        "fig13": {"command": "explore", "action": "breakdown", "data_rate": 300e3, "target": -83.0},
        "medradio-compliant": {"command": "report", "data_rate": 300e3, "target": -83.0},
        "high-rate": {"command": "report", "data_rate": 10e6},
    }


class LimitsConfig(_Section):
    max_grid_size: int = Field(20000, ge=1)
    max_sim_samples: int = Field(20_000_000, ge=1)
    workers: int = Field(4, ge=1)
    ber_block_bits: int = Field(100_000, ge=1000)


class LogTypeSection(_Section):
    enabled: bool = True
    save_to_file: bool = True
    show_in_console: bool = True


class LoggingSection(_Section):
    enabled: bool = True
    log_dir: str = "logs"
    log_level: str = "INFO"
    log_types: Dict[str, LogTypeSection] = {
        "process": LogTypeSection(show_in_console=False),
        "performance": LogTypeSection(show_in_console=False),
        "data": LogTypeSection(save_to_file=False, show_in_console=False),
        "progress": LogTypeSection(save_to_file=False, show_in_console=False),
    }
    progress: Dict[str, Any] = {"show_percentage": True, "show_elapsed_time": True}
    file_rotation: Dict[str, int] = {"max_size_mb": 100, "backup_count": 5}


class ServerSection(_Section):
    host: str = "127.0.0.1"
    port: int = Field(8403, ge=1, le=65535)


class ToolConfig(_Section):
    """完整配置模式"""
    tool: ToolSection = ToolSection()
    calibration: CalibrationConfig = CalibrationConfig()
    defaults: DefaultsConfig = DefaultsConfig()
    explorer: ExplorerConfig = ExplorerConfig()
    npathsim: NpathSimConfig = NpathSimConfig()
    limits: LimitsConfig = LimitsConfig()
    presets: Dict[str, Dict[str, Any]] = Field(default_factory=_default_presets)
    logging: LoggingSection = LoggingSection()
    server: ServerSection = ServerSection()


DEFAULT_CONFIG: Dict[str, Any] = ToolConfig().model_dump(mode="json")


def _format_validation_error(error: ValidationError) -> str:
    """把 pydantic 错误转成 “点号路径: 原因” 形式"""
    parts = []
    for item in error.errors():
        path = ".".join(str(p) for p in item.get("loc", ()))
        parts.append(f"{path or '<root>'}: {item.get('msg', '')}")
    return "; ".join(parts)


def validate_config(data: Dict[str, Any]) -> ToolConfig:
    """合并内置默认值并校验"""
    merged = deep_merge(DEFAULT_CONFIG, data or {})
    try:
        return ToolConfig.model_validate(merged)
    except ValidationError as e:
        first = e.errors()[0] if e.errors() else {}
        field = ".".join(str(p) for p in first.get("loc", ())) or None
        raise ConfigError(f"配置校验失败: {_format_validation_error(e)}", field=field) from e


class ConfigLoader:
    """配置加载器"""

    def __init__(self, config_path: Optional[str] = None, config_mode: str = "auto"):
        # --config 优先，其次环境变量，最后默认文件
        env_path = os.environ.get(CONFIG_PATH_ENV, "")
        self.explicit_path = config_path is not None or bool(env_path)
        self.config_path = config_path or env_path or DEFAULT_CONFIG_PATH
        env_config_mode = os.environ.get(CONFIG_MODE_ENV, "").lower()
        if config_mode == "auto" and env_config_mode in ("local", "global", "auto"):
            self.config_mode = env_config_mode
        else:
            self.config_mode = config_mode.lower()
        self.config: ToolConfig = ToolConfig()
        self.config_data: Dict[str, Any] = dict(DEFAULT_CONFIG)
        self.sources: List[str] = []

    def _read_yaml(self, path: str) -> Dict[str, Any]:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"YAML 解析失败 {path}: {e}", field="config") from e
        if not isinstance(data, dict):
            raise ConfigError(f"配置文件顶层必须是映射: {path}", field="config")
        return data

    def load(self) -> bool:
        """加载并校验配置

        Returns:
            是否读到了配置文件；只用内置默认值时返回 False
        """
        user_data: Dict[str, Any] = {}
        self.sources = []

        if self.config_mode != "local":
            if os.path.exists(self.config_path):
                user_data = self._read_yaml(self.config_path)
                self.sources.append(self.config_path)
                logger.info(f"已加载配置文件: {self.config_path}")
            elif self.explicit_path:
                raise ConfigError(f"配置文件不存在: {self.config_path}", field="config")
            else:
                logger.info(f"未找到 {self.config_path}，使用内置默认值")

        if self.config_mode != "global":
            local_config_path = self._get_local_config_path()
            if local_config_path:
                user_data = deep_merge(user_data, self._read_yaml(local_config_path))
                self.sources.append(local_config_path)
                logger.info(f"本地配置文件已合并: {local_config_path}")
            elif self.config_mode == "local":
                raise ConfigError("本地模式下未找到本地配置文件", field="config")

        self.config = validate_config(user_data)
        self.config_data = self.config.model_dump(mode="json")
        logger.info(f"配置就绪，哈希 {self.config_hash()[:16]}")
        return bool(self.sources)

    def config_hash(self) -> str:
        """解析后配置的 SHA-256（键排序）"""
        payload = json.dumps(self.config_data, sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @property
    def master_seed(self) -> int:
        return self.config.tool.master_seed

    def get_calibration(self) -> CalibrationConfig:
        return self.config.calibration

    def get_defaults(self) -> DefaultsConfig:
        """缺省设计；混频器未写 rsw_unit 时取 calibration.rsw_unit"""
        defaults = self.config.defaults
        if defaults.mixer.rsw_unit is not None:
            return defaults
        try:
            mixer = replace(defaults.mixer, rsw_unit=self.config.calibration.rsw_unit)
        except ValidationError as e:
            raise ConfigError(_format_validation_error(e), field="calibration.rsw_unit") from e
        return defaults.model_copy(update={"mixer": mixer})

    def get_explorer_config(self) -> ExplorerConfig:
        return self.config.explorer

    def get_npathsim_config(self) -> NpathSimConfig:
        return self.config.npathsim

    def get_limits(self) -> LimitsConfig:
        return self.config.limits

    def get_preset(self, name: str) -> Dict[str, Any]:
        presets = self.config.presets
        if name not in presets:
            raise ConfigError(f"未知预设 {name}，可选: {', '.join(sorted(presets))}", field="preset")
        return dict(presets[name])

    def get_logging_config(self) -> Dict[str, Any]:
        """日志配置字典，直接交给 init_smart_logger"""
        return self.config_data["logging"]

    def get_server_config(self) -> Dict[str, Any]:
        return self.config_data["server"]

    def _get_local_config_path(self) -> Optional[str]:
        """
        获取本地配置文件路径

        检查以下文件（按优先级顺序）：
        1. config.local.yaml
        2. config.personal.yaml
        3. 配置文件所在目录下的任何 *.local.yaml 文件
        """
        config_dir = os.path.dirname(self.config_path) or "."
        candidate_paths = [
            os.path.join(config_dir, "config.local.yaml"),
            os.path.join(config_dir, "config.personal.yaml"),
        ]
        for file_path in sorted(glob.glob(os.path.join(config_dir, "*.local.yaml"))):
            if file_path not in candidate_paths:
                candidate_paths.append(file_path)

        for path in candidate_paths:
            if os.path.exists(path) and os.path.abspath(path) != os.path.abspath(self.config_path):
                return path
        return None


__all__ = [
    'deep_merge', 'validate_config', 'ConfigLoader', 'ToolConfig', 'DEFAULT_CONFIG',
    'CalibrationConfig', 'DefaultsConfig', 'ExplorerConfig', 'NpathSimConfig', 'LimitsConfig',
    'CONFIG_PATH_ENV', 'CONFIG_MODE_ENV',
]
