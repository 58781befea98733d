"""
N 路无源混频器离散时间行为仿真

每条支路是“源 → R_s + R_sw → 接地电容”：
- 支路导通时，电容电压按精确的一步 RC 指数解趋向源电压；
- 支路断开时，电容电压保持不变（逐位不变）。

因为同一时刻至多一条支路导通，每条支路只在自己的导通采样上构成一阶 IIR，
用 scipy.signal.lfilter 对导通子序列滤波，再向前填充得到保持段。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import signal

from config_loader import NpathSimConfig
from receiver.core.types import MixerDesign, Record, replace
from smart_logger import get_smart_logger
from utils import (
    BOLTZMANN, T0_KELVIN, DomainError, ResolutionError, UndersampledError, linear_to_db,
)

logger = logging.getLogger("ulprx.npathsim")
smart_logger = get_smart_logger()

MIN_OVERSAMPLING = 32
MIN_LO_CYCLES = 64
MIN_IF_CYCLES = 8
WINDOW_NAME = "flattop"

_DEFAULT_SETTINGS = NpathSimConfig()


# ============ 输入波形描述 ============

class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Tone(_Spec):
    """单音；freq = 0 时为幅度 amplitude·cos(phase) 的直流"""
    kind: Literal["tone"] = "tone"
    freq: float = Field(ge=0)
    amplitude: float = Field(1.0, ge=0)
    phase: float = 0.0


class Noise(_Spec):
    """白噪声，psd 为单边功率谱密度 V²/Hz"""
    kind: Literal["noise"] = "noise"
    psd: float = Field(ge=0)


class WaveSum(_Spec):
    kind: Literal["sum"] = "sum"
    parts: List[Union[Tone, Noise]] = []


InputSpec = Union[Tone, Noise, WaveSum]


def _tones(spec: InputSpec) -> List[Tone]:
    if isinstance(spec, Tone):
        return [spec]
    if isinstance(spec, WaveSum):
        return [p for p in spec.parts if isinstance(p, Tone)]
    return []


def render_input(spec: InputSpec, time_axis: np.ndarray, rng: np.random.Generator,
                 sample_rate: float) -> np.ndarray:
    """按描述生成输入波形"""
    if isinstance(spec, Tone):
        return spec.amplitude * np.cos(2.0 * np.pi * spec.freq * time_axis + spec.phase)
    if isinstance(spec, Noise):
        sigma = math.sqrt(spec.psd * sample_rate / 2.0)
        return sigma * rng.standard_normal(time_axis.size)
    total = np.zeros(time_axis.size)
    for part in spec.parts:
        total += render_input(part, time_axis, rng, sample_rate)
    return total


# ============ 结果类型 ============

@dataclass
class NloWaveforms:
    """不交叠本振相位；active[n] 为第 n 个采样导通的支路号，-1 表示全部断开"""
    sample_rate: float
    lo_freq: float
    duty: float
    n_paths: int
    active: np.ndarray

    @property
    def phases(self) -> np.ndarray:
        """N × n_samples 的布尔矩阵"""
        return self.active[np.newaxis, :] == np.arange(self.n_paths)[:, np.newaxis]

    def __len__(self) -> int:
        return int(self.active.size)


@dataclass
class NpathRunResult:
    time_axis: np.ndarray
    nlo: NloWaveforms
    per_path_cap_voltages: np.ndarray
    combined_baseband: np.ndarray
    input_waveform: np.ndarray
    sample_rate: float
    lo_freq: float
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return int(self.per_path_cap_voltages.shape[0])


class ConversionMeasurement(Record):
    gain: float
    if_freq: float
    image_rejection: float
    resolution: float
    window: str = WINDOW_NAME


# ============ 本振 ============

def gen_nlo(n_paths: int, duty: float, lo_freq: float, sample_rate: float,
            n_samples: int) -> NloWaveforms:
    """生成 N 相不交叠本振，相位 0 的上升沿在 t = 0"""
    if n_paths < 1:
        raise DomainError(f"必须 ≥ 1，当前为 {n_paths}", field="n_paths")
    if not 0.0 < duty <= 1.0:
        raise DomainError(f"必须在 (0, 1] 内，当前为 {duty}", field="duty")
    if n_paths * duty > 1.0 + 1e-12:
        raise DomainError(f"n_paths·duty = {n_paths * duty:g} > 1，相位会交叠", field="duty")
    if lo_freq <= 0.0:
        raise DomainError(f"必须为正数，当前为 {lo_freq}", field="lo_freq")
    if sample_rate < MIN_OVERSAMPLING * lo_freq:
        raise UndersampledError(
            f"采样率 {sample_rate:g} Hz 低于 {MIN_OVERSAMPLING}×f_LO = {MIN_OVERSAMPLING * lo_freq:g} Hz",
            field="sample_rate",
        )
    if n_samples < 1:
        raise DomainError(f"必须 ≥ 1，当前为 {n_samples}", field="n_samples")

    cycles = np.arange(n_samples, dtype=np.float64) * (lo_freq / sample_rate)
    position = (cycles - np.floor(cycles)) * n_paths
    slot = np.minimum(np.floor(position).astype(np.int64), n_paths - 1)
    high = (position - slot) < duty * n_paths
    active = np.where(high, slot, -1).astype(np.int8)
    return NloWaveforms(sample_rate=sample_rate, lo_freq=lo_freq, duty=duty,
                        n_paths=n_paths, active=active)


# ============ 仿真核心 ============

def _hold_filter(drive: np.ndarray, indices: np.ndarray, n_samples: int, decay: float) -> np.ndarray:
    """导通采样上做一阶 RC 更新，其余采样保持上一值"""
    out = np.zeros(n_samples)
    if indices.size == 0:
        return out
    charged = signal.lfilter([1.0 - decay], [1.0, -decay], drive)
    last = np.full(n_samples, -1, dtype=np.int64)
    last[indices] = np.arange(indices.size)
    np.maximum.accumulate(last, out=last)
    valid = last >= 0
    out[valid] = charged[last[valid]]
    return out


def _thermal_sigma(resistance: float, sample_rate: float, temperature: float) -> float:
    """单边 PSD 4kTR 的白噪声在采样率下的标准差"""
    return math.sqrt(2.0 * BOLTZMANN * temperature * resistance * sample_rate)


def simulate_npath(mixer: MixerDesign, input_spec: InputSpec, duration: float, seed: int,
                   sample_rate: Optional[float] = None,
                   settings: Optional[NpathSimConfig] = None,
                   include_thermal_noise: bool = False,
                   temperature: float = T0_KELVIN,
                   max_samples: Optional[int] = None) -> NpathRunResult:
    """运行一次 N 路混频器仿真；给定 seed 时结果确定"""
    cfg = settings or _DEFAULT_SETTINGS
    if not duration > 0.0:
        raise DomainError(f"必须为正数，当前为 {duration}", field="duration")
    f_max = max([mixer.lo_freq] + [t.freq for t in _tones(input_spec)])
    fs = float(sample_rate) if sample_rate is not None else cfg.oversampling * f_max
    if fs < MIN_OVERSAMPLING * f_max:
        raise UndersampledError(
            f"采样率 {fs:g} Hz 低于 {MIN_OVERSAMPLING}×max(f_LO, f_RF) = {MIN_OVERSAMPLING * f_max:g} Hz",
            field="sample_rate",
        )
    if duration * mixer.lo_freq < MIN_LO_CYCLES:
        raise DomainError(f"仿真时长不足 {MIN_LO_CYCLES} 个本振周期", field="duration")
    n_samples = int(round(duration * fs))
    if max_samples is not None and n_samples > max_samples:
        raise DomainError(f"需要 {n_samples} 个采样，超过上限 {max_samples}", field="duration")

    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2 + mixer.n_paths)]
    time_axis = np.arange(n_samples) / fs
    source = render_input(input_spec, time_axis, streams[0], fs)
    rsw = mixer.switch_resistance
    drive_common = source
    if include_thermal_noise:
        drive_common = source + _thermal_sigma(mixer.source_impedance, fs, temperature) * streams[1].standard_normal(n_samples)

    nlo = gen_nlo(mixer.n_paths, mixer.duty, mixer.lo_freq, fs, n_samples)
    tau = (mixer.source_impedance + rsw) * mixer.baseband_cap
    decay = math.exp(-1.0 / (fs * tau))

    caps = np.empty((mixer.n_paths, n_samples))
    for path in range(mixer.n_paths):
        indices = np.flatnonzero(nlo.active == path)
        drive = drive_common[indices]
        if include_thermal_noise and rsw > 0.0:
            drive = drive + _thermal_sigma(rsw, fs, temperature) * streams[2 + path].standard_normal(indices.size)
        caps[path] = _hold_filter(drive, indices, n_samples, decay)

    combined = caps[0] - caps[mixer.n_paths // 2]
    return NpathRunResult(
        time_axis=time_axis, nlo=nlo, per_path_cap_voltages=caps, combined_baseband=combined,
        input_waveform=source, sample_rate=fs, lo_freq=mixer.lo_freq,
        metadata={"seed": seed, "window": WINDOW_NAME, "thermal_noise": include_thermal_noise,
                  "rc_decay": decay, "n_samples": n_samples},
    )


# ============ 测量 ============

def _flattop_spectrum(samples: np.ndarray, sample_rate: float, two_sided: bool = False
                      ) -> Tuple[np.ndarray, np.ndarray]:
    window = signal.get_window(WINDOW_NAME, samples.size)
    scale = 2.0 / np.sum(window)
    if two_sided:
        spectrum = np.fft.fftshift(np.fft.fft(samples * window))
        freqs = np.fft.fftshift(np.fft.fftfreq(samples.size, 1.0 / sample_rate))
        return freqs, np.abs(spectrum) * scale
    spectrum = np.fft.rfft(samples * window)
    return np.fft.rfftfreq(samples.size, 1.0 / sample_rate), np.abs(spectrum) * scale


def _peak_near(freqs: np.ndarray, amps: np.ndarray, target: float, span_bins: int = 3) -> Tuple[float, float]:
    center = int(np.argmin(np.abs(freqs - target)))
    low, high = max(center - span_bins, 0), min(center + span_bins + 1, freqs.size)
    k = low + int(np.argmax(amps[low:high]))
    return float(freqs[k]), float(amps[k])


def measure_conversion(result: NpathRunResult, f_rf: float, f_lo: float,
                       settle_fraction: Optional[float] = None) -> ConversionMeasurement:
    """平顶窗 FFT 测变频增益与中频位置

    gain = 基带在中频处的幅度 / 输入在 f_rf 处的幅度（dB）；
    4 路运行额外用 I − jQ 复基带测镜像抑制，2 路运行镜像抑制记为 0 dB。
    """
    fraction = _DEFAULT_SETTINGS.settle_fraction if settle_fraction is None else settle_fraction
    fs = result.sample_rate
    start = int(len(result.combined_baseband) * fraction)
    segment = result.combined_baseband[start:]
    span = segment.size / fs
    expected_if = abs(f_rf - f_lo)
    if expected_if * span < MIN_IF_CYCLES:
        raise ResolutionError(
            f"测量窗口 {span:g} s 内中频 {expected_if:g} Hz 不足 {MIN_IF_CYCLES} 个周期",
            field="duration",
        )

    freqs, amps = _flattop_spectrum(segment, fs)
    band = (freqs >= (MIN_IF_CYCLES // 2) / span) & (freqs < f_lo / 2.0)
    candidates = np.flatnonzero(band)
    peak = candidates[int(np.argmax(amps[candidates]))]
    if_freq = float(freqs[peak])
    out_amp = float(amps[peak])

    in_freqs, in_amps = _flattop_spectrum(result.input_waveform[start:], fs)
    _, in_amp = _peak_near(in_freqs, in_amps, f_rf)
    if in_amp <= 0.0:
        raise DomainError("输入在 f_rf 处没有能量", field="f_rf")
    gain = 20.0 * math.log10(out_amp / in_amp)

    image_rejection = 0.0
    if result.n_paths == 4:
        caps = result.per_path_cap_voltages[:, start:]
        complex_bb = (caps[0] - caps[2]) - 1j * (caps[1] - caps[3])
        cfreqs, camps = _flattop_spectrum(complex_bb, fs, two_sided=True)
        sign = 1.0 if f_rf >= f_lo else -1.0
        _, wanted = _peak_near(cfreqs, camps, sign * if_freq)
        _, image = _peak_near(cfreqs, camps, -sign * if_freq)
        image_rejection = linear_to_db((wanted / image) ** 2) if image > 0 else math.inf

    return ConversionMeasurement(gain=gain, if_freq=if_freq, image_rejection=image_rejection,
                                 resolution=fs / segment.size)


def corner_frequency_estimate(mixer: MixerDesign) -> float:
    """一阶估计 D/(2π(R_s+R_sw)C)；D = 1/N 时即 1/(2π·N·(R_s+R_sw)·C)"""
    return mixer.duty / (2.0 * math.pi * (mixer.source_impedance + mixer.switch_resistance) * mixer.baseband_cap)


def _sweep_duration(mixer: MixerDesign, offset: float, settle_fraction: float) -> float:
    tau_eff = (mixer.source_impedance + mixer.switch_resistance) * mixer.baseband_cap / mixer.duty
    settle = 10.0 * tau_eff / max(settle_fraction, 1e-3)
    measure = (MIN_IF_CYCLES + 4) / (offset * (1.0 - settle_fraction))
    return max(MIN_LO_CYCLES / mixer.lo_freq, settle, measure)


def conversion_gain_sweep(mixer: MixerDesign, offsets: Sequence[float], amplitude: float = 1e-3,
                          settings: Optional[NpathSimConfig] = None,
                          seed: int = 0) -> List[Tuple[float, float]]:
    """对每个频偏仿真一次，返回 (频偏, 增益 dB)"""
    cfg = settings or _DEFAULT_SETTINGS
    rows = []
    for offset in offsets:
        f_rf = mixer.lo_freq + offset
        duration = _sweep_duration(mixer, offset, cfg.settle_fraction)
        result = simulate_npath(mixer, Tone(freq=f_rf, amplitude=amplitude), duration, seed, settings=cfg)
        rows.append((float(offset), measure_conversion(result, f_rf, mixer.lo_freq, cfg.settle_fraction).gain))
    return rows


def locate_corner(mixer: MixerDesign, points_per_decade: int = 8,
                  settings: Optional[NpathSimConfig] = None) -> float:
    """扫描频偏，找到增益比低频下降 3 dB 的位置（对数插值）"""
    estimate = corner_frequency_estimate(mixer)
    offsets = np.logspace(math.log10(estimate / 10.0), math.log10(estimate * 10.0), 2 * points_per_decade + 1)
    rows = conversion_gain_sweep(mixer, offsets, settings=settings)
    reference = rows[0][1]
    for (f1, g1), (f2, g2) in zip(rows, rows[1:]):
        if g1 - reference > -3.0 >= g2 - reference:
            ratio = (-3.0 - (g1 - reference)) / (g2 - g1)
            return float(10.0 ** (math.log10(f1) + ratio * (math.log10(f2) - math.log10(f1))))
    raise ResolutionError("扫描范围内没有找到 -3 dB 点", field="offsets")


def simulated_noise_figure(mixer: MixerDesign, seed: int,
                           settings: Optional[NpathSimConfig] = None,
                           temperature: float = T0_KELVIN) -> float:
    """蒙特卡洛噪声系数

    频率缩放运行：LO 取 settings.nf_lo_freq，基带电容按 settings.nf_corner 重新选取，
    只保留 N、D、R_s、R_sw 这些决定噪声系数的量。先跑无噪声单音得到输出信号功率，
    再跑只含 R_s、R_sw 热噪声的运行，用 Welch 估计中频附近的输出噪声密度。
    """
    cfg = settings or _DEFAULT_SETTINGS
    r_total = mixer.source_impedance + mixer.switch_resistance
    scaled = replace(mixer, lo_freq=cfg.nf_lo_freq,
                     baseband_cap=mixer.duty / (2.0 * math.pi * r_total * cfg.nf_corner))
    f_rf = cfg.nf_lo_freq + cfg.nf_tone_offset
    amplitude = cfg.nf_tone_amplitude

    smart_logger.performance.start_timer("simulated_noise_figure")
    duration = _sweep_duration(scaled, cfg.nf_tone_offset, cfg.settle_fraction)
    tone_run = simulate_npath(scaled, Tone(freq=f_rf, amplitude=amplitude), duration, seed, settings=cfg)
    gain = measure_conversion(tone_run, f_rf, scaled.lo_freq, cfg.settle_fraction).gain
    out_power = (amplitude * 10.0 ** (gain / 20.0)) ** 2 / 2.0

    noise_run = simulate_npath(scaled, WaveSum(), cfg.nf_duration, seed, settings=cfg,
                               include_thermal_noise=True, temperature=temperature)
    start = int(noise_run.combined_baseband.size * cfg.settle_fraction)
    nperseg = int(noise_run.sample_rate / cfg.nf_resolution)
    freqs, psd = signal.welch(noise_run.combined_baseband[start:], fs=noise_run.sample_rate,
                              window="hann", nperseg=nperseg, scaling="density")
    in_band = (freqs >= cfg.nf_band[0]) & (freqs <= cfg.nf_band[1])
    out_noise_density = float(np.mean(psd[in_band]))
    smart_logger.performance.stop_timer("simulated_noise_figure")

    in_snr = (amplitude ** 2 / 2.0) / (4.0 * BOLTZMANN * temperature * mixer.source_impedance)
    out_snr = out_power / out_noise_density
    nf = linear_to_db(in_snr / out_snr)
    logger.info(f"仿真噪声系数 {nf:.3f} dB (R_s={mixer.source_impedance:g} Ω, R_sw={mixer.switch_resistance:g} Ω)")
    return nf


def waveform_table(result: NpathRunResult, decimate: int = 1) -> Tuple[List[str], np.ndarray]:
    """波形导出：t,<phase 列>,<cap 列>,bb"""
    if decimate < 1:
        raise DomainError(f"必须 ≥ 1，当前为 {decimate}", field="decimate")
    n = result.n_paths
    header = ["t"] + [f"phi{i}" for i in range(n)] + [f"vc{i}" for i in range(n)] + ["bb"]
    columns = [result.time_axis[::decimate]]
    columns += [p[::decimate].astype(float) for p in result.nlo.phases]
    columns += [c[::decimate] for c in result.per_path_cap_voltages]
    columns.append(result.combined_baseband[::decimate])
    return header, np.column_stack(columns)


__all__ = [
    'Tone', 'Noise', 'WaveSum', 'InputSpec', 'render_input',
    'NloWaveforms', 'NpathRunResult', 'ConversionMeasurement',
    'gen_nlo', 'simulate_npath', 'measure_conversion', 'corner_frequency_estimate',
    'conversion_gain_sweep', 'locate_corner', 'simulated_noise_figure', 'waveform_table',
]
