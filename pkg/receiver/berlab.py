"""
OOK 误码率实验室

链路：随机字节 → 8b/10b → OOK 调制 → AWGN → 判决 → 与发送的信道比特逐位比较。
SNR 一律指数据带宽内“平均信号功率 / 噪声功率”（每比特）；每比特多个采样时，
逐采样 SNR 相应降低 10·log10(samples_per_bit)。相干判决积分后恢复到每比特 SNR；
包络判决先取模再平均，达不到同样的积分增益。

试验按块切分，块 b 的随机流来自 SeedSequence([seed, b])，块之间并行执行，
结果与线程数无关。
"""
import logging
import math
import uuid
from functools import lru_cache
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import optimize, stats

from receiver.core.detectors import DetectorFactory
from receiver.core.linecode import count_byte_errors, encode_8b10b
from receiver.core.types import BerResult, Detector, OokParams, replace
from smart_logger import get_smart_logger
from utils import DomainError, db_to_linear, q_function
from worker_pool import worker_pool

logger = logging.getLogger("ulprx.berlab")
smart_logger = get_smart_logger()

MIN_BITS = 1000
DEFAULT_BLOCK_BITS = 100_000
SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


# ============ 调制 / 信道 / 解调 ============

def ook_modulate(bits: Union[Sequence[int], np.ndarray], params: OokParams) -> np.ndarray:
    """比特 1 → amplitude_on，比特 0 → 0，每比特 samples_per_bit 个采样"""
    levels = np.asarray(bits, dtype=np.float64) * params.amplitude_on
    return np.repeat(levels, params.samples_per_bit)


def add_awgn(samples: np.ndarray, snr: float, seed: SeedLike) -> np.ndarray:
    """按平均功率加白噪声；复数输入每个分量的方差都是 P/SNR"""
    samples = np.asarray(samples)
    if samples.size == 0:
        raise DomainError("输入为空", field="samples")
    if math.isinf(snr) and snr > 0:
        return samples.copy()
    power = float(np.mean(np.abs(samples) ** 2))
    if power == 0.0:
        raise DomainError("输入信号功率为零，无法按 SNR 定标噪声", field="samples")
    sigma = math.sqrt(power / db_to_linear(snr))
    rng = np.random.default_rng(seed)
    if np.iscomplexobj(samples):
        noise = rng.standard_normal(samples.size) + 1j * rng.standard_normal(samples.size)
        return samples + sigma * noise.reshape(samples.shape)
    return samples + sigma * rng.standard_normal(samples.shape)


def ook_demodulate(samples: np.ndarray, params: OokParams, snr_db: Optional[float] = None) -> np.ndarray:
    """逐比特判决；包络检测给定 snr_db 时使用最优门限，否则用 A/2"""
    return DetectorFactory.create(params).decide(np.asarray(samples), snr_db)


# ============ 解析误码率 ============

def analytic_ber_ook_coherent(snr: float) -> float:
    """BER = Q(√(SNR/2))"""
    if math.isinf(snr):
        return 0.0 if snr > 0 else 0.5
    return q_function(math.sqrt(db_to_linear(snr) / 2.0))


def _envelope_sigma(snr: float) -> float:
    # A = 1，平均功率 1/2，复噪声每分量方差 P/SNR
    return math.sqrt(0.5 / db_to_linear(snr))


def _envelope_error(threshold, sigma: float):
    """0：Rayleigh 超过门限；1：Rice 低于门限（threshold 可为数组）"""
    false_alarm = np.exp(-np.square(threshold) / (2.0 * sigma ** 2))
    miss = stats.rice.cdf(np.asarray(threshold) / sigma, 1.0 / sigma)
    return 0.5 * (false_alarm + miss)


@lru_cache(maxsize=1024)
def optimal_envelope_threshold(snr: float) -> float:
    """使包络检测误码率最小的门限（相对 amplitude_on）：网格粗搜 + 黄金分割"""
    if math.isinf(snr) and snr > 0:
        return 0.5
    sigma = _envelope_sigma(snr)
    grid = np.linspace(0.01, 1.0 + 8.0 * sigma, 200)
    errors = _envelope_error(grid, sigma)
    best = int(np.argmin(errors))
    if best == 0 or best == grid.size - 1:
        return float(grid[best])
    try:
        return float(optimize.golden(lambda t: float(_envelope_error(t, sigma)),
                                     brack=(grid[best - 1], grid[best], grid[best + 1]), tol=1e-10))
    except ValueError:
        return float(grid[best])


def analytic_ber_ook_envelope(snr: float, threshold: Optional[float] = None) -> float:
    """非相干包络检测误码率：½[exp(−τ²/2σ²) + F_Rice(τ)]，τ 缺省取最优门限

    只对每比特一个采样（samples_per_bit = 1）精确。
    """
    if math.isinf(snr):
        return 0.0 if snr > 0 else 0.5
    tau = optimal_envelope_threshold(snr) if threshold is None else threshold
    return float(_envelope_error(tau, _envelope_sigma(snr)))


def analytic_ber(snr: float, detector: Detector = Detector.COHERENT) -> float:
    if Detector(detector) == Detector.COHERENT:
        return analytic_ber_ook_coherent(snr)
    return analytic_ber_ook_envelope(snr)


# ============ 置信区间 ============

def wilson_interval(errors: int, trials: int, confidence: float = 0.95):
    """Wilson 得分区间，保证包含点估计"""
    if trials <= 0:
        raise DomainError(f"必须为正数，当前为 {trials}", field="trials")
    if not 0 <= errors <= trials:
        raise DomainError(f"错误数 {errors} 不在 [0, {trials}] 内", field="errors")
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    p_hat = errors / trials
    z2n = z * z / trials
    denom = 1.0 + z2n
    center = (p_hat + z2n / 2.0) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z2n / (4.0 * trials)) / denom
    low = min(max(0.0, center - half), p_hat)
    high = max(min(1.0, center + half), p_hat)
    return low, high


# ============ 蒙特卡洛 ============

class _BlockOutcome:
    __slots__ = ("bits", "errors", "bytes", "byte_errors")

    def __init__(self, bits: int, errors: int, n_bytes: int, byte_errors: int):
        self.bits = bits
        self.errors = errors
        self.bytes = n_bytes
        self.byte_errors = byte_errors


def _run_block(snr: float, n_bytes: int, params: OokParams, seed: int, block: int) -> _BlockOutcome:
    rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
    payload = rng.integers(0, 256, size=n_bytes, dtype=np.uint8).tobytes()
    sent = encode_8b10b(payload).encoded
    waveform = ook_modulate(sent, params)
    if params.detector == Detector.ENVELOPE:
        waveform = waveform * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    sample_snr = snr - 10.0 * math.log10(params.samples_per_bit)
    received = ook_demodulate(add_awgn(waveform, sample_snr, rng), params, snr_db=snr)
    errors = int(np.count_nonzero(received != sent))
    return _BlockOutcome(sent.size, errors, n_bytes, count_byte_errors(received, payload))


def run_ber(snr: float, n_bits: int, params: OokParams, seed: int,
            block_bits: int = DEFAULT_BLOCK_BITS) -> BerResult:
    """蒙特卡洛误码率；信道比特数向上取整到 10 的倍数"""
    if n_bits < MIN_BITS:
        raise DomainError(f"至少需要 {MIN_BITS} 比特，当前为 {n_bits}", field="n_bits")
    if seed < 0:
        raise DomainError(f"必须非负，当前为 {seed}", field="seed")
    total_bytes = -(-n_bits // 10)
    block_bytes = max(1, block_bits // 10)
    sizes = [block_bytes] * (total_bytes // block_bytes)
    if total_bytes % block_bytes:
        sizes.append(total_bytes % block_bytes)

    timer = f"run_ber[{snr:g}dB:{uuid.uuid4().hex[:8]}]"
    smart_logger.performance.start_timer(timer)
    bar = smart_logger.progress.create(total=len(sizes), description=f"BER {snr:g} dB")
    outcomes = worker_pool.map_ordered(
        lambda item: _run_block(snr, item[1], params, seed, item[0]),
        list(enumerate(sizes)),
        on_done=bar.update,
    )
    smart_logger.progress.close(bar.bar_id)
    smart_logger.performance.stop_timer(timer)

    bits = sum(o.bits for o in outcomes)
    errors = sum(o.errors for o in outcomes)
    low, high = wilson_interval(errors, bits)
    result = BerResult(
        bits_sent=bits, bit_errors=errors, ber_point=errors / bits, ci_low=low, ci_high=high,
        snr=snr, seed=seed, detector=params.detector,
        bytes_sent=sum(o.bytes for o in outcomes), byte_errors=sum(o.byte_errors for o in outcomes),
    )
    smart_logger.data.record("ber", result.model_dump(mode="json"))
    logger.info(f"SNR {snr:g} dB: {errors}/{bits} 误码, BER={result.ber_point:.3e} "
                f"[{low:.2e}, {high:.2e}] ({params.detector.value})")
    return result


def ber_sweep(snr_grid: Sequence[float], n_bits: int, params: OokParams, seed: int,
              block_bits: int = DEFAULT_BLOCK_BITS,
              detectors: Optional[Sequence[Detector]] = None) -> List[BerResult]:
    """对 SNR 网格（及若干判决器）逐点运行；各点共用同一 seed 族"""
    kinds = [Detector(d) for d in detectors] if detectors else [params.detector]
    results = []
    for kind in kinds:
        variant = replace(params, detector=kind)
        for snr in snr_grid:
            results.append(run_ber(float(snr), n_bits, variant, seed, block_bits))
    return results


__all__ = [
    'ook_modulate', 'add_awgn', 'ook_demodulate',
    'analytic_ber_ook_coherent', 'analytic_ber_ook_envelope', 'analytic_ber',
    'optimal_envelope_threshold', 'wilson_interval', 'run_ber', 'ber_sweep',
]
