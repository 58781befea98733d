"""
8b/10b 线路编码（只含数据字符 D.x.y）

码字按发送顺序 abcdei fghj 存放，a 为最先发送的位；字节的 bit0..4 映射到 ABCDE，
bit5..7 映射到 FGH。编码表在导入时由 5b/6b 与 3b/4b 子表和游程差异规则一次性展开成
(RD, 字节) → (10 位码字, 新 RD) 的查找表，编码/解码都只做查表。
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from utils import DecodeError, DomainError

# RD− 列；RD+ 列由下面的规则取补
_5B6B_RD_MINUS = (
    "100111", "011101", "101101", "110001", "110101", "101001", "011001", "111000",
    "111001", "100101", "010101", "110100", "001101", "101100", "011100", "010111",
    "011011", "100011", "010011", "110010", "001011", "101010", "011010", "111010",
    "110011", "100110", "010110", "110110", "001110", "101110", "011110", "101011",
)
_3B4B_RD_MINUS = ("1011", "1001", "0101", "1100", "1101", "1010", "0110", "1110")
_A7_RD_MINUS = "0111"

# D.x.A7 的使用条件（按 6b 之后的 RD）
_A7_WHEN_MINUS = frozenset({17, 18, 20})
_A7_WHEN_PLUS = frozenset({11, 13, 14})

GROUP_BITS = 10
MAX_RUN_LENGTH = 5


def _complement(code: str) -> str:
    return "".join("1" if c == "0" else "0" for c in code)


def _pick(code_minus: str, rd: int, always_flip: bool = False) -> str:
    """按当前 RD 选列：不平衡码字（及 D.7 / D.x.3 这类特例）在 RD+ 时取补"""
    unbalanced = code_minus.count("1") * 2 != len(code_minus)
    if rd > 0 and (unbalanced or always_flip):
        return _complement(code_minus)
    return code_minus


def _next_rd(code: str, rd: int) -> int:
    ones = code.count("1")
    if ones * 2 == len(code):
        return rd
    return 1 if ones * 2 > len(code) else -1


def _encode_symbol(byte: int, rd: int) -> Tuple[str, int]:
    x, y = byte & 0x1F, byte >> 5
    six = _pick(_5B6B_RD_MINUS[x], rd, always_flip=(x == 7))
    rd = _next_rd(six, rd)
    use_a7 = y == 7 and ((rd < 0 and x in _A7_WHEN_MINUS) or (rd > 0 and x in _A7_WHEN_PLUS))
    four = _pick(_A7_RD_MINUS if use_a7 else _3B4B_RD_MINUS[y], rd, always_flip=(y == 3))
    return six + four, _next_rd(four, rd)


def _build_tables():
    # 下标 0 表示 RD−，1 表示 RD+
    codes = np.zeros((2, 256), dtype=np.uint16)
    next_rd = np.zeros((2, 256), dtype=np.int8)
    decode = np.full((2, 1 << GROUP_BITS), -1, dtype=np.int16)
    for side, rd in enumerate((-1, 1)):
        for byte in range(256):
            word, rd_out = _encode_symbol(byte, rd)
            codes[side, byte] = int(word, 2)
            next_rd[side, byte] = rd_out
            decode[side, int(word, 2)] = byte
    return codes, next_rd, decode


_CODES, _NEXT_RD, _DECODE = _build_tables()
_WEIGHTS = (1 << np.arange(GROUP_BITS - 1, -1, -1)).astype(np.uint16)


def _side(rd: int) -> int:
    if rd not in (-1, 1):
        raise DomainError(f"必须是 -1 或 +1，当前为 {rd}", field="initial_disparity")
    return 0 if rd < 0 else 1


@dataclass
class LineCodeBlock:
    payload: bytes
    encoded: np.ndarray
    running_disparity_trace: np.ndarray
    initial_disparity: int = -1

    @property
    def final_disparity(self) -> int:
        if self.running_disparity_trace.size == 0:
            return self.initial_disparity
        return int(self.running_disparity_trace[-1])

    def __len__(self) -> int:
        return len(self.payload)


def _as_bytes(payload: Union[bytes, bytearray, Sequence[int], np.ndarray]) -> bytes:
    if isinstance(payload, (bytes, bytearray)):
        return bytes(payload)
    array = np.asarray(payload)
    if array.size and (array.min() < 0 or array.max() > 255):
        raise DomainError("字节值必须在 0..255 内", field="payload")
    return array.astype(np.uint8).tobytes()


def encode_8b10b(payload: Union[bytes, Sequence[int], np.ndarray], initial_disparity: int = -1) -> LineCodeBlock:
    """数据字节 → 10 位码组比特流"""
    data = _as_bytes(payload)
    side = _side(initial_disparity)
    words = np.empty(len(data), dtype=np.uint16)
    trace = np.empty(len(data), dtype=np.int8)
    codes = _CODES.tolist()
    next_rd = _NEXT_RD.tolist()
    for i, byte in enumerate(data):
        words[i] = codes[side][byte]
        rd = next_rd[side][byte]
        trace[i] = rd
        side = 0 if rd < 0 else 1
    bits = ((words[:, np.newaxis] & _WEIGHTS) > 0).astype(np.uint8).ravel()
    return LineCodeBlock(payload=data, encoded=bits, running_disparity_trace=trace,
                         initial_disparity=initial_disparity)


def _groups(bits: Union[Sequence[int], np.ndarray]) -> np.ndarray:
    array = np.asarray(bits, dtype=np.uint8)
    if array.size % GROUP_BITS:
        raise DomainError(f"比特数 {array.size} 不是 {GROUP_BITS} 的整数倍", field="bits")
    if array.size and array.max() > 1:
        raise DomainError("比特值只能是 0 或 1", field="bits")
    return array.reshape(-1, GROUP_BITS).astype(np.uint16) @ _WEIGHTS


def _fallback_rd(word: int, rd: int) -> int:
    ones = bin(word).count("1")
    if ones == GROUP_BITS // 2:
        return rd
    return 1 if ones > GROUP_BITS // 2 else -1


def decode_8b10b(bits: Union[Sequence[int], np.ndarray], initial_disparity: int = -1) -> bytes:
    """10 位码组 → 字节；遇到非法码组或 RD 违例抛 DecodeError（带码组序号）"""
    side = _side(initial_disparity)
    table = _DECODE.tolist()
    next_rd = _NEXT_RD.tolist()
    out = bytearray()
    for index, word in enumerate(_groups(bits).tolist()):
        byte = table[side][word]
        if byte < 0:
            kind = "disparity" if table[1 - side][word] >= 0 else "invalid-code"
            raise DecodeError(f"码组 {word:010b} 无法解码", index=index, kind=kind)
        out.append(byte)
        side = 0 if next_rd[side][byte] < 0 else 1
    return bytes(out)


def decode_8b10b_lenient(bits: Union[Sequence[int], np.ndarray],
                         initial_disparity: int = -1) -> Tuple[List[Optional[int]], List[DecodeError]]:
    """不中断的解码：非法码组记为 None，RD 违例仍按另一列解码；返回 (字节列表, 错误列表)"""
    side = _side(initial_disparity)
    table = _DECODE.tolist()
    next_rd = _NEXT_RD.tolist()
    decoded: List[Optional[int]] = []
    errors: List[DecodeError] = []
    for index, word in enumerate(_groups(bits).tolist()):
        rd = -1 if side == 0 else 1
        byte = table[side][word]
        if byte >= 0:
            decoded.append(byte)
            side = 0 if next_rd[side][byte] < 0 else 1
            continue
        other = table[1 - side][word]
        if other >= 0:
            errors.append(DecodeError("RD 违例", index=index, kind="disparity"))
            decoded.append(other)
            side = 0 if next_rd[1 - side][other] < 0 else 1
        else:
            errors.append(DecodeError(f"码组 {word:010b} 不在码表中", index=index, kind="invalid-code"))
            decoded.append(None)
            side = 0 if _fallback_rd(word, rd) < 0 else 1
    return decoded, errors


def count_byte_errors(bits: Union[Sequence[int], np.ndarray], payload: bytes,
                      initial_disparity: int = -1) -> int:
    """解码后与发送字节不一致（含无法解码）的字节数"""
    decoded, _ = decode_8b10b_lenient(bits, initial_disparity)
    if len(decoded) != len(payload):
        raise DomainError(f"码组数 {len(decoded)} 与字节数 {len(payload)} 不一致", field="payload")
    return sum(1 for got, sent in zip(decoded, payload) if got != sent)


def max_run_length(bits: Union[Sequence[int], np.ndarray]) -> int:
    """最长连续相同比特数"""
    array = np.asarray(bits, dtype=np.int8)
    if array.size == 0:
        return 0
    edges = np.flatnonzero(np.diff(array)) + 1
    bounds = np.concatenate(([0], edges, [array.size]))
    return int(np.max(np.diff(bounds)))


def running_digital_sum(bits: Union[Sequence[int], np.ndarray]) -> np.ndarray:
    """累计 (1 的个数 − 0 的个数)"""
    array = np.asarray(bits, dtype=np.int64)
    return np.cumsum(2 * array - 1)


__all__ = [
    'LineCodeBlock', 'encode_8b10b', 'decode_8b10b', 'decode_8b10b_lenient',
    'count_byte_errors', 'max_run_length', 'running_digital_sum', 'GROUP_BITS', 'MAX_RUN_LENGTH',
]
