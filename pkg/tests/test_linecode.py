#!/usr/bin/env python3
"""
8b/10b 线路编码测试
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import unittest

import numpy as np

from receiver.core.linecode import (
    GROUP_BITS, MAX_RUN_LENGTH, count_byte_errors, decode_8b10b, decode_8b10b_lenient, encode_8b10b,
    max_run_length, running_digital_sum,
)
from utils import DecodeError, DomainError


def bits_of(code: str) -> np.ndarray:
    return np.array([int(c) for c in code], dtype=np.uint8)


def code_of(bits) -> str:
    return "".join(str(int(b)) for b in bits)


class TestEncode(unittest.TestCase):
    """编码表与直流平衡"""

    def test_known_codes(self):
        self.assertEqual(code_of(encode_8b10b([0x00], -1).encoded), "1001110100")
        self.assertEqual(code_of(encode_8b10b([0x00], 1).encoded), "0110001011")

    def test_all_bytes_both_disparities(self):
        for rd in (-1, 1):
            for byte in range(256):
                block = encode_8b10b([byte], rd)
                self.assertEqual(block.encoded.size, GROUP_BITS)
                self.assertEqual(decode_8b10b(block.encoded, rd), bytes([byte]))
                ones = int(block.encoded.sum())
                self.assertIn(ones, (4, 5, 6))

    def test_run_length_and_rds(self):
        rng = np.random.default_rng(42)
        payload = rng.integers(0, 256, size=1_000_000).tobytes()
        block = encode_8b10b(payload)
        self.assertEqual(block.encoded.size, GROUP_BITS * len(payload))
        self.assertLessEqual(max_run_length(block.encoded), MAX_RUN_LENGTH)

        rds = running_digital_sum(block.encoded)
        self.assertLessEqual(int(np.max(np.abs(rds))), 5)
        boundaries = rds[GROUP_BITS - 1::GROUP_BITS]
        self.assertTrue(set(np.unique(boundaries).tolist()) <= {0, 2})
        self.assertTrue(np.all(block.running_disparity_trace == np.where(boundaries == 0, -1, 1)))

    def test_worst_case_payloads(self):
        for value in (0x00, 0xFF, 0x1C, 0x7C, 0xFC, 0x55, 0xAA):
            block = encode_8b10b(bytes([value]) * 200)
            self.assertLessEqual(max_run_length(block.encoded), MAX_RUN_LENGTH)
            self.assertEqual(decode_8b10b(block.encoded), bytes([value]) * 200)

    def test_empty_payload(self):
        block = encode_8b10b(b"")
        self.assertEqual(block.encoded.size, 0)
        self.assertEqual(block.final_disparity, -1)
        self.assertEqual(decode_8b10b(block.encoded), b"")

    def test_final_disparity_chains(self):
        first = encode_8b10b(b"hello")
        second = encode_8b10b(b"world", first.final_disparity)
        joined = np.concatenate([first.encoded, second.encoded])
        self.assertEqual(decode_8b10b(joined), b"helloworld")

    def test_bad_inputs(self):
        with self.assertRaises(DomainError) as ctx:
            encode_8b10b(b"a", initial_disparity=0)
        self.assertEqual(ctx.exception.field, "initial_disparity")
        with self.assertRaises(DomainError):
            encode_8b10b([300])


class TestDecode(unittest.TestCase):
    """解码错误定位"""

    def test_disparity_error(self):
        with self.assertRaises(DecodeError) as ctx:
            decode_8b10b(bits_of("0110001011"), -1)
        self.assertEqual(ctx.exception.kind, "disparity")
        self.assertEqual(ctx.exception.index, 0)
        self.assertEqual(ctx.exception.field, "bits")

    def test_invalid_code_index(self):
        good = encode_8b10b(b"ab").encoded
        bits = np.concatenate([good, np.zeros(GROUP_BITS, dtype=np.uint8)])
        with self.assertRaises(DecodeError) as ctx:
            decode_8b10b(bits)
        self.assertEqual(ctx.exception.kind, "invalid-code")
        self.assertEqual(ctx.exception.index, 2)

    def test_length_not_multiple_of_group(self):
        with self.assertRaises(DomainError) as ctx:
            decode_8b10b(np.zeros(15, dtype=np.uint8))
        self.assertEqual(ctx.exception.field, "bits")

    def test_lenient_continues(self):
        bits = encode_8b10b(b"xyz").encoded.copy()
        bits[GROUP_BITS:2 * GROUP_BITS] = 0
        decoded, errors = decode_8b10b_lenient(bits)
        self.assertEqual(decoded[0], ord("x"))
        self.assertIsNone(decoded[1])
        self.assertEqual(len(decoded), 3)
        # 坏码组之后 RD 可能失步，第三个码组按另一列仍能解出
        self.assertEqual(decoded[2], ord("z"))
        self.assertEqual(errors[0].index, 1)
        self.assertEqual(errors[0].kind, "invalid-code")

    def test_count_byte_errors(self):
        payload = bytes(range(64))
        bits = encode_8b10b(payload).encoded.copy()
        self.assertEqual(count_byte_errors(bits, payload), 0)
        bits[3] ^= 1
        bits[GROUP_BITS * 40 + 7] ^= 1
        self.assertGreaterEqual(count_byte_errors(bits, payload), 2)
        with self.assertRaises(DomainError):
            count_byte_errors(bits, payload[:10])


def test_max_run_length_helper():
    """游程统计"""
    assert max_run_length([]) == 0
    assert max_run_length([1]) == 1
    assert max_run_length([0, 0, 1, 1, 1, 0]) == 3
    assert running_digital_sum([1, 1, 0]).tolist() == [1, 2, 1]


if __name__ == "__main__":
    test_max_run_length_helper()
    unittest.main()
