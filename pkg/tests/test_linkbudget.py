#!/usr/bin/env python3
"""
链路预算测试：路径损耗、灵敏度公式、Eb/N0 换算、OOK 所需 SNR
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math
import unittest

from receiver.core.types import Detector, LinkParams
from receiver.linkbudget import (
    ebn0_from_snr, fspl, relaxed_sensitivity_target, required_sensitivity, required_snr_ook,
    sensitivity, snr_from_ebn0,
)
from utils import DomainError


class TestPathLoss(unittest.TestCase):
    """自由空间路径损耗"""

    def test_medradio_distance(self):
        self.assertAlmostEqual(fspl(403.5e6, 3.0), 34.11, delta=0.05)

    def test_ten_times_distance_adds_20_db(self):
        for d in (0.5, 3.0, 17.0):
            self.assertAlmostEqual(fspl(403.5e6, 10 * d) - fspl(403.5e6, d), 20.0, places=9)

    def test_increasing_in_both_arguments(self):
        self.assertLess(fspl(401e6, 3.0), fspl(406e6, 3.0))
        self.assertLess(fspl(403.5e6, 2.0), fspl(403.5e6, 2.1))

    def test_rejects_non_positive(self):
        with self.assertRaises(DomainError) as ctx:
            fspl(403.5e6, 0.0)
        self.assertEqual(ctx.exception.field, "distance")
        with self.assertRaises(DomainError):
            fspl(-1.0, 3.0)

    def test_required_sensitivity(self):
        link = LinkParams()
        self.assertAlmostEqual(required_sensitivity(link), -16.0 - fspl(403.5e6, 3.0), places=12)
        # 额外损耗显式给出
        self.assertAlmostEqual(required_sensitivity(link, extra_loss=13.9), -64.0, delta=0.05)


class TestSensitivity(unittest.TestCase):
    """-174 + 10log10(BW) + SNR + NF"""

    def test_compliant_endpoint(self):
        self.assertAlmostEqual(sensitivity(300e3, 13.0, 23.2).sensitivity, -83.0, delta=0.1)

    def test_high_rate_endpoint(self):
        self.assertAlmostEqual(sensitivity(10e6, 13.0, 21.0).sensitivity, -70.0, delta=0.1)

    def test_thermal_floor(self):
        self.assertEqual(sensitivity(1.0, 0.0, 0.0).sensitivity, -174.0)

    def test_unit_slope_in_nf(self):
        base = sensitivity(300e3, 12.8, 10.0).sensitivity
        self.assertAlmostEqual(sensitivity(300e3, 12.8, 13.5).sensitivity - base, 3.5, places=12)

    def test_margin_against_link(self):
        report = sensitivity(300e3, 12.8, 10.0, link_sensitivity=-64.0)
        self.assertAlmostEqual(report.margin_vs_link, -64.0 - report.sensitivity, places=12)
        self.assertGreater(report.margin_vs_link, 0.0)

    def test_zero_bandwidth(self):
        with self.assertRaises(DomainError):
            sensitivity(0.0, 12.8, 10.0)


def test_ebn0_conversion():
    """Eb/N0 ↔ SNR"""
    assert snr_from_ebn0(10.0, 300e3, 300e3) == 10.0
    assert abs(snr_from_ebn0(10.0, 2.0, 1.0) - 13.01) < 0.01
    assert abs(snr_from_ebn0(13.0, 1.0, 2.0) - 9.99) < 0.01
    for snr in (-3.0, 0.0, 12.81, 40.0):
        back = snr_from_ebn0(ebn0_from_snr(snr, 1e6, 3e5), 1e6, 3e5)
        assert abs(back - snr) < 1e-12

    # R·Eb 固定时灵敏度与 (R, BW) 的划分无关
    a = sensitivity(300e3, snr_from_ebn0(10.0, 300e3, 300e3), 5.0).sensitivity
    b = sensitivity(600e3, snr_from_ebn0(10.0, 300e3, 600e3), 5.0).sensitivity
    assert abs(a - b) < 1e-9

    try:
        snr_from_ebn0(10.0, 0.0, 1.0)
    except DomainError as e:
        assert e.field == "data_rate"
    else:
        raise AssertionError("data_rate = 0 应该报错")


class TestRequiredSnr(unittest.TestCase):
    """OOK 在目标误码率下所需的 SNR"""

    def test_coherent_anchor(self):
        self.assertAlmostEqual(required_snr_ook(1e-3, Detector.COHERENT), 12.81, delta=0.05)

    def test_envelope_bracket(self):
        snr = required_snr_ook(1e-3, Detector.ENVELOPE)
        self.assertGreaterEqual(snr, 12.8)
        self.assertLessEqual(snr, 15.0)

    def test_strictly_decreasing_in_ber_target(self):
        for detector in Detector:
            values = [required_snr_ook(p, detector) for p in (1e-6, 1e-4, 1e-3, 1e-2, 0.1)]
            for hi, lo in zip(values, values[1:]):
                self.assertGreater(hi, lo)

    def test_near_half_goes_to_minus_infinity(self):
        self.assertLess(required_snr_ook(0.5 - 1e-9), -100.0)

    def test_out_of_range(self):
        for bad in (0.0, 0.5, 0.7, -1e-3):
            with self.assertRaises(DomainError) as ctx:
                required_snr_ook(bad)
            self.assertEqual(ctx.exception.field, "ber_target")

    def test_relaxed_target(self):
        # 10 Mbps，参考 NF 23.2 dB
        self.assertAlmostEqual(relaxed_sensitivity_target(10e6, 23.2), -68.0, delta=0.05)
        self.assertTrue(math.isfinite(relaxed_sensitivity_target(300e3, 23.2, detector=Detector.ENVELOPE)))


if __name__ == "__main__":
    unittest.main()
