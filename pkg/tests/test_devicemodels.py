#!/usr/bin/env python3
"""
前端器件模型测试：LNA 匹配与工作点、混频器噪声系数、分频器功耗、匹配网络、级联
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math
import unittest

import numpy as np

from config_loader import CalibrationConfig
from receiver.core.types import (
    DividerArch, DividerModel, Feedback, LnaDesign, LnaMode, MatchingNetwork, MatchTopology, MixerDesign,
    NfStage, replace,
)
from receiver.devicemodels import (
    cascade_nf, design_l_match, divider_power, lna_input_impedance, lna_input_impedance_k,
    lna_operating_point, matched_lna_design, matching_network_impedance, matching_transform,
    minimum_input_impedance, mixer_drive_power, mixer_noise_figure, size_lna_for_zin,
    solve_feedback_resistor, switch_resistance,
)
from utils import DomainError, InfeasibleError, RangeError

CAL = CalibrationConfig()
MODEL = CAL.transistor


class TestLnaMatching(unittest.TestCase):
    """输入阻抗两种写法与反馈电阻求解"""

    def test_two_forms_agree(self):
        rng = np.random.default_rng(7)
        for rf, gm, ro in rng.uniform([1.0, 1e-6, 1e2], [1e6, 1e-1, 1e6], size=(10_000, 3)):
            direct = lna_input_impedance(rf, gm, ro)
            via_k = lna_input_impedance_k(rf, gm, gm * ro)
            self.assertLessEqual(abs(direct - via_k), 1e-12 * abs(direct))

    def test_solve_examples(self):
        self.assertAlmostEqual(solve_feedback_resistor(50.0, 10.0 / 300.0, 10.0), 250.0, places=9)
        self.assertAlmostEqual(solve_feedback_resistor(1000.0, 5e-3, 10.0), 9000.0, places=9)
        self.assertAlmostEqual(solve_feedback_resistor(123.0, 1e-3, 0.0), 123.0, places=12)

    def test_solve_round_trip(self):
        for zin, gm, k in ((50.0, 0.04, 10.5), (200.0, 0.01, 8.0), (5000.0, 1e-4, 12.0)):
            rf = solve_feedback_resistor(zin, gm, k)
            self.assertLessEqual(abs(lna_input_impedance_k(rf, gm, k) - zin), 1e-9 * zin)

    def test_infeasible_reports_minimum(self):
        with self.assertRaises(InfeasibleError) as ctx:
            solve_feedback_resistor(1.0, 1e-3, 10.0)
        self.assertAlmostEqual(ctx.exception.limit, minimum_input_impedance(1e-3, 10.0))
        self.assertEqual(ctx.exception.field, "zin_target")


class TestLnaOperatingPoint(unittest.TestCase):
    """反相器 LNA 趋势模型"""

    def test_default_low_power_point(self):
        report = lna_operating_point(LnaDesign(bandwidth_limit=1e6), MODEL)
        self.assertAlmostEqual(report.power, 1.2e-6, delta=1e-12)
        self.assertLess(report.power, 50e-6)
        self.assertLessEqual(report.bandwidth, 1e6)

    def test_doubling_widths(self):
        base = LnaDesign()
        double = replace(base, width_p=2 * base.width_p, width_n=2 * base.width_n)
        a, b = lna_operating_point(base, MODEL), lna_operating_point(double, MODEL)
        self.assertAlmostEqual(b.power / a.power, 2.0, places=12)
        self.assertGreater(b.bandwidth, a.bandwidth)

    def test_large_device_matches_50_ohm(self):
        design = LnaDesign(width_p=600e-6, width_n=300e-6, gate_bias=0.55, mode=LnaMode.RF,
                           feedback=Feedback(kind="resistor"), zin_target=50.0)
        report = lna_operating_point(design, MODEL)
        self.assertAlmostEqual(report.zin, 50.0, places=6)
        self.assertGreater(report.power, 1e-3)

    def test_auto_size_for_50_ohm(self):
        report = lna_operating_point(matched_lna_design(50.0, 0.55), MODEL, CAL.lna_match_margin)
        self.assertAlmostEqual(report.zin, 50.0, places=6)
        self.assertAlmostEqual(report.width_p + report.width_n, 830e-6, delta=5e-6)
        self.assertAlmostEqual(report.power, 3.32e-3, delta=0.02e-3)

    def test_50_ohm_out_of_range_at_low_bias(self):
        with self.assertRaises(RangeError):
            size_lna_for_zin(50.0, 0.45, MODEL)

    def test_power_ordering_over_zin(self):
        # 匹配目标越低，功耗越高
        for bias in (0.45, 0.50, 0.55):
            powers = []
            for zin in (5000.0, 2000.0, 1000.0):
                powers.append(lna_operating_point(matched_lna_design(zin, bias), MODEL).power)
            self.assertLess(powers[0], powers[1])
            self.assertLess(powers[1], powers[2])

    def test_matched_targets_trade_bandwidth_not_noise(self):
        # 匹配目标越低：反馈电阻越小、带宽越宽，噪声系数基本不变
        for bias in (0.45, 0.50, 0.55):
            reports = [lna_operating_point(matched_lna_design(zin, bias), MODEL) for zin in (5000.0, 2000.0, 1000.0)]
            for high, low in zip(reports, reports[1:]):
                self.assertGreater(low.bandwidth, high.bandwidth)
                self.assertLess(low.rf_used, high.rf_used)
            nfs = [r.nf for r in reports]
            self.assertLess(max(nfs) - min(nfs), 1.0)

    def test_bias_outside_calibration(self):
        with self.assertRaises(RangeError) as ctx:
            lna_operating_point(LnaDesign(gate_bias=0.7), MODEL)
        self.assertEqual(ctx.exception.field, "gate_bias")

    def test_invalid_design_rejected(self):
        with self.assertRaises(ValueError):
            LnaDesign(mode=LnaMode.RF)
        with self.assertRaises(ValueError):
            LnaDesign(auto_size=True)


class TestMixer(unittest.TestCase):
    """混频器噪声系数与驱动功耗"""

    def test_noise_figure_endpoints(self):
        self.assertAlmostEqual(mixer_noise_figure(0.0, 50.0), 3.92, delta=0.01)
        self.assertAlmostEqual(mixer_noise_figure(5.0, 50.0), 4.79, delta=0.01)
        self.assertAlmostEqual(mixer_noise_figure(10.0, 500.0), 4.10, delta=0.01)

    def test_noise_figure_monotone(self):
        rsw_grid = np.linspace(0.0, 40.0, 20)
        rs_grid = np.linspace(50.0, 1000.0, 20)
        table = np.array([[mixer_noise_figure(rsw, rs) for rs in rs_grid] for rsw in rsw_grid])
        self.assertTrue(np.all(np.diff(table, axis=0) > 0))
        self.assertTrue(np.all(np.diff(table, axis=1)[1:] < 0))

    def test_noise_figure_pole(self):
        with self.assertRaises(DomainError) as ctx:
            mixer_noise_figure(50.0, 50.0)
        self.assertEqual(ctx.exception.field, "rsw")

    def test_switch_resistance(self):
        mixer = MixerDesign()
        self.assertAlmostEqual(switch_resistance(10e-6, mixer), 10.0)
        self.assertAlmostEqual(switch_resistance(20e-6, mixer), 5.0)

    def test_divider_power(self):
        circular = CAL.divider_model(DividerArch.CIRCULAR, 1.0)
        flip_flop = CAL.divider_model(DividerArch.FLIP_FLOP, 1.0)
        self.assertEqual(divider_power(circular, 0.0), 0.0)
        self.assertAlmostEqual(divider_power(circular, 800e6), 2 * divider_power(circular, 400e6))
        self.assertLess(divider_power(circular, 400e6), divider_power(flip_flop, 400e6))
        self.assertAlmostEqual(divider_power(circular, 403.5e6), 18.16e-6, delta=0.01e-6)
        ext = DividerModel(effective_switched_cap=5e-12, supply=1.0)
        self.assertAlmostEqual(divider_power(ext, 4e8), 2e-3)

    def test_drive_power_grows_while_nf_saturates(self):
        drive = []
        nf = []
        for width in (1e-6, 10e-6, 100e-6, 1e-3):
            mixer = MixerDesign(switch_width=width, rsw_unit=1e-5)
            drive.append(mixer_drive_power(mixer, mixer.lo_freq, CAL))
            nf.append(mixer_noise_figure(mixer.switch_resistance, mixer.source_impedance))
        self.assertTrue(all(b > a for a, b in zip(drive, drive[1:])))
        self.assertTrue(all(b < a for a, b in zip(nf, nf[1:])))
        self.assertLess(nf[-2] - nf[-1], 0.1)

    def test_drive_reduces_to_divider(self):
        mixer = MixerDesign(switch_width=1e-15, rsw_unit=1e-18)
        bare = divider_power(CAL.divider_model(mixer.divider_arch, mixer.supply), mixer.lo_freq)
        self.assertAlmostEqual(mixer_drive_power(mixer, mixer.lo_freq, CAL), bare, delta=1e-12)

    def test_external_load_option(self):
        mixer = MixerDesign()
        with_load = CAL.model_copy(update={"include_external_load": True})
        delta = mixer_drive_power(mixer, 4e8, with_load) - mixer_drive_power(mixer, 4e8, CAL)
        self.assertAlmostEqual(delta, 5e-12 * 4e8, delta=1e-9)


def test_matching_network():
    """L 匹配网络：升压、低频极限、退化网络"""
    z = matching_network_impedance(MatchingNetwork(), 403.5e6)
    print(f"默认匹配网络在 403.5 MHz: {z.real:.1f} {z.imag:+.1f}j Ω")
    assert z.real > 50.0
    assert abs(z.real - 4215.0) < 0.01 * 4215.0

    dc = matching_transform(50.0, 180e-9, 2e-12, 0.0)
    assert abs(dc - 50.0) < 1e-9

    omega = 2 * math.pi * 403.5e6
    tiny_c = matching_transform(50.0, 180e-9, 1e-24, 403.5e6)
    assert abs(tiny_c - complex(50.0, omega * 180e-9)) < 1e-6

    designed = design_l_match(50.0, 1000.0, 403.5e6)
    z = matching_network_impedance(designed, 403.5e6)
    assert abs(z.real - 1000.0) < 1e-6 * 1000.0
    assert abs(z.imag) < 1e-6 * 1000.0


def test_matching_topologies():
    """180 nH / 2 pF 两种接法：串 L 并 C 降压，串 C 并 L 升压"""
    low_pass = matching_transform(50.0, 180e-9, 2e-12, 403.5e6)
    assert abs(low_pass.real - 27.92) < 0.05
    assert abs(low_pass.imag + 341.93) < 0.05

    high_pass = matching_transform(50.0, 180e-9, 2e-12, 403.5e6, MatchTopology.SERIES_C_SHUNT_L)
    assert high_pass.real > 50.0
    assert abs(high_pass.real - 149.5) < 0.01 * 149.5
    assert abs(high_pass.imag + 318.4) < 0.01 * 318.4
    # 直流时并联电感短路
    assert matching_transform(50.0, 180e-9, 2e-12, 0.0, "series-c-shunt-l") == 0j

    network = MatchingNetwork(lm=180e-9, cm=2e-12, topology="series-c-shunt-l")
    assert network.topology is MatchTopology.SERIES_C_SHUNT_L
    assert matching_network_impedance(network, 403.5e6) == high_pass

    designed = design_l_match(50.0, 1000.0, 403.5e6, MatchTopology.SERIES_C_SHUNT_L)
    assert designed.topology is MatchTopology.SERIES_C_SHUNT_L
    z = matching_network_impedance(designed, 403.5e6)
    assert abs(z.real - 1000.0) < 1e-6 * 1000.0
    assert abs(z.imag) < 1e-6 * 1000.0


def test_cascade_nf():
    """Friis 级联"""
    assert abs(cascade_nf([NfStage(nf=4.1)]) - 4.1) < 1e-12
    value = cascade_nf([(4.10, -3.92), (10 * math.log10(2.0), 0.0)])
    assert abs(value - 7.02) < 0.01
    assert abs(cascade_nf([{"nf": 3.0, "gain": math.inf}, {"nf": 20.0}]) - 3.0) < 1e-12
    try:
        cascade_nf([])
    except DomainError as e:
        assert e.field == "stages"
    else:
        raise AssertionError("空级联应该报错")


if __name__ == "__main__":
    test_matching_network()
    test_matching_topologies()
    test_cascade_nf()
    unittest.main()
