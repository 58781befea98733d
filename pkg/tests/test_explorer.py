#!/usr/bin/env python3
"""
设计空间探索测试：单点评估、扫描、Pareto、最低功耗优化、能耗曲线
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math
import unittest

from config_loader import CalibrationConfig, ExplorerConfig, LimitsConfig
from receiver.core.cache_manager import EvaluationCache
from receiver.core.types import DesignPoint, LnaDesign, MixerDesign, Objective, SweepSpec, replace
from receiver.explorer import (
    BREAKDOWN_KEYS, apply_path, cache_stats, clear_cache, compare_to_reference, configure_cache,
    default_point, default_space, energy_per_bit, energy_per_bit_curve, evaluate_cached, evaluate_design,
    grid_size, optimize_min_power, pareto_front, point_value, power_breakdown_report, sweep,
)
from utils import DesignError, DomainError


class TestEvaluate(unittest.TestCase):
    """单点评估"""

    def test_default_point(self):
        metrics = evaluate_design(default_point())
        self.assertEqual(set(metrics.breakdown), set(BREAKDOWN_KEYS))
        self.assertAlmostEqual(sum(metrics.breakdown.values()), metrics.total_power, delta=1e-15)
        self.assertAlmostEqual(metrics.breakdown["lna"], 1.2e-6, delta=1e-9)
        self.assertAlmostEqual(metrics.breakdown["divider_nlo"], 18.16e-6, delta=0.01e-6)
        self.assertAlmostEqual(metrics.breakdown["mixer_drive"], 4.035e-6, delta=0.01e-6)
        self.assertAlmostEqual(metrics.energy_per_bit, metrics.total_power / 300e3, delta=1e-18)
        self.assertTrue(metrics.feasible)
        self.assertGreater(metrics.source_resistance, 1000.0)

    def test_lna_out_of_range_names_block(self):
        point = replace(default_point(), lna=LnaDesign(gate_bias=0.6))
        with self.assertRaises(DesignError) as ctx:
            evaluate_design(point)
        self.assertEqual(ctx.exception.block, "lna")
        self.assertEqual(ctx.exception.field, "gate_bias")

    def test_bandwidth_shortfall_is_infeasible(self):
        metrics = evaluate_design(replace(default_point(), data_rate=10e6))
        self.assertFalse(metrics.feasible)
        self.assertIn("LNA", metrics.reason)

    def test_cache_hits(self):
        cache = EvaluationCache(max_size=16)
        first = evaluate_cached(default_point(), cache=cache)
        second = evaluate_cached(default_point(), cache=cache)
        self.assertIs(first, second)
        self.assertEqual((cache.hits, cache.misses), (1, 1))

    def test_breakdown_report(self):
        report = power_breakdown_report(default_point())
        self.assertAlmostEqual(sum(report.fractions.values()), 1.0, places=12)
        self.assertGreater(report.fractions["divider_nlo"], 0.5)


    def test_calibrated_switch_resistance(self):
        base = evaluate_design(default_point())
        conservative = evaluate_design(default_point(), CalibrationConfig(rsw_unit=2e-4))
        self.assertGreater(conservative.mixer_nf, base.mixer_nf)
        # 设计点显式给出 rsw_unit 时不受标定影响
        pinned = replace(default_point(), mixer=MixerDesign(rsw_unit=1e-4))
        self.assertAlmostEqual(evaluate_design(pinned, CalibrationConfig(rsw_unit=2e-4)).mixer_nf,
                               base.mixer_nf, places=12)

    def test_wider_lna_raises_lna_fraction(self):
        point = default_point()
        wide = replace(point, lna=replace(point.lna, width_p=10 * point.lna.width_p,
                                          width_n=10 * point.lna.width_n))
        narrow_m, wide_m = evaluate_design(point), evaluate_design(wide)
        # 关断管反馈下 R_out 近似 ro，带宽约 ×10
        self.assertGreater(wide_m.lna_bandwidth / narrow_m.lna_bandwidth, 9.0)
        self.assertLess(wide_m.lna_bandwidth / narrow_m.lna_bandwidth, 10.5)
        before = power_breakdown_report(point).fractions["lna"]
        after = power_breakdown_report(wide).fractions["lna"]
        self.assertGreater(after, before)

    def test_sensitivity_tracks_system_nf(self):
        point = default_point()
        a = evaluate_design(apply_path(point, "mixer.switch_width", 5e-6))
        b = evaluate_design(apply_path(point, "mixer.switch_width", 20e-6))
        self.assertNotAlmostEqual(a.system_nf, b.system_nf, places=6)
        self.assertAlmostEqual(a.sensitivity - b.sensitivity, a.system_nf - b.system_nf, delta=1e-9)
        lossy = evaluate_design(point, CalibrationConfig(implementation_loss_db=3.0))
        self.assertAlmostEqual(lossy.sensitivity - evaluate_design(point).sensitivity, 3.0, delta=1e-9)

class TestSweep(unittest.TestCase):
    """参数路径与网格扫描"""

    def test_apply_path(self):
        point = default_point()
        sized = apply_path(point, "lna.size", 20e-6)
        self.assertEqual((sized.lna.width_n, sized.lna.width_p), (20e-6, 40e-6))
        self.assertEqual(point_value(sized, "lna.size"), 20e-6)
        self.assertEqual(apply_path(point, "data_rate", 1e6).data_rate, 1e6)
        self.assertEqual(apply_path(point, "mixer.switch_width", 5e-6).mixer.switch_width, 5e-6)
        self.assertEqual(point.lna.width_n, 5e-6)
        for bad in ("radio.gain", "lna.nothing"):
            with self.assertRaises(DomainError):
                apply_path(point, bad, 1.0)

    def test_row_order_and_inline_failure(self):
        spec = SweepSpec(axes={"lna.gate_bias": [0.45, 0.50], "mixer.switch_width": [1e-6, 10e-6]})
        rows = sweep(spec, cache=EvaluationCache(max_size=0))
        self.assertEqual(grid_size(spec), 4)
        self.assertEqual([r.index for r in rows], [0, 1, 2, 3])
        self.assertEqual([tuple(r.values.values()) for r in rows],
                         [(0.45, 1e-6), (0.45, 10e-6), (0.50, 1e-6), (0.50, 10e-6)])
        # 1 µm 开关电阻 100 Ω 不小于源阻抗，原位记录失败
        self.assertFalse(rows[0].ok)
        self.assertIn("source_impedance", rows[0].error)
        self.assertTrue(rows[1].ok)
        flat = rows[0].flat()
        self.assertIsNone(flat["total_power"])
        self.assertEqual(flat["lna.gate_bias"], 0.45)

    def test_zin_sweep_minimum_power_at_highest_zin(self):
        spec = SweepSpec(axes={"lna.gate_bias": [0.45, 0.50, 0.55], "lna.zin_target": [1000.0, 2000.0, 5000.0]})
        rows = sweep(spec, cache=EvaluationCache(max_size=0))
        self.assertTrue(all(r.ok for r in rows), [r.error for r in rows if not r.ok])
        for bias in (0.45, 0.50, 0.55):
            group = [r for r in rows if r.values["lna.gate_bias"] == bias]
            cheapest = min(group, key=lambda r: r.metrics.breakdown["lna"])
            self.assertEqual(cheapest.values["lna.zin_target"], 5000.0)

    def test_grid_limit(self):
        spec = SweepSpec(axes={"lna.gate_bias": [0.45, 0.50], "lna.size": [5e-6, 10e-6]})
        with self.assertRaises(DomainError):
            sweep(spec, limits=LimitsConfig(max_grid_size=3))
        with self.assertRaises(DomainError):
            grid_size(SweepSpec(axes={}))


class TestPareto(unittest.TestCase):
    """非支配点"""

    def test_power_sensitivity(self):
        points = [
            {"total_power": 1.0, "sensitivity": -80.0},
            {"total_power": 2.0, "sensitivity": -85.0},
            {"total_power": 3.0, "sensitivity": -82.0},
            {"total_power": 1.0, "sensitivity": -80.0},
        ]
        front = pareto_front(points, [Objective(key="total_power"), Objective(key="sensitivity")])
        self.assertEqual(front, [0, 3, 1])

    def test_max_direction_and_metrics(self):
        points = [{"a": 1.0, "b": 5.0}, {"a": 2.0, "b": 6.0}, {"a": 2.0, "b": 4.0}]
        self.assertEqual(pareto_front(points, [("a", "min"), ("b", "max")]), [0, 1])

        metrics = [evaluate_design(replace(default_point(), lna=replace(default_point().lna, gate_bias=b)))
                   for b in (0.45, 0.55)]
        front = pareto_front(metrics, [{"key": "total_power"}, {"key": "lna"}])
        self.assertEqual(front, [0])

    def test_errors(self):
        with self.assertRaises(DomainError):
            pareto_front([], [Objective(key="x")])
        with self.assertRaises(DomainError):
            pareto_front([{"x": 1.0}], [Objective(key="y")])


class TestOptimize(unittest.TestCase):
    """最低功耗优化"""

    def test_compliant_optimum(self):
        result = optimize_min_power({"sensitivity": -83.0, "data_rate": 300e3}, default_space())
        self.assertTrue(result.feasible)
        m = result.metrics
        print(f"300 kbps 最优: {m.total_power * 1e6:.2f} µW, {m.energy_per_bit * 1e12:.1f} pJ/b, "
              f"NF {m.system_nf:.2f} dB, 灵敏度 {m.sensitivity:.1f} dBm")
        self.assertEqual(result.point.lna.gate_bias, 0.45)
        self.assertEqual(result.point.lna.width_n, 5e-6)
        self.assertEqual(result.point.mixer.switch_width, 5e-6)
        self.assertAlmostEqual(m.total_power, 21.38e-6, delta=0.05e-6)
        self.assertAlmostEqual(m.energy_per_bit, 71.3e-12, delta=0.2e-12)
        self.assertLess(m.total_power, 50e-6)
        self.assertLess(m.energy_per_bit, 100e-12)
        self.assertLessEqual(m.sensitivity, -83.0)
        self.assertAlmostEqual(m.system_nf, 13.92, delta=0.1)

        row = compare_to_reference(m)
        self.assertEqual(row["reference"], "medradio-compliant")
        self.assertAlmostEqual(row["divider_fraction"], 0.849, delta=0.005)

    def test_high_rate_optimum(self):
        result = optimize_min_power({"sensitivity": -68.0, "data_rate": 10e6}, default_space())
        self.assertTrue(result.feasible)
        self.assertEqual(result.point.lna.width_n, 80e-6)
        self.assertGreaterEqual(result.metrics.lna_bandwidth, 10e6)
        self.assertAlmostEqual(result.metrics.breakdown["lna"], 19.2e-6, delta=0.01e-6)
        self.assertAlmostEqual(result.metrics.energy_per_bit, 3.94e-12, delta=0.02e-12)

    def test_unreachable_target(self):
        result = optimize_min_power({"sensitivity": -200.0}, default_space())
        self.assertFalse(result.feasible)
        self.assertIsNotNone(result.point)
        self.assertGreater(result.shortfall, 0.0)
        self.assertTrue(result.reason)

    def test_energy_curve_decreasing(self):
        curve = energy_per_bit_curve([1e5, 3e5, 1e6, 1e7], default_space())
        self.assertTrue(all(p.feasible for p in curve))
        energies = [p.energy_per_bit for p in curve]
        self.assertTrue(all(b < a for a, b in zip(energies, energies[1:])))
        self.assertAlmostEqual(curve[2].total_power, 22.6e-6, delta=0.1e-6)

    def test_energy_curve_rejects_unsorted(self):
        with self.assertRaises(DomainError):
            energy_per_bit_curve([1e6, 3e5], default_space())
        with self.assertRaises(DomainError):
            energy_per_bit_curve([], default_space())


def test_configure_cache_size():
    """explorer.cache_size 决定全局评估缓存容量"""
    try:
        configure_cache(2)
        assert cache_stats()["max_size"] == 2
        clear_cache()
        for rate in (1e5, 2e5, 3e5):
            evaluate_cached(replace(default_point(), data_rate=rate))
        assert cache_stats()["total_entries"] == 2
    finally:
        configure_cache(ExplorerConfig().cache_size)
        clear_cache()


def test_reference_lookup():
    """参考设计对照"""
    assert math.isclose(energy_per_bit(34e-6, 10e6), 3.4e-12)
    assert math.isclose(energy_per_bit(29.2e-6, 300e3), 97.33e-12, rel_tol=1e-3)
    metrics = evaluate_design(replace(default_point(), data_rate=8e6))
    assert compare_to_reference(metrics)["reference"] == "high-rate"
    assert math.isclose(compare_to_reference(metrics, "high-rate")["ref_total_power"], 34e-6)
    try:
        compare_to_reference(metrics, "unknown")
    except DomainError:
        pass
    else:
        raise AssertionError("未知参考设计应该报错")


if __name__ == "__main__":
    test_configure_cache_size()
    test_reference_lookup()
    unittest.main()
