# main.py - ulprx 命令行入口
# 子命令：link-budget / lna / mixer / npath-sim / ber / explore / report / serve

import argparse
import logging
import math
import shlex
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from config_loader import ConfigLoader
from receiver import TOOL_NAME, __version__
from receiver.core.report_writer import FORMATS, Provenance, ReportTable, parse_value, write_report
from receiver.core.types import Detector, DesignPoint, Feedback, LinkParams, LnaMode, OokParams, SweepSpec, replace
from receiver.explorer import configure_cache
from smart_logger import configure_root_logging, init_smart_logger, shutdown_smart_logger
from utils import ConfigError, DomainError
from worker_pool import worker_pool

logger = logging.getLogger("ulprx.cli")

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


# ============ 运行上下文 ============

@dataclass
class CommandContext:
    loader: ConfigLoader
    args: argparse.Namespace
    seed: int
    provenance: Provenance
    preset: Dict[str, Any]

    @property
    def calibration(self):
        return self.loader.get_calibration()

    @property
    def defaults(self):
        return self.loader.get_defaults()

    def option(self, name: str, fallback: Any = None) -> Any:
        """命令行参数优先，其次预设，最后 fallback"""
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        return self.preset.get(name, fallback)


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"无法解析数值列表: {text}") from e


def _axis(text: str):
    path, sep, values = text.partition("=")
    if not sep or not path or not values:
        raise argparse.ArgumentTypeError(f"轴格式应为 path=v1,v2,...: {text}")
    return path.strip(), [parse_value(v.strip()) for v in values.split(",")]


# ============ link-budget ============

def cmd_link_budget(ctx: CommandContext) -> ReportTable:
    from receiver.linkbudget import fspl, required_sensitivity, required_snr_ook, sensitivity

    base = ctx.defaults.link
    link = LinkParams(
        carrier_freq=ctx.option("freq", base.carrier_freq),
        distance=ctx.option("dist", base.distance),
        eirp=ctx.option("eirp", base.eirp),
        channel_bw=ctx.option("bw", base.channel_bw),
        data_rate=ctx.option("rate", base.data_rate),
        ber_target=ctx.option("ber", base.ber_target),
        detector=ctx.option("detector", base.detector),
    )
    needed = required_sensitivity(link, ctx.option("extra_loss", 0.0))
    snr = required_snr_ook(link.ber_target, link.detector)
    row: Dict[str, Any] = {
        "carrier_freq": link.carrier_freq, "distance": link.distance, "eirp": link.eirp,
        "fspl": fspl(link.carrier_freq, link.distance), "required_sensitivity": needed,
        "channel_bw": link.channel_bw, "ber_target": link.ber_target, "detector": link.detector,
        "snr_required": snr, "nf": None, "sensitivity": None, "margin": None,
    }
    nf = ctx.option("nf")
    if nf is not None:
        report = sensitivity(link.channel_bw, snr, nf, link_sensitivity=needed)
        row.update(nf=nf, sensitivity=report.sensitivity, margin=report.margin_vs_link)
    table = ReportTable(columns=list(row))
    table.add_row(row)
    return table


# ============ lna ============

LNA_COLUMNS = ["gate_bias", "zin_target", "width_p", "width_n", "power", "bandwidth",
               "flat_band_gain", "nf", "zin", "rf_used", "error"]


def _lna_row(design, ctx: CommandContext) -> Dict[str, Any]:
    from receiver.devicemodels import lna_operating_point

    cal = ctx.calibration
    row: Dict[str, Any] = {"gate_bias": design.gate_bias, "zin_target": design.zin_target, "error": ""}
    try:
        report = lna_operating_point(design, cal.transistor, cal.lna_match_margin)
    except DomainError as e:
        row["error"] = str(e)
        return row
    row.update(width_p=report.width_p, width_n=report.width_n, power=report.power,
               bandwidth=report.bandwidth, flat_band_gain=report.flat_band_gain, nf=report.nf,
               zin=report.zin, rf_used=report.rf_used)
    return row


def cmd_lna(ctx: CommandContext) -> ReportTable:
    from receiver.devicemodels import matched_lna_design

    table = ReportTable(columns=LNA_COLUMNS)
    biases = ctx.option("gate_biases")
    zins = ctx.option("zin_targets")
    if biases or zins:
        mode = LnaMode(ctx.option("mode", LnaMode.RF.value))
        for bias in biases or [ctx.defaults.lna.gate_bias]:
            for zin in zins or [50.0]:
                design = matched_lna_design(zin, bias, mode=mode, pn_ratio=ctx.calibration.pn_width_ratio)
                table.add_row(_lna_row(design, ctx))
        return table

    base = ctx.defaults.lna
    changes: Dict[str, Any] = {}
    for arg, name in (("bias", "gate_bias"), ("wp", "width_p"), ("wn", "width_n"),
                      ("load_cap", "load_cap"), ("supply", "supply"), ("bandwidth_limit", "bandwidth_limit")):
        if getattr(ctx.args, arg, None) is not None:
            changes[name] = getattr(ctx.args, arg)
    if ctx.args.mode is not None:
        changes["mode"] = LnaMode(ctx.args.mode)
    if ctx.args.rf is not None:
        changes["feedback"] = Feedback(kind="resistor", value=ctx.args.rf)
    if ctx.args.zin is not None:
        changes.update(feedback=Feedback(kind="resistor"), zin_target=ctx.args.zin, auto_size=ctx.args.auto_size)
    table.add_row(_lna_row(replace(base, **changes), ctx))
    return table


# ============ mixer ============

def cmd_mixer(ctx: CommandContext) -> ReportTable:
    from receiver.devicemodels import divider_power, mixer_drive_power, mixer_noise_figure

    cal = ctx.calibration
    if ctx.args.drive:
        base = ctx.defaults.mixer
        table = ReportTable(columns=["divider_arch", "lo_freq", "n_paths", "switch_width",
                                     "divider_power", "mixer_drive_power"])
        lo = ctx.option("lo", base.lo_freq)
        for width in ctx.option("switch_widths") or [base.switch_width]:
            for arch in cal.divider.effective_switched_cap:
                mixer = replace(base, divider_arch=arch, switch_width=width, lo_freq=lo)
                table.add_row([arch, lo, mixer.n_paths, width,
                               divider_power(cal.divider_model(arch, mixer.supply), lo),
                               mixer_drive_power(mixer, lo, cal)])
        return table

    table = ReportTable(columns=["rs", "rsw", "rsw_over_rs", "nf", "error"])
    for rs in ctx.option("rs") or [ctx.defaults.mixer.source_impedance]:
        for rsw in ctx.option("rsw") or [ctx.defaults.mixer.switch_resistance]:
            try:
                table.add_row([rs, rsw, rsw / rs, mixer_noise_figure(rsw, rs), ""])
            except DomainError as e:
                table.add_row([rs, rsw, rsw / rs, None, str(e)])
    return table


# ============ npath-sim ============

def _sim_mixer(ctx: CommandContext):
    base = ctx.defaults.mixer
    changes: Dict[str, Any] = {}
    for arg, name in (("paths", "n_paths"), ("duty", "duty"), ("rs", "source_impedance"),
                      ("cap", "baseband_cap"), ("lo", "lo_freq"), ("switch_width", "switch_width")):
        value = getattr(ctx.args, arg, None)
        if value is not None:
            changes[name] = value
    mixer = replace(base, **changes)
    if ctx.args.rsw is not None:
        mixer = replace(mixer, rsw_unit=ctx.args.rsw * mixer.switch_width)
    return mixer


def cmd_npath_sim(ctx: CommandContext) -> ReportTable:
    from receiver import npathsim
    from receiver.devicemodels import mixer_noise_figure

    settings = ctx.loader.get_npathsim_config()
    if ctx.args.oversampling is not None:
        settings = settings.model_copy(update={"oversampling": ctx.args.oversampling})
    limits = ctx.loader.get_limits()
    mixer = _sim_mixer(ctx)
    action = ctx.args.action
    estimate = npathsim.corner_frequency_estimate(mixer)

    if action == "nf":
        nf = npathsim.simulated_noise_figure(mixer, ctx.seed, settings)
        table = ReportTable(columns=["n_paths", "duty", "rs", "rsw", "nf_simulated", "nf_formula"])
        table.add_row([mixer.n_paths, mixer.duty, mixer.source_impedance, mixer.switch_resistance, nf,
                       mixer_noise_figure(mixer.switch_resistance, mixer.source_impedance)])
        return table

    if action == "corner":
        measured = npathsim.locate_corner(mixer, settings=settings)
        table = ReportTable(columns=["lo_freq", "corner_estimate", "corner_measured"])
        table.add_row([mixer.lo_freq, estimate, measured])
        return table

    offset = ctx.args.offset if ctx.args.offset is not None else min(estimate / 5.0, mixer.lo_freq / 100.0)
    f_rf = ctx.args.rf if ctx.args.rf is not None else mixer.lo_freq + offset
    tone = npathsim.Tone(freq=f_rf, amplitude=ctx.args.amplitude)
    if_offset = abs(f_rf - mixer.lo_freq) or offset
    duration = ctx.args.duration or npathsim._sweep_duration(mixer, if_offset, settings.settle_fraction)
    result = npathsim.simulate_npath(mixer, tone, duration, ctx.seed, settings=settings,
                                     max_samples=limits.max_sim_samples)

    if action == "waveform":
        header, data = npathsim.waveform_table(result, ctx.args.decimate)
        table = ReportTable(columns=header)
        table.rows = data.tolist()
        return table

    measurement = npathsim.measure_conversion(result, f_rf, mixer.lo_freq, settings.settle_fraction)
    table = ReportTable(columns=["n_paths", "lo_freq", "rf_freq", "if_freq", "gain", "image_rejection",
                                 "resolution", "corner_estimate", "window"])
    table.add_row([mixer.n_paths, mixer.lo_freq, f_rf, measurement.if_freq, measurement.gain,
                   measurement.image_rejection, measurement.resolution, estimate, measurement.window])
    return table


# ============ ber ============

BER_COLUMNS = ["snr_db", "bits", "errors", "ber", "ci_low", "ci_high", "detector", "seed"]


def cmd_ber(ctx: CommandContext) -> ReportTable:
    from receiver.berlab import analytic_ber, ber_sweep

    grid = ctx.args.snr or [float(s) for s in range(0, 17, 2)]
    if ctx.args.detector == "both":
        kinds = [Detector.COHERENT, Detector.ENVELOPE]
    else:
        kinds = [Detector(ctx.args.detector)]
    params = OokParams(samples_per_bit=ctx.args.samples_per_bit, detector=kinds[0],
                       bit_rate=ctx.defaults.data_rate)
    results = ber_sweep(grid, ctx.args.bits, params, ctx.seed,
                        block_bits=ctx.loader.get_limits().ber_block_bits, detectors=kinds)
    table = ReportTable(columns=BER_COLUMNS)
    extra = []
    for r in results:
        table.add_row([r.snr, r.bits_sent, r.bit_errors, r.ber_point, r.ci_low, r.ci_high, r.detector, r.seed])
        extra.append({"snr_db": r.snr, "detector": r.detector.value, "analytic": analytic_ber(r.snr, r.detector),
                      "bytes": r.bytes_sent, "byte_errors": r.byte_errors})
    table.meta["post_decode"] = extra
    return table


# ============ explore / report ============

def _space(ctx: CommandContext, rate: Optional[float] = None) -> SweepSpec:
    from receiver.explorer import default_space

    space = default_space(ctx.defaults, ctx.loader.get_explorer_config())
    if ctx.args.axis:
        space = replace(space, axes=dict(ctx.args.axis))
    if rate is not None:
        space = replace(space, fixed=replace(space.fixed, data_rate=rate))
    return space


def _target(ctx: CommandContext, rate: float) -> float:
    from receiver.linkbudget import relaxed_sensitivity_target

    target = ctx.option("target")
    if target is not None:
        return float(target)
    explorer_cfg = ctx.loader.get_explorer_config()
    if math.isclose(rate, explorer_cfg.compliant_rate):
        return explorer_cfg.compliant_target_dbm
    link = ctx.defaults.link
    return relaxed_sensitivity_target(rate, ctx.calibration.reference_nf_db, link.ber_target, link.detector)


def _design_columns(point: Optional[DesignPoint]) -> Dict[str, Any]:
    if point is None:
        return {"gate_bias": None, "width_p": None, "width_n": None, "switch_width": None}
    return {"gate_bias": point.lna.gate_bias, "width_p": point.lna.width_p,
            "width_n": point.lna.width_n, "switch_width": point.mixer.switch_width}


def cmd_explore(ctx: CommandContext) -> ReportTable:
    from receiver import explorer

    cal = ctx.calibration
    limits = ctx.loader.get_limits()
    action = ctx.option("action", "sweep")
    rate = ctx.option("rate", ctx.preset.get("data_rate"))

    if action in ("sweep", "pareto"):
        space = _space(ctx, rate)
        rows = explorer.sweep(space, limits, cal)
        ok = [r for r in rows if r.ok]
        front = set()
        if ok:
            objectives = space.objectives or [{"key": "total_power"}, {"key": "sensitivity"}]
            front = {ok[i].index for i in explorer.pareto_front([r.metrics for r in ok], objectives)}
        columns = list(space.axes) + list(explorer.METRIC_COLUMNS) + ["pareto", "error"]
        table = ReportTable(columns=columns)
        for r in rows:
            if action == "pareto" and r.index not in front:
                continue
            flat = r.flat()
            flat["pareto"] = r.index in front
            table.add_row(flat)
        return table

    if action == "optimize":
        space = _space(ctx)
        rate = rate or space.fixed.data_rate
        result = explorer.optimize_min_power({"sensitivity": _target(ctx, rate), "data_rate": rate},
                                             space, limits, cal)
        row = {"feasible_design": result.feasible, "target_sensitivity": result.target_sensitivity,
               "evaluated": result.evaluated, **_design_columns(result.point),
               **explorer.metrics_columns(result.metrics), "note": result.reason}
        table = ReportTable(columns=list(row))
        table.add_row(row)
        return table

    if action == "energy-curve":
        rates = ctx.option("rates") or ctx.loader.get_explorer_config().rates
        curve = explorer.energy_per_bit_curve(rates, _space(ctx), limits, cal)
        table = ReportTable(columns=["data_rate", "target_sensitivity", "energy_per_bit", "total_power",
                                     "lna", "divider_nlo", "mixer_drive", "feasible"])
        for p in curve:
            table.add_row([p.data_rate, p.target_sensitivity, p.energy_per_bit, p.total_power,
                           p.breakdown.get("lna"), p.breakdown.get("divider_nlo"),
                           p.breakdown.get("mixer_drive"), p.feasible])
        return table

    if action == "breakdown":
        space = _space(ctx)
        rate = rate or space.fixed.data_rate
        result = explorer.optimize_min_power({"sensitivity": _target(ctx, rate), "data_rate": rate},
                                             space, limits, cal)
        if result.point is None:
            raise DomainError(result.reason or "没有可评估的设计点", field="axes")
        report = explorer.power_breakdown_report(result.point, cal)
        table = ReportTable(columns=["block", "power", "fraction"])
        for block in explorer.BREAKDOWN_KEYS:
            table.add_row([block, report.breakdown[block], report.fractions[block]])
        table.meta.update(total_power=report.total_power, feasible_design=result.feasible,
                          data_rate=rate, **_design_columns(result.point))
        return table

    raise DomainError(f"未知动作 {action}", field="action")


def cmd_report(ctx: CommandContext) -> ReportTable:
    from receiver import explorer

    rate = ctx.option("rate", ctx.preset.get("data_rate", ctx.defaults.data_rate))
    space = _space(ctx)
    result = explorer.optimize_min_power({"sensitivity": _target(ctx, rate), "data_rate": rate},
                                         space, ctx.loader.get_limits(), ctx.calibration)
    if result.metrics is None:
        raise DomainError(result.reason or "没有可评估的设计点", field="axes")
    reference = ctx.option("reference") or (ctx.args.preset if ctx.args.preset in explorer.REFERENCE_DESIGNS else None)
    row = {"feasible_design": result.feasible, "target_sensitivity": result.target_sensitivity,
           **_design_columns(result.point), **explorer.compare_to_reference(result.metrics, reference)}
    table = ReportTable(columns=list(row))
    table.add_row(row)
    return table


# ============ serve ============

def cmd_serve(ctx: CommandContext) -> None:
    import uvicorn
    from server import create_app

    server_cfg = ctx.loader.get_server_config()
    host = ctx.args.host or server_cfg["host"]
    port = ctx.args.port or server_cfg["port"]
    logger.info(f"HTTP 服务运行在 http://{host}:{port}")
    uvicorn.run(create_app(ctx.loader), host=host, port=port)


COMMANDS: Dict[str, Callable[[CommandContext], Optional[ReportTable]]] = {
    "link-budget": cmd_link_budget,
    "lna": cmd_lna,
    "mixer": cmd_mixer,
    "npath-sim": cmd_npath_sim,
    "ber": cmd_ber,
    "explore": cmd_explore,
    "report": cmd_report,
    "serve": cmd_serve,
}


# ============ 参数解析 ============

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="随机种子（缺省取配置 tool.master_seed）")
    common.add_argument("--config", default=None, help="配置文件路径（优先于 ULPRX_CONFIG）")
    common.add_argument("--out", default=None, help="输出文件；缺省写标准输出")
    common.add_argument("--format", choices=FORMATS, default="csv", help="输出格式")
    common.add_argument("--preset", default=None, help="配置中的预设名（fig3/fig8/fig11/fig12/fig13/...）")

    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="MedRadio 混频器优先 OOK 接收机建模与设计空间探索")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("link-budget", parents=[common], help="路径损耗、所需灵敏度、灵敏度")
    p.add_argument("--freq", type=float, help="载波频率 Hz")
    p.add_argument("--dist", type=float, help="距离 m")
    p.add_argument("--eirp", type=float, help="EIRP dBm")
    p.add_argument("--bw", type=float, help="信道带宽 Hz")
    p.add_argument("--rate", type=float, help="数据率 bit/s")
    p.add_argument("--ber", type=float, help="误码率目标")
    p.add_argument("--detector", choices=[d.value for d in Detector])
    p.add_argument("--nf", type=float, help="系统噪声系数 dB（给出时计算灵敏度）")
    p.add_argument("--extra-loss", type=float, help="人体损耗/衰落余量 dB")

    p = sub.add_parser("lna", parents=[common], help="LNA 工作点 / 匹配扫描")
    p.add_argument("--bias", type=float, help="栅偏压 V")
    p.add_argument("--wp", type=float, help="PMOS 总宽度 m")
    p.add_argument("--wn", type=float, help="NMOS 总宽度 m")
    p.add_argument("--rf", type=float, help="反馈电阻 Ω")
    p.add_argument("--zin", type=float, help="匹配目标 Ω（求解反馈电阻）")
    p.add_argument("--auto-size", action="store_true", help="按匹配目标自动定尺寸")
    p.add_argument("--load-cap", type=float, help="负载电容 F")
    p.add_argument("--supply", type=float, help="电源电压 V")
    p.add_argument("--bandwidth-limit", type=float, help="外部带宽限制 Hz")
    p.add_argument("--mode", choices=[m.value for m in LnaMode])
    p.add_argument("--gate-biases", type=_float_list, help="扫描偏压列表，逗号分隔")
    p.add_argument("--zin-targets", type=_float_list, help="扫描匹配目标列表，逗号分隔")

    p = sub.add_parser("mixer", parents=[common], help="混频器噪声系数表 / 驱动功耗")
    p.add_argument("--rs", type=_float_list, help="源阻抗列表 Ω")
    p.add_argument("--rsw", type=_float_list, help="开关电阻列表 Ω")
    p.add_argument("--drive", action="store_true", help="输出分频器与驱动功耗")
    p.add_argument("--lo", type=float, help="本振频率 Hz")
    p.add_argument("--switch-widths", type=_float_list, help="开关宽度列表 m")

    p = sub.add_parser("npath-sim", parents=[common], help="N 路混频器波形仿真")
    p.add_argument("--action", choices=["conversion", "nf", "corner", "waveform"], default="conversion")
    p.add_argument("--paths", type=int, choices=[2, 4])
    p.add_argument("--duty", type=float)
    p.add_argument("--rs", type=float, help="源电阻 Ω")
    p.add_argument("--rsw", type=float, help="开关电阻 Ω")
    p.add_argument("--switch-width", type=float, help="开关宽度 m")
    p.add_argument("--cap", type=float, help="基带电容 F")
    p.add_argument("--lo", type=float, help="本振频率 Hz")
    p.add_argument("--rf", type=float, help="输入单音频率 Hz")
    p.add_argument("--offset", type=float, help="单音相对 LO 的频偏 Hz")
    p.add_argument("--amplitude", type=float, default=1e-3, help="单音幅度 V")
    p.add_argument("--duration", type=float, help="仿真时长 s")
    p.add_argument("--oversampling", type=int, help="过采样倍数（≥32）")
    p.add_argument("--decimate", type=int, default=1, help="波形导出抽取因子")

    p = sub.add_parser("ber", parents=[common], help="OOK 误码率蒙特卡洛")
    p.add_argument("--snr", type=_float_list, help="SNR 网格 dB，逗号分隔")
    p.add_argument("--bits", type=int, default=100_000, help="每个 SNR 点的信道比特数")
    p.add_argument("--detector", choices=[d.value for d in Detector] + ["both"], default=Detector.COHERENT.value)
    p.add_argument("--samples-per-bit", type=int, default=1)

    p = sub.add_parser("explore", parents=[common], help="扫描 / Pareto / 优化 / 能效曲线 / 功耗分解")
    p.add_argument("--action", choices=["sweep", "pareto", "optimize", "energy-curve", "breakdown"])
    p.add_argument("--axis", type=_axis, action="append", help="参数轴 path=v1,v2,...（可重复）")
    p.add_argument("--rate", type=float, help="数据率 bit/s")
    p.add_argument("--target", type=float, help="灵敏度目标 dBm")
    p.add_argument("--rates", type=_float_list, help="能效曲线速率列表")

    p = sub.add_parser("report", parents=[common], help="与参考设计对照的一行报告")
    p.add_argument("--axis", type=_axis, action="append", help="参数轴 path=v1,v2,...（可重复）")
    p.add_argument("--rate", type=float, help="数据率 bit/s")
    p.add_argument("--target", type=float, help="灵敏度目标 dBm")
    p.add_argument("--reference", help="参考设计名")

    p = sub.add_parser("serve", parents=[common], help="启动 HTTP 服务")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    return parser


def _validation_message(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        path = ".".join(str(p) for p in item.get("loc", ()))
        parts.append(f"{path or '<root>'}: {item.get('msg', '')}")
    return "; ".join(parts)


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """执行一条命令，返回退出码"""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        loader = ConfigLoader(args.config)
        loader.load()
        smart_logger = init_smart_logger(loader.get_logging_config())
        configure_root_logging(level=loader.config.logging.log_level, smart_logger=smart_logger)
        worker_pool.configure(loader.get_limits().workers)
        configure_cache(loader.get_explorer_config().cache_size)

        preset: Dict[str, Any] = {}
        if args.preset:
            preset = loader.get_preset(args.preset)
            if preset.get("command", args.command) != args.command:
                raise ConfigError(f"预设 {args.preset} 属于子命令 {preset['command']}", field="preset")

        seed = args.seed if args.seed is not None else loader.master_seed
        provenance = Provenance(config_hash=loader.config_hash(), seed=seed,
                                command=shlex.join([TOOL_NAME] + argv))
        ctx = CommandContext(loader=loader, args=args, seed=seed, provenance=provenance, preset=preset)
        logging.getLogger("ulprx.cli").info(
            f"执行 {args.command}", extra={"command": args.command, "seed": seed,
                                          "config_hash": provenance.config_hash[:16]})

        table = COMMANDS[args.command](ctx)
        if table is not None:
            write_report(table, provenance, args.format, args.out)
        return EXIT_OK
    except ValidationError as e:
        sys.stderr.write(f"错误: {_validation_message(e)}\n")
        return EXIT_DOMAIN
    except DomainError as e:
        sys.stderr.write(f"错误: {e}\n")
        return EXIT_DOMAIN
    except OSError as e:
        # 输出路径不可写等文件错误
        sys.stderr.write(f"错误: {e.filename or args.out}: {e.strerror or e}\n")
        return EXIT_DOMAIN
    finally:
        shutdown_smart_logger()


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
