# server.py - ulprx HTTP 接口
# 与命令行共用同一套模型；请求/响应都是 JSON，领域错误返回 422

import logging
from contextlib import asynccontextmanager
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, ValidationError

from config_loader import ConfigLoader
from receiver import TOOL_NAME, __version__
from receiver.core.types import DesignPoint, LinkParams, LnaDesign, MixerDesign, OokParams
from receiver.explorer import configure_cache
from smart_logger import configure_root_logging, init_smart_logger
from utils import DomainError
from worker_pool import worker_pool

logger = logging.getLogger("ulprx.server")


# ============ 请求模型 ============

class LinkBudgetRequest(BaseModel):
    link: LinkParams = LinkParams()
    nf: Optional[float] = None
    extra_loss: float = 0.0


class MixerRequest(BaseModel):
    mixer: MixerDesign = MixerDesign()
    rs: Optional[float] = Field(None, gt=0)


class BerRequest(BaseModel):
    snr: List[float] = [12.8]
    n_bits: int = Field(100_000, ge=1000)
    params: OokParams = OokParams()
    seed: Optional[int] = Field(None, ge=0)


class ReportRequest(BaseModel):
    data_rate: float = Field(300e3, gt=0)
    target: Optional[float] = None
    reference: Optional[str] = None


def create_app(config_loader: Optional[ConfigLoader] = None) -> FastAPI:
    """创建应用；未传入加载器时按环境变量 / config.yaml 加载"""
    loader = config_loader

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        """应用生命周期管理"""
        nonlocal loader
        if loader is None:
            loader = ConfigLoader()
            loader.load()
            smart_logger = init_smart_logger(loader.get_logging_config())
            configure_root_logging(level=loader.config.logging.log_level, smart_logger=smart_logger)
        worker_pool.configure(loader.get_limits().workers)
        configure_cache(loader.get_explorer_config().cache_size)
        app.state.loader = loader
        server_cfg = loader.get_server_config()
        logger.info("=" * 60)
        logger.info(f"{TOOL_NAME} {__version__} HTTP 服务")
        logger.info(f"配置哈希: {loader.config_hash()[:16]}")
        logger.info(f"监听: http://{server_cfg['host']}:{server_cfg['port']}")
        logger.info("=" * 60)

        yield  # 应用运行期间

        logger.info("正在关闭服务...")
        worker_pool.close_all()

    app = FastAPI(title=f"{TOOL_NAME} - 接收机建模与设计空间探索", version=__version__, lifespan=lifespan)

    @app.exception_handler(DomainError)
    async def domain_error_handler(request: Request, exc: DomainError):
        logger.warning(f"{request.url.path} 领域错误: {exc}")
        return JSONResponse(status_code=422, content={"field": exc.field, "detail": str(exc)})

    @app.exception_handler(ValidationError)
    async def validation_error_handler(request: Request, exc: ValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        field = ".".join(str(p) for p in first.get("loc", ())) or None
        return JSONResponse(status_code=422, content={"field": field, "detail": str(exc)})

    def _loader(request: Request) -> ConfigLoader:
        return request.app.state.loader

    # ============ API端点 ============

    @app.get("/")
    async def root():
        """根端点，显示服务信息"""
        return {
            "message": f"{TOOL_NAME} - MedRadio 接收机建模",
            "version": __version__,
            "endpoints": {
                "POST /api/link-budget": "路径损耗与灵敏度",
                "POST /api/lna": "LNA 工作点",
                "POST /api/mixer": "混频器噪声系数与驱动功耗",
                "POST /api/evaluate": "整机设计点评估",
                "POST /api/ber": "OOK 误码率蒙特卡洛",
                "POST /api/report": "与参考设计对照",
                "GET /api/config": "当前配置",
            },
        }

    @app.post("/api/link-budget")
    def link_budget(body: LinkBudgetRequest) -> Dict[str, Any]:
        from receiver.linkbudget import fspl, required_sensitivity, required_snr_ook, sensitivity

        link = body.link
        needed = required_sensitivity(link, body.extra_loss)
        snr = required_snr_ook(link.ber_target, link.detector)
        result: Dict[str, Any] = {
            "fspl": fspl(link.carrier_freq, link.distance),
            "required_sensitivity": needed,
            "snr_required": snr,
        }
        if body.nf is not None:
            result["sensitivity"] = sensitivity(link.channel_bw, snr, body.nf, needed).model_dump()
        return result

    @app.post("/api/lna")
    def lna(body: LnaDesign, request: Request) -> Dict[str, Any]:
        from receiver.devicemodels import lna_operating_point

        cal = _loader(request).get_calibration()
        return lna_operating_point(body, cal.transistor, cal.lna_match_margin).model_dump()

    @app.post("/api/mixer")
    def mixer(body: MixerRequest, request: Request) -> Dict[str, Any]:
        from receiver.devicemodels import divider_power, mixer_drive_power, mixer_noise_figure, resolve_switch_unit

        cal = _loader(request).get_calibration()
        m = resolve_switch_unit(body.mixer, cal)
        rs = body.rs or m.source_impedance
        return {
            "switch_resistance": m.switch_resistance,
            "nf": mixer_noise_figure(m.switch_resistance, rs),
            "divider_power": divider_power(cal.divider_model(m.divider_arch, m.supply), m.lo_freq),
            "mixer_drive_power": mixer_drive_power(m, m.lo_freq, cal),
        }

    @app.post("/api/evaluate")
    def evaluate(body: DesignPoint, request: Request) -> Dict[str, Any]:
        from receiver.explorer import evaluate_cached

        metrics = evaluate_cached(body, _loader(request).get_calibration())
        return metrics.model_dump(mode="json")

    @app.post("/api/ber")
    def ber(body: BerRequest, request: Request) -> Dict[str, Any]:
        from receiver.berlab import ber_sweep

        loader = _loader(request)
        seed = loader.master_seed if body.seed is None else body.seed
        results = ber_sweep(body.snr, body.n_bits, body.params, seed,
                            block_bits=loader.get_limits().ber_block_bits)
        return {"results": [r.model_dump(mode="json") for r in results]}

    @app.post("/api/report")
    def report(body: ReportRequest, request: Request) -> Dict[str, Any]:
        from receiver import explorer
        from receiver.linkbudget import relaxed_sensitivity_target

        loader = _loader(request)
        cal = loader.get_calibration()
        explorer_cfg = loader.get_explorer_config()
        defaults = loader.get_defaults()
        target = body.target
        if target is None:
            if body.data_rate == explorer_cfg.compliant_rate:
                target = explorer_cfg.compliant_target_dbm
            else:
                target = relaxed_sensitivity_target(body.data_rate, cal.reference_nf_db,
                                                    defaults.link.ber_target, defaults.link.detector)
        space = explorer.default_space(defaults, explorer_cfg)
        result = explorer.optimize_min_power({"sensitivity": target, "data_rate": body.data_rate},
                                             space, loader.get_limits(), cal)
        if result.metrics is None:
            raise DomainError(result.reason or "没有可评估的设计点", field="axes")
        return {
            "feasible_design": result.feasible,
            "target_sensitivity": target,
            "design": result.point.model_dump(mode="json") if result.point else None,
            "row": explorer.compare_to_reference(result.metrics, body.reference),
        }

    @app.get("/api/config")
    def config(request: Request) -> Dict[str, Any]:
        loader = _loader(request)
        return {
            "config_hash": loader.config_hash(),
            "sources": loader.sources,
            "config": loader.config_data,
            "workers": worker_pool.stats(),
        }

    return app


app = create_app()


__all__ = ['create_app', 'app']
