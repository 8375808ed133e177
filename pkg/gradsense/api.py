"""
Stateless HTTP surface over check, gramian and scan
"""
from typing import Any, Dict, List
import logging

from fastapi import FastAPI, HTTPException
import uvicorn

from .cli import check_report, gramian_summary, scan_rows, setup_logging
from .config import get_settings
from .errors import ConfigError, DataMismatch, GradsenseError, error_handler
from .problem import build_problem
from .schemas import ErrorResponse, GramianSummary, RunConfig, ScanRow, VerdictReport
from .strategic_analysis import gramian

logger = logging.getLogger(__name__)

settings = get_settings()

app = FastAPI(
    title=settings.app_name,
    description="Regional boundary gradient sensor analysis for 2-D diffusion",
    version=settings.version,
)


def _http_error(error: Exception, endpoint: str) -> HTTPException:
    payload = error_handler.handle_error(error, context={"endpoint": endpoint})
    if isinstance(error, ConfigError):
        status = 422
    elif isinstance(error, DataMismatch):
        status = 409
    else:
        status = 500
    return HTTPException(status_code=status, detail=ErrorResponse(**payload).model_dump())


@app.get("/health")
async def health() -> Dict[str, Any]:
    return {
        "status": "ok",
        "version": settings.version,
        "errors": error_handler.get_error_statistics()["total_errors"],
    }


@app.post("/check", response_model=VerdictReport)
def check(config: RunConfig) -> VerdictReport:
    try:
        return check_report(build_problem(config), settings)
    except (GradsenseError, ValueError) as error:
        raise _http_error(error, "/check")


@app.post("/gramian", response_model=GramianSummary)
def gramian_endpoint(config: RunConfig) -> GramianSummary:
    try:
        problem = build_problem(config)
        gram = gramian(problem.suite, problem.modeset, config.time.T, problem.quad)
        return gramian_summary(gram, problem.pd_tol)
    except (GradsenseError, ValueError) as error:
        raise _http_error(error, "/gramian")


@app.post("/scan", response_model=List[ScanRow])
def scan(config: RunConfig) -> List[ScanRow]:
    try:
        return scan_rows(build_problem(config), settings.threads)
    except (GradsenseError, ValueError) as error:
        raise _http_error(error, "/scan")


def serve() -> None:
    setup_logging(settings)
    logger.info(f"Serving gradsense API on {settings.api_host}:{settings.api_port}")
    uvicorn.run(app, host=settings.api_host, port=settings.api_port)


if __name__ == "__main__":
    serve()
