from contextlib import asynccontextmanager
from http import HTTPStatus
from typing import AsyncGenerator

from fastapi import FastAPI, HTTPException
from loguru import logger
from starlette.middleware.cors import CORSMiddleware
from starlette.requests import Request
from starlette.responses import JSONResponse

import app as package
from app.api import router
from app.core.errors import AirdataError
from app.services.util import initialize_services, teardown_services


def get_lifespan():
    @asynccontextmanager
    async def lifespan(_app: FastAPI) -> AsyncGenerator[None, None]:
        try:
            initialize_services()
            logger.info("air data service running")
            yield
        except Exception as exc:
            logger.exception(exc)
            raise
        finally:
            await teardown_services()
            await logger.complete()

    return lifespan


def create_app() -> FastAPI:
    app = FastAPI(
        title="mpp-airdata",
        version=package.__version__,
        lifespan=get_lifespan(),
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(AirdataError)
    async def airdata_error_handler(_request: Request, exc: AirdataError) -> JSONResponse:
        return JSONResponse(
            status_code=HTTPStatus.UNPROCESSABLE_ENTITY,
            content={"message": str(exc), "error": type(exc).__name__},
        )

    @app.exception_handler(Exception)
    async def exception_handler(_request: Request, exc: Exception) -> JSONResponse:
        if isinstance(exc, HTTPException):
            return JSONResponse(
                status_code=exc.status_code,
                content={"message": str(exc.detail)},
            )
        logger.exception(exc)
        return JSONResponse(
            status_code=HTTPStatus.INTERNAL_SERVER_ERROR,
            content={"message": str(exc)},
        )

    app.include_router(router)

    return app
