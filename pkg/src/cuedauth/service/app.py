"""FastAPI application wrapping the AuthServer service layer."""

from __future__ import annotations

import base64
import secrets
import tempfile
from pathlib import Path

from fastapi import FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse

from ..config import ServiceConfig
from ..errors import (
    CuedAuthError,
    InvalidSymbol,
    LockedOut,
    NotReady,
    PackError,
    RateLimited,
    RegistrationMismatch,
    SessionBusy,
    SessionClosed,
    UnknownUser,
    UserExists,
)
from ..pack import IMAGES_DIR, MANIFEST_NAME, load_pack, validate_pack
from ..store import CredentialStore, Keyring
from . import schemas
from .core import AuthServer

_ERROR_STATUS = {
    UserExists: 409,
    UnknownUser: 404,
    LockedOut: 423,
    InvalidSymbol: 422,
    SessionClosed: 410,
    SessionBusy: 409,
    NotReady: 409,
    RateLimited: 429,
}


def _error_payload(exc: CuedAuthError) -> dict:
    return schemas.ErrorResponse(
        error=type(exc).__name__, detail=str(exc)
    ).model_dump()


def create_app(server: AuthServer, admin_token: str) -> FastAPI:
    app = FastAPI(title="cued-recognition auth service", version="1.0")
    app.state.server = server

    def check_admin(token: str | None) -> JSONResponse | None:
        if not token or not secrets.compare_digest(token, admin_token):
            return JSONResponse(
                status_code=401, content={"error": "Unauthorized", "detail": "bad admin token"}
            )
        return None

    @app.exception_handler(CuedAuthError)
    async def domain_error_handler(request: Request, exc: CuedAuthError):
        status = 500
        for cls, code in _ERROR_STATUS.items():
            if isinstance(exc, cls):
                status = code
                break
        return JSONResponse(status_code=status, content=_error_payload(exc))

    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        return schemas.HealthResponse(
            status="ok",
            pack_version=server.pack_version,
            portfolios=len(server.engine.pset),
        )

    # -- registration --------------------------------------------------

    @app.post(
        "/register/start",
        response_model=schemas.RegisterStartResponse,
        status_code=200,
    )
    def register_start(
        body: schemas.RegisterStartRequest,
        x_admin_token: str | None = Header(default=None),
    ):
        denied = check_admin(x_admin_token)
        if denied:
            return denied
        return server.register_start(body.user_id)

    @app.get("/register/study", response_model=schemas.StudyView)
    def register_study(session_id: str):
        return server.register_study(session_id)

    @app.post("/register/key")
    def register_key(body: schemas.KeyRequest):
        try:
            result = server.register_key(body.session_id, body.key)
        except RegistrationMismatch as exc:
            return JSONResponse(
                status_code=400,
                content=schemas.ErrorResponse(
                    error="wrong_key",
                    detail="that key does not match the assigned keyword",
                    step=exc.step,
                ).model_dump(),
            )
        if result.state == "complete":
            return JSONResponse(status_code=201, content=result.model_dump())
        return result.model_dump()

    # -- login ---------------------------------------------------------

    @app.post("/login/start", response_model=schemas.ChallengeView)
    def login_start(body: schemas.LoginStartRequest, request: Request):
        source = request.client.host if request.client else "local"
        return server.login_start(body.user_id, source=source)

    @app.post("/login/key", response_model=schemas.ChallengeView)
    def login_key(body: schemas.KeyRequest):
        return server.login_key(body.session_id, body.key)

    @app.post("/login/finalize")
    def login_finalize(body: schemas.LoginFinalizeRequest):
        ok = server.login_finalize(body.session_id)
        payload = schemas.LoginFinalizeResponse(
            session_id=body.session_id,
            result="success" if ok else "failure",
        ).model_dump()
        return JSONResponse(status_code=200 if ok else 401, content=payload)

    # -- assets & admin ------------------------------------------------

    @app.get("/assets/{asset_id}")
    def get_asset(asset_id: str):
        data = server.asset(asset_id)
        if data is None:
            return JSONResponse(
                status_code=404, content={"error": "NotFound", "detail": "unknown asset"}
            )
        return Response(
            content=data,
            media_type="image/png",
            headers={
                "ETag": f'"{asset_id}"',
                "Cache-Control": "public, max-age=31536000, immutable",
            },
        )

    @app.post("/admin/pack")
    def upload_pack(
        body: schemas.PackUploadRequest,
        x_admin_token: str | None = Header(default=None),
    ):
        denied = check_admin(x_admin_token)
        if denied:
            return denied
        with tempfile.TemporaryDirectory() as tmp:
            pack_dir = Path(tmp)
            (pack_dir / IMAGES_DIR).mkdir()
            (pack_dir / MANIFEST_NAME).write_text(body.manifest_yaml)
            for image in body.images:
                (pack_dir / IMAGES_DIR / image.filename).write_bytes(
                    base64.b64decode(image.data_base64)
                )
            diagnostics = validate_pack(pack_dir, k=server.config.scheme.k)
            if diagnostics:
                return JSONResponse(
                    status_code=422,
                    content=schemas.PackDiagnosticsResponse(
                        diagnostics=diagnostics
                    ).model_dump(),
                )
            pset = load_pack(
                pack_dir, k=server.config.scheme.k, version=server.pack_version + 1
            )
            # pull asset bytes into memory before the temp dir vanishes
            try:
                version = server.activate_pack(pset)
            except PackError as exc:
                return JSONResponse(
                    status_code=422,
                    content=schemas.PackDiagnosticsResponse(
                        diagnostics=exc.diagnostics
                    ).model_dump(),
                )
        return JSONResponse(
            status_code=201,
            content=schemas.PackUploadResponse(
                pack_version=version, portfolios=len(pset)
            ).model_dump(),
        )

    return app


def build_app(config: ServiceConfig) -> FastAPI:
    """Construct a ready-to-serve app from a validated service config."""
    if config.pack_dir is None:
        raise PackError(["service config has no pack_dir"])
    pset = load_pack(config.pack_dir, k=config.scheme.k)
    config.data_dir.mkdir(parents=True, exist_ok=True)
    store = CredentialStore(
        config.data_dir / "credentials.dat", durable=config.durable_writes
    )
    keyring = Keyring(config.data_dir / "prf_keys.json")
    server = AuthServer(config, pset, store, keyring)
    return create_app(server, config.admin_token)
