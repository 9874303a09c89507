"""Request/response models for the HTTP API (media type v1)."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ChallengeEntry(BaseModel):
    keyword: str
    ordinal: int
    fact: str
    image_url: str
    key_symbol: str  # the letter shown in parentheses next to the keyword


class PortfolioRender(BaseModel):
    portfolio_id: str
    category: str
    entries: list[ChallengeEntry]  # fixed layout order


class InputSpec(BaseModel):
    type: str = "masked_char"
    length: int = 1


class ChallengeView(BaseModel):
    session_id: str
    step: int
    state: str  # "challenge" | "awaiting_finalize"
    portfolio: PortfolioRender | None = None
    input: InputSpec = Field(default_factory=InputSpec)


class RegisterStartRequest(BaseModel):
    user_id: str


class StudyView(BaseModel):
    """Registration study panel: the assigned keyword with all its cues."""

    session_id: str
    step: int
    total_steps: int
    keyword: str
    ordinal: int
    fact: str
    image_url: str
    portfolio: PortfolioRender


class RegisterStartResponse(BaseModel):
    session_id: str
    step: int
    total_steps: int
    study: StudyView


class KeyRequest(BaseModel):
    session_id: str
    key: str


class RegisterKeyResponse(BaseModel):
    session_id: str
    step: int
    state: str  # "study" | "complete"
    study: StudyView | None = None


class LoginStartRequest(BaseModel):
    user_id: str


class LoginFinalizeRequest(BaseModel):
    session_id: str


class LoginFinalizeResponse(BaseModel):
    session_id: str
    result: str  # "success" | "failure"


class ErrorResponse(BaseModel):
    error: str
    detail: str | None = None
    step: int | None = None


class HealthResponse(BaseModel):
    status: str
    pack_version: int
    portfolios: int


class PackImage(BaseModel):
    filename: str
    data_base64: str


class PackUploadRequest(BaseModel):
    manifest_yaml: str
    images: list[PackImage]


class PackUploadResponse(BaseModel):
    pack_version: int
    portfolios: int


class PackDiagnosticsResponse(BaseModel):
    error: str = "invalid_pack"
    diagnostics: list[str]
