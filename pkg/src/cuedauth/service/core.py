"""Transport-independent service layer.

The FastAPI routes are thin wrappers around AuthServer; the attack
harness drives AuthServer directly so simulations exercise the same
code paths as real requests.
"""

from __future__ import annotations

import collections
import hashlib
import hmac
import logging
import threading
import time
from dataclasses import dataclass, field

from .. import kdf
from ..config import ServiceConfig
from ..errors import (
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
from ..pack import IMAGES_DIR, PortfolioSet
from ..scheme import AssignedCredential, AuthSession, SchemeEngine
from ..store import (
    CredentialRecord,
    CredentialStore,
    Keyring,
    record_failure,
    record_success,
)
from . import schemas

logger = logging.getLogger("cuedauth.service")

# Field names that must never reach the logs.
_SECRET_FIELDS = {"keyword", "keywords", "key", "key_symbol", "ordinal", "sequence"}


def log_event(event: str, **fields) -> None:
    safe = {k: v for k, v in fields.items() if k not in _SECRET_FIELDS}
    logger.info("%s %s", event, " ".join(f"{k}={v}" for k, v in sorted(safe.items())))


@dataclass
class _Session:
    auth: AuthSession
    deadline: float
    feedback_key: bytes
    assigned: AssignedCredential | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class _RateLimiter:
    """Sliding-window counter per key; limit <= 0 disables it."""

    def __init__(self, per_minute: int):
        self.per_minute = per_minute
        self._hits: dict = collections.defaultdict(collections.deque)
        self._lock = threading.Lock()

    def check(self, key: str, now: float) -> None:
        if self.per_minute <= 0:
            return
        with self._lock:
            hits = self._hits[key]
            while hits and hits[0] <= now - 60.0:
                hits.popleft()
            if len(hits) >= self.per_minute:
                raise RateLimited(f"too many requests for {key}")
            hits.append(now)


class AuthServer:
    """Registration/login session broker over the scheme engine."""

    def __init__(
        self,
        config: ServiceConfig,
        pset: PortfolioSet,
        store: CredentialStore,
        keyring: Keyring,
        rng=None,
        clock=time.time,
    ):
        config.validate()
        self.config = config
        self.store = store
        self.keyring = keyring
        self.clock = clock
        self.engine = SchemeEngine(
            pset, config.scheme, keyring.current_key(), rng=rng
        )
        self.pack_version = pset.version
        self._assets: dict = {}
        self._asset_ids: dict = {}
        self._index_assets(pset)
        self._sessions: dict = {}
        self._sessions_lock = threading.Lock()
        self._user_locks: dict = collections.defaultdict(threading.Lock)
        self._limiter = _RateLimiter(config.login_starts_per_minute)

    # -- pack / assets -------------------------------------------------

    def _index_assets(self, pset: PortfolioSet) -> None:
        assets, ids = {}, {}
        if pset.root is not None:
            for portfolio in pset.portfolios:
                for entry in portfolio.entries:
                    path = pset.root / IMAGES_DIR / entry.image_ref
                    data = path.read_bytes()
                    asset_id = hashlib.sha256(data).hexdigest()[:24]
                    assets[asset_id] = data
                    ids[entry.image_ref] = asset_id
        self._assets = assets
        self._asset_ids = ids

    def activate_pack(self, pset: PortfolioSet) -> int:
        """Swap in a validated pack; bumps the served pack version."""
        if len(pset) < self.config.scheme.m:
            raise PackError(
                [f"pack has {len(pset)} portfolios, need >= {self.config.scheme.m}"]
            )
        self.pack_version += 1
        self.engine.pset = pset
        self._index_assets(pset)
        log_event("pack_activated", version=self.pack_version, portfolios=len(pset))
        return self.pack_version

    def asset(self, asset_id: str) -> bytes | None:
        return self._assets.get(asset_id)

    def _image_url(self, image_ref: str) -> str:
        asset_id = self._asset_ids.get(image_ref)
        return f"/assets/{asset_id}" if asset_id else f"/assets/{image_ref}"

    # -- session plumbing ----------------------------------------------

    def _new_session(self, auth: AuthSession, feedback_key: bytes, assigned=None) -> _Session:
        wrapper = _Session(
            auth=auth,
            deadline=self.clock() + self.config.scheme.session_ttl_seconds,
            feedback_key=feedback_key,
            assigned=assigned,
        )
        with self._sessions_lock:
            self._sessions[auth.session_id] = wrapper
        return wrapper

    def _get_session(self, session_id: str, mode: str) -> _Session:
        with self._sessions_lock:
            wrapper = self._sessions.get(session_id)
        if wrapper is None:
            raise SessionClosed("unknown or expired session")
        if self.clock() > wrapper.deadline:
            self._drop_session(session_id)
            raise SessionClosed("session expired")
        if wrapper.auth.mode != mode:
            raise SessionClosed(f"session is not in {mode} mode")
        return wrapper

    def _drop_session(self, session_id: str) -> None:
        with self._sessions_lock:
            self._sessions.pop(session_id, None)

    def _locked(self, wrapper: _Session):
        if not wrapper.lock.acquire(blocking=False):
            raise SessionBusy("request already in flight for this session")
        return wrapper.lock

    # -- views ---------------------------------------------------------

    def _render(self, auth: AuthSession) -> schemas.PortfolioRender:
        portfolio = self.engine.pset.get(auth.current_portfolio_id)
        entries = [
            schemas.ChallengeEntry(
                keyword=e.keyword,
                ordinal=e.ordinal,
                fact=e.fact,
                image_url=self._image_url(e.image_ref),
                key_symbol=auth.current_mapping.ordinal_to_symbol[e.ordinal],
            )
            for e in portfolio.entries
        ]
        return schemas.PortfolioRender(
            portfolio_id=portfolio.portfolio_id,
            category=portfolio.category,
            entries=entries,
        )

    def _challenge_view(self, auth: AuthSession) -> schemas.ChallengeView:
        awaiting = auth.status == "awaiting_finalize"
        return schemas.ChallengeView(
            session_id=auth.session_id,
            step=auth.step,
            state="awaiting_finalize" if awaiting else "challenge",
            portfolio=None if awaiting else self._render(auth),
        )

    def _study_view(self, wrapper: _Session) -> schemas.StudyView:
        auth, assigned = wrapper.auth, wrapper.assigned
        pid, ordinal = assigned.sequence[auth.step]
        entry = self.engine.pset.get(pid).entry_for_ordinal(ordinal)
        return schemas.StudyView(
            session_id=auth.session_id,
            step=auth.step,
            total_steps=self.config.scheme.m,
            keyword=entry.keyword,
            ordinal=entry.ordinal,
            fact=entry.fact,
            image_url=self._image_url(entry.image_ref),
            portfolio=self._render(auth),
        )

    # -- registration --------------------------------------------------

    def register_start(self, user_id: str) -> schemas.RegisterStartResponse:
        if self.store.get(user_id) is not None:
            raise UserExists(f"user {user_id!r} already registered")
        feedback_key = self.keyring.current_key()
        assigned = self.engine.assign(user_id)
        auth = self.engine.start_session(user_id, "register", assigned.first_portfolio_id)
        wrapper = self._new_session(auth, feedback_key, assigned=assigned)
        log_event("register_start", user=user_id, session=auth.session_id)
        return schemas.RegisterStartResponse(
            session_id=auth.session_id,
            step=0,
            total_steps=self.config.scheme.m,
            study=self._study_view(wrapper),
        )

    def register_study(self, session_id: str) -> schemas.StudyView:
        wrapper = self._get_session(session_id, "register")
        return self._study_view(wrapper)

    def register_key(self, session_id: str, key: str) -> schemas.RegisterKeyResponse:
        wrapper = self._get_session(session_id, "register")
        lock = self._locked(wrapper)
        try:
            outcome = self.engine.submit_key(
                wrapper.auth,
                key,
                assigned=wrapper.assigned,
                feedback_key=wrapper.feedback_key,
            )
            if outcome.state == "register_retry":
                raise RegistrationMismatch(wrapper.auth.step)
            if outcome.state == "register_complete":
                self._persist_registration(wrapper)
                self._drop_session(session_id)
                log_event("register_complete", user=wrapper.auth.user_id)
                return schemas.RegisterKeyResponse(
                    session_id=session_id,
                    step=wrapper.auth.step,
                    state="complete",
                )
            return schemas.RegisterKeyResponse(
                session_id=session_id,
                step=wrapper.auth.step,
                state="study",
                study=self._study_view(wrapper),
            )
        finally:
            lock.release()

    def _persist_registration(self, wrapper: _Session) -> None:
        assigned = wrapper.assigned
        keywords = [
            self.engine.pset.keyword_for(pid, ordinal)
            for pid, ordinal in assigned.sequence
        ]
        salt = kdf.new_salt()
        params = self.config.scheme.kdf
        verifier = kdf.derive_verifier(keywords, salt, params)
        record = CredentialRecord(
            user_id=assigned.user_id,
            first_portfolio_id=assigned.first_portfolio_id,
            salt=salt,
            verifier=verifier,
            kdf_params=params,
            prf_key_version=self.keyring.current_version,
        )
        with self._user_locks[assigned.user_id]:
            self.store.put(record)
        wrapper.assigned = None  # plaintext assignment is gone

    # -- login ---------------------------------------------------------

    def login_start(self, user_id: str, source: str = "local") -> schemas.ChallengeView:
        now = self.clock()
        self._limiter.check(f"user:{user_id}", now)
        self._limiter.check(f"src:{source}", now)
        record = self.store.get(user_id)
        if record is None:
            # pad with comparable work so the unknown-user path stays in
            # the same timing class as the known-user path
            self.engine.new_mapping()
            hmac.new(b"pad", user_id.encode(), hashlib.sha256).digest()
            raise UnknownUser(f"no such user {user_id!r}")
        if record.is_locked(now):
            raise LockedOut(record.locked_until)
        feedback_key = self.keyring.key_for(record.prf_key_version)
        auth = self.engine.start_session(user_id, "login", record.first_portfolio_id)
        self._new_session(auth, feedback_key)
        log_event("login_start", user=user_id, session=auth.session_id)
        return self._challenge_view(auth)

    def login_key(self, session_id: str, key: str) -> schemas.ChallengeView:
        wrapper = self._get_session(session_id, "login")
        lock = self._locked(wrapper)
        try:
            self.engine.submit_key(wrapper.auth, key, feedback_key=wrapper.feedback_key)
            return self._challenge_view(wrapper.auth)
        finally:
            lock.release()

    def login_finalize(self, session_id: str) -> bool:
        wrapper = self._get_session(session_id, "login")
        lock = self._locked(wrapper)
        try:
            auth = wrapper.auth
            if auth.status != "awaiting_finalize":
                raise NotReady(
                    f"{len(auth.entered_ordinals)} of {self.config.scheme.m} entries recorded"
                )
            keywords = self.engine.entered_keywords(auth)
            user_id = auth.user_id
            with self._user_locks[user_id]:
                record = self.store.get(user_id)
                if record is None:
                    raise UnknownUser(f"no such user {user_id!r}")
                ok = kdf.verify_keywords(
                    keywords, record.salt, record.kdf_params, record.verifier
                )
                if ok:
                    updated = record_success(record)
                    auth.status = "succeeded"
                else:
                    updated = record_failure(
                        record, self.config.scheme.lockout, self.clock()
                    )
                    auth.status = "failed"
                if updated != record:
                    self.store.put(updated)
            self._drop_session(session_id)
            log_event("login_finalize", user=user_id, result=auth.status)
            return ok
        finally:
            lock.release()
