"""The recognition-scheme engine.

Everything here is pure given (inputs, randomness): per-render key
mappings, random credential assignment, the keyed next-portfolio chain
that drives implicit feedback, and the registration/login session state
machines.  Transport and persistence live elsewhere.
"""

from __future__ import annotations

import hashlib
import hmac
import math
import random
import secrets
from dataclasses import dataclass, field

from .config import SchemeConfig
from .errors import (
    Exhausted,
    InsufficientPortfolios,
    InvalidSymbol,
    NotReady,
    SessionClosed,
)
from .pack import PortfolioSet


def theoretical_entropy(k: int, m: int) -> float:
    """Credential-space entropy in bits: m uniform choices out of k."""
    if k < 1 or m < 1:
        raise ValueError("k and m must be >= 1")
    return m * math.log2(k)


@dataclass(frozen=True)
class KeyMapping:
    """One render's bijection between alphabet symbols and keyword ordinals."""

    symbol_to_ordinal: dict
    ordinal_to_symbol: dict

    @classmethod
    def sample(cls, config: SchemeConfig, rng: random.Random) -> "KeyMapping":
        """Uniformly random bijection (unbiased shuffle), fresh per render."""
        ordinals = list(range(1, config.k + 1))
        rng.shuffle(ordinals)
        forward = dict(zip(config.alphabet, ordinals))
        return cls(forward, {v: s for s, v in forward.items()})


def sample_key_mapping(config: SchemeConfig, rng: random.Random) -> KeyMapping:
    return KeyMapping.sample(config, rng)


def _prf_uniform(key: bytes, message: bytes, n: int) -> int:
    """Deterministic uniform draw from range(n), keyed by an HMAC PRF.

    Rejection sampling on the 64-bit PRF output keeps the result free of
    modulo bias.
    """
    bound = (1 << 64) - ((1 << 64) % n)
    counter = 0
    while True:
        digest = hmac.new(
            key, message + counter.to_bytes(4, "little"), hashlib.sha256
        ).digest()
        value = int.from_bytes(digest[:8], "little")
        if value < bound:
            return value % n
        counter += 1


def next_portfolio(
    feedback_key: bytes,
    user_id: str,
    current_portfolio_id: str,
    keyword_ordinal: int,
    visited,
    portfolio_ids,
) -> str:
    """The implicit-feedback chain: which portfolio to show next.

    Depends only on the keyed PRF over (user, current portfolio, entered
    keyword) and the set of portfolios already shown, never on whether
    the entered keyword was correct.  Visited portfolios are excluded so
    no portfolio repeats within a session.
    """
    candidates = sorted(set(portfolio_ids) - set(visited))
    if not candidates:
        raise Exhausted("all portfolios visited")
    message = b"\x00".join(
        [
            b"next-portfolio",
            user_id.encode("utf-8"),
            current_portfolio_id.encode("utf-8"),
            str(keyword_ordinal).encode("ascii"),
        ]
    )
    return candidates[_prf_uniform(feedback_key, message, len(candidates))]


@dataclass(frozen=True)
class AssignedCredential:
    """The plaintext secret, alive only during registration."""

    user_id: str
    sequence: tuple  # m (portfolio_id, keyword_ordinal) pairs
    first_portfolio_id: str


def assign_credential(
    user_id: str,
    pset: PortfolioSet,
    config: SchemeConfig,
    feedback_key: bytes,
    rng: random.Random,
) -> AssignedCredential:
    """Pick a fresh random credential.

    The first portfolio and every keyword are uniform; each subsequent
    portfolio is whatever the feedback chain yields for the correct
    keyword, so the assigned sequence and the chain agree by
    construction.
    """
    ids = pset.ids()
    if len(ids) < config.m:
        raise InsufficientPortfolios(
            f"need {config.m} portfolios, pack has {len(ids)}"
        )
    current = ids[rng.randrange(len(ids))]
    visited = [current]
    sequence = []
    for step in range(config.m):
        ordinal = rng.randint(1, config.k)
        sequence.append((current, ordinal))
        if step < config.m - 1:
            current = next_portfolio(
                feedback_key, user_id, current, ordinal, visited, ids
            )
            visited.append(current)
    return AssignedCredential(
        user_id=user_id,
        sequence=tuple(sequence),
        first_portfolio_id=sequence[0][0],
    )


@dataclass
class AuthSession:
    """Step-by-step state of one registration or login walk."""

    session_id: str
    user_id: str
    mode: str  # "register" | "login"
    step: int
    current_portfolio_id: str
    visited: list
    current_mapping: KeyMapping
    entered_ordinals: list = field(default_factory=list)
    status: str = "in_progress"  # in_progress | awaiting_finalize | succeeded | failed | closed


@dataclass(frozen=True)
class StepOutcome:
    """What submit_key produced: the next state plus any register-mode error."""

    state: str  # "challenge" | "awaiting_finalize" | "register_retry" | "register_complete"
    session: AuthSession


class SchemeEngine:
    """Binds a portfolio set, a config and the feedback PRF key together."""

    def __init__(
        self,
        pset: PortfolioSet,
        config: SchemeConfig,
        feedback_key: bytes,
        rng: random.Random | None = None,
    ):
        config.validate()
        self.pset = pset
        self.config = config
        self.feedback_key = feedback_key
        self.rng = rng if rng is not None else secrets.SystemRandom()

    def new_mapping(self) -> KeyMapping:
        return KeyMapping.sample(self.config, self.rng)

    def assign(self, user_id: str) -> AssignedCredential:
        return assign_credential(
            user_id, self.pset, self.config, self.feedback_key, self.rng
        )

    def start_session(self, user_id: str, mode: str, first_portfolio_id: str) -> AuthSession:
        return AuthSession(
            session_id=secrets.token_urlsafe(16),
            user_id=user_id,
            mode=mode,
            step=0,
            current_portfolio_id=first_portfolio_id,
            visited=[first_portfolio_id],
            current_mapping=self.new_mapping(),
        )

    def _translate(self, session: AuthSession, key_symbol: str) -> int:
        symbol = key_symbol.lower()
        if symbol not in session.current_mapping.symbol_to_ordinal:
            raise InvalidSymbol(f"symbol {key_symbol!r} not in alphabet")
        return session.current_mapping.symbol_to_ordinal[symbol]

    def submit_key(
        self,
        session: AuthSession,
        key_symbol: str,
        assigned: AssignedCredential | None = None,
        feedback_key: bytes | None = None,
    ) -> StepOutcome:
        """Record one key entry and advance the session.

        Login mode always advances along the feedback chain with a fresh
        mapping, regardless of correctness.  Register mode checks the
        entry against the assignment and reports a mismatch explicitly
        without advancing.
        """
        if session.status != "in_progress":
            raise SessionClosed(f"session is {session.status}")
        ordinal = self._translate(session, key_symbol)

        if session.mode == "register":
            if assigned is None:
                raise ValueError("register mode requires the assignment")
            expected = assigned.sequence[session.step][1]
            if ordinal != expected:
                return StepOutcome("register_retry", session)
            session.entered_ordinals.append(ordinal)
            session.step += 1
            if session.step == self.config.m:
                session.status = "awaiting_finalize"
                return StepOutcome("register_complete", session)
            session.current_portfolio_id = assigned.sequence[session.step][0]
            session.visited.append(session.current_portfolio_id)
            session.current_mapping = self.new_mapping()
            return StepOutcome("challenge", session)

        # login mode: implicit feedback, no correctness signal
        session.entered_ordinals.append(ordinal)
        session.step += 1
        if session.step == self.config.m:
            session.status = "awaiting_finalize"
            return StepOutcome("awaiting_finalize", session)
        session.current_portfolio_id = next_portfolio(
            feedback_key if feedback_key is not None else self.feedback_key,
            session.user_id,
            session.current_portfolio_id,
            ordinal,
            session.visited,
            self.pset.ids(),
        )
        session.visited.append(session.current_portfolio_id)
        session.current_mapping = self.new_mapping()
        return StepOutcome("challenge", session)

    def entered_keywords(self, session: AuthSession) -> list:
        """Map the session's entered ordinals back to keyword strings."""
        if len(session.entered_ordinals) < self.config.m:
            raise NotReady(
                f"{len(session.entered_ordinals)} of {self.config.m} entries recorded"
            )
        return [
            self.pset.keyword_for(pid, ordinal)
            for pid, ordinal in zip(session.visited, session.entered_ordinals)
        ]
