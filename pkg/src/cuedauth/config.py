"""Scheme and service configuration.

A config file (YAML or JSON) provides the base values; environment
variables prefixed ``CUEDAUTH_`` override individual service settings.
"""

from __future__ import annotations

import os
import string
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .errors import ConfigError, WeakParams

DEFAULT_ALPHABET = tuple(string.ascii_lowercase)

# Cost floors enforced for production profiles.  pbkdf2 cost is an
# iteration count; scrypt cost is log2(N).
PRODUCTION_KDF_FLOORS = {"pbkdf2-sha256": 10_000, "scrypt": 14}

KDF_ALGORITHM_IDS = {"pbkdf2-sha256": 1, "scrypt": 2}
KDF_ALGORITHM_NAMES = {v: k for k, v in KDF_ALGORITHM_IDS.items()}


@dataclass(frozen=True)
class KdfParams:
    """Slow-hash parameters.

    ``cost`` is the iteration count for pbkdf2-sha256 and log2(N) for
    scrypt.  ``block_size``/``parallelism`` are scrypt's r and p and are
    ignored by pbkdf2.
    """

    algorithm: str = "scrypt"
    cost: int = 15
    block_size: int = 8
    parallelism: int = 1

    def validate(self, enforce_floor: bool = True) -> None:
        if self.algorithm not in KDF_ALGORITHM_IDS:
            raise ConfigError(f"unknown KDF algorithm {self.algorithm!r}")
        if self.cost < 1 or self.block_size < 1 or self.parallelism < 1:
            raise WeakParams("KDF parameters must be positive")
        if enforce_floor and self.cost < PRODUCTION_KDF_FLOORS[self.algorithm]:
            raise WeakParams(
                f"{self.algorithm} cost {self.cost} below floor "
                f"{PRODUCTION_KDF_FLOORS[self.algorithm]}"
            )


#: A deliberately cheap profile for tests and simulations.
FAST_KDF = KdfParams(algorithm="pbkdf2-sha256", cost=1)


@dataclass(frozen=True)
class LockoutPolicy:
    """Consecutive-failure cap with an escalating backoff schedule."""

    enabled: bool = True
    max_failures: int = 3
    backoff_seconds: tuple = (60.0, 300.0, 900.0)

    def backoff_for(self, lock_step: int) -> float:
        index = min(lock_step, len(self.backoff_seconds) - 1)
        return self.backoff_seconds[index]


@dataclass(frozen=True)
class SchemeConfig:
    """Everything the scheme engine needs to know about one deployment."""

    k: int = 26
    m: int = 6
    alphabet: tuple = DEFAULT_ALPHABET
    kdf: KdfParams = field(default_factory=KdfParams)
    lockout: LockoutPolicy = field(default_factory=LockoutPolicy)
    profile: str = "production"  # "production" | "test"
    session_ttl_seconds: float = 600.0
    kdf_min_ms: float = 50.0  # measured verify-time floor at production cost

    def validate(self) -> None:
        if len(self.alphabet) != self.k:
            raise ConfigError(
                f"alphabet size {len(self.alphabet)} does not match k={self.k}"
            )
        if len(set(self.alphabet)) != self.k:
            raise ConfigError("alphabet symbols must be distinct")
        if any(len(s) != 1 for s in self.alphabet):
            raise ConfigError("alphabet symbols must be single characters")
        if self.m < 1:
            raise ConfigError("sequence length m must be >= 1")
        if self.profile == "production":
            if self.k < 2:
                raise ConfigError("production profile requires k >= 2")
            self.kdf.validate(enforce_floor=True)
        else:
            self.kdf.validate(enforce_floor=False)

    @classmethod
    def for_test(cls, k: int, m: int, lockout: LockoutPolicy | None = None) -> "SchemeConfig":
        """Small desk-scale profile: first k letters, cheap KDF."""
        return cls(
            k=k,
            m=m,
            alphabet=tuple(string.ascii_lowercase[:k]),
            kdf=FAST_KDF,
            lockout=lockout or LockoutPolicy(enabled=False),
            profile="test",
        )


@dataclass(frozen=True)
class ServiceConfig:
    """Service-level settings around a SchemeConfig."""

    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    data_dir: Path = Path("data")
    pack_dir: Path | None = None
    admin_token: str = "change-me"
    host: str = "127.0.0.1"
    port: int = 8000
    login_starts_per_minute: int = 60  # per user and per source address
    durable_writes: bool = True

    def validate(self) -> None:
        self.scheme.validate()
        if not self.admin_token:
            raise ConfigError("admin_token must be set")


def _scheme_from_mapping(raw: dict) -> SchemeConfig:
    base = SchemeConfig()
    kdf = KdfParams(**raw.get("kdf", {})) if "kdf" in raw else base.kdf
    lockout_raw = raw.get("lockout")
    if lockout_raw is not None:
        lockout_raw = dict(lockout_raw)
        if "backoff_seconds" in lockout_raw:
            lockout_raw["backoff_seconds"] = tuple(lockout_raw["backoff_seconds"])
        lockout = LockoutPolicy(**lockout_raw)
    else:
        lockout = base.lockout
    fields = {
        key: raw[key]
        for key in ("k", "m", "profile", "session_ttl_seconds", "kdf_min_ms")
        if key in raw
    }
    if "alphabet" in raw:
        fields["alphabet"] = tuple(raw["alphabet"])
    elif "k" in raw and raw["k"] != base.k:
        fields["alphabet"] = tuple(string.ascii_lowercase[: raw["k"]])
    return replace(base, kdf=kdf, lockout=lockout, **fields)


def load_service_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Load config from an optional file, then apply CUEDAUTH_* overrides."""
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text()) or {}

    scheme = _scheme_from_mapping(raw.get("scheme", {}))
    config = ServiceConfig(
        scheme=scheme,
        data_dir=Path(raw.get("data_dir", "data")),
        pack_dir=Path(raw["pack_dir"]) if raw.get("pack_dir") else None,
        admin_token=raw.get("admin_token", "change-me"),
        host=raw.get("host", "127.0.0.1"),
        port=int(raw.get("port", 8000)),
        login_starts_per_minute=int(raw.get("login_starts_per_minute", 60)),
        durable_writes=bool(raw.get("durable_writes", True)),
    )

    overrides = {}
    if env.get("CUEDAUTH_DATA_DIR"):
        overrides["data_dir"] = Path(env["CUEDAUTH_DATA_DIR"])
    if env.get("CUEDAUTH_PACK_DIR"):
        overrides["pack_dir"] = Path(env["CUEDAUTH_PACK_DIR"])
    if env.get("CUEDAUTH_ADMIN_TOKEN"):
        overrides["admin_token"] = env["CUEDAUTH_ADMIN_TOKEN"]
    if env.get("CUEDAUTH_HOST"):
        overrides["host"] = env["CUEDAUTH_HOST"]
    if env.get("CUEDAUTH_PORT"):
        overrides["port"] = int(env["CUEDAUTH_PORT"])
    if overrides:
        config = replace(config, **overrides)
    config.validate()
    return config
