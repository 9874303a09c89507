"""Credential record persistence and lockout accounting.

Records live in a single append-compact log file.  Each log entry is a
length-prefixed frame with a CRC32 trailer; the latest frame per user
wins.  Record payloads carry their own versioned header and checksum so
a record is verifiable independent of the log framing.

On-disk record payload (all integers little-endian):

    u16  record format version (currently 1)
    u16  user_id length,            followed by UTF-8 bytes
    u16  first_portfolio_id length, followed by UTF-8 bytes
    u8   salt length,               followed by salt bytes
    u8   KDF algorithm id (1 = pbkdf2-sha256, 2 = scrypt)
    u32  KDF cost
    u32  KDF block size (r)
    u32  KDF parallelism (p)
    u16  verifier length,           followed by verifier bytes
    u32  feedback-PRF key version
    u32  failure count
    u32  lock step (times the lockout threshold has tripped)
    u64  locked_until as milliseconds since epoch (0 = not locked)
    u32  CRC32 of all preceding payload bytes

Log entry framing:

    u8   op (1 = put, 2 = delete)
    u16  user_id length, followed by UTF-8 bytes
    u32  payload length, followed by payload bytes (empty for delete)
    u32  CRC32 of all preceding entry bytes
"""

from __future__ import annotations

import json
import os
import secrets
import struct
import threading
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

from .config import (
    KDF_ALGORITHM_IDS,
    KDF_ALGORITHM_NAMES,
    KdfParams,
    LockoutPolicy,
)
from .errors import CorruptRecord, StorageFull

RECORD_VERSION = 1
FILE_MAGIC = b"CAKV\x01\x00"
OP_PUT = 1
OP_DELETE = 2


@dataclass(frozen=True)
class CredentialRecord:
    """Everything the server keeps about one enrolled user."""

    user_id: str
    first_portfolio_id: str
    salt: bytes
    verifier: bytes
    kdf_params: KdfParams
    prf_key_version: int
    failure_count: int = 0
    lock_step: int = 0
    locked_until: float | None = None  # seconds since epoch

    def is_locked(self, now: float) -> bool:
        return self.locked_until is not None and now < self.locked_until


def encode_record(record: CredentialRecord) -> bytes:
    parts = [struct.pack("<H", RECORD_VERSION)]
    for text in (record.user_id, record.first_portfolio_id):
        raw = text.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
    parts.append(struct.pack("<B", len(record.salt)) + record.salt)
    parts.append(
        struct.pack(
            "<BIII",
            KDF_ALGORITHM_IDS[record.kdf_params.algorithm],
            record.kdf_params.cost,
            record.kdf_params.block_size,
            record.kdf_params.parallelism,
        )
    )
    parts.append(struct.pack("<H", len(record.verifier)) + record.verifier)
    locked_ms = int(record.locked_until * 1000) if record.locked_until else 0
    parts.append(
        struct.pack(
            "<IIIQ",
            record.prf_key_version,
            record.failure_count,
            record.lock_step,
            locked_ms,
        )
    )
    payload = b"".join(parts)
    return payload + struct.pack("<I", zlib.crc32(payload))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptRecord("record payload truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_record(payload: bytes) -> CredentialRecord:
    if len(payload) < 4:
        raise CorruptRecord("record payload too short")
    body, (stored_crc,) = payload[:-4], struct.unpack("<I", payload[-4:])
    if zlib.crc32(body) != stored_crc:
        raise CorruptRecord("record checksum mismatch")
    reader = _Reader(body)
    (version,) = reader.unpack("<H")
    if version != RECORD_VERSION:
        raise CorruptRecord(f"unsupported record version {version}")
    (n,) = reader.unpack("<H")
    user_id = reader.take(n).decode("utf-8")
    (n,) = reader.unpack("<H")
    first_portfolio_id = reader.take(n).decode("utf-8")
    (n,) = reader.unpack("<B")
    salt = reader.take(n)
    alg_id, cost, block_size, parallelism = reader.unpack("<BIII")
    if alg_id not in KDF_ALGORITHM_NAMES:
        raise CorruptRecord(f"unknown KDF algorithm id {alg_id}")
    (n,) = reader.unpack("<H")
    verifier = reader.take(n)
    prf_key_version, failure_count, lock_step, locked_ms = reader.unpack("<IIIQ")
    if reader.pos != len(body):
        raise CorruptRecord("trailing bytes in record payload")
    return CredentialRecord(
        user_id=user_id,
        first_portfolio_id=first_portfolio_id,
        salt=salt,
        verifier=verifier,
        kdf_params=KdfParams(
            algorithm=KDF_ALGORITHM_NAMES[alg_id],
            cost=cost,
            block_size=block_size,
            parallelism=parallelism,
        ),
        prf_key_version=prf_key_version,
        failure_count=failure_count,
        lock_step=lock_step,
        locked_until=locked_ms / 1000.0 if locked_ms else None,
    )


def record_failure(
    record: CredentialRecord, policy: LockoutPolicy, now: float
) -> CredentialRecord:
    """Apply one failed finalize to the lockout counters."""
    if not policy.enabled:
        return record
    if record.is_locked(now):
        # counter untouched; horizon only ever extends
        horizon = max(record.locked_until, now + policy.backoff_for(record.lock_step))
        return replace(record, locked_until=horizon, lock_step=record.lock_step + 1)
    failures = record.failure_count + 1
    if failures >= policy.max_failures:
        return replace(
            record,
            failure_count=0,
            locked_until=now + policy.backoff_for(record.lock_step),
            lock_step=record.lock_step + 1,
        )
    return replace(record, failure_count=failures)


def record_success(record: CredentialRecord) -> CredentialRecord:
    return replace(record, failure_count=0, locked_until=None, lock_step=0)


class CredentialStore:
    """Crash-safe single-file store, append on write, compact on demand."""

    def __init__(self, path: str | Path, durable: bool = True):
        self.path = Path(path)
        self.durable = durable
        self._lock = threading.Lock()
        self._records: dict = {}
        if self.path.exists():
            self._replay()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "wb") as fh:
                fh.write(FILE_MAGIC)
                fh.flush()
                os.fsync(fh.fileno())

    def _replay(self, recover: bool = False) -> None:
        data = self.path.read_bytes()
        if data[: len(FILE_MAGIC)] != FILE_MAGIC:
            raise CorruptRecord("bad store file header")
        pos = len(FILE_MAGIC)
        records: dict = {}
        while pos < len(data):
            entry_start = pos
            try:
                if pos + 3 > len(data):
                    raise CorruptRecord("truncated entry header")
                op = data[pos]
                (key_len,) = struct.unpack_from("<H", data, pos + 1)
                pos += 3
                key_bytes = data[pos : pos + key_len]
                pos += key_len
                if pos + 4 > len(data):
                    raise CorruptRecord("truncated entry length")
                (val_len,) = struct.unpack_from("<I", data, pos)
                pos += 4
                if pos + val_len + 4 > len(data):
                    raise CorruptRecord("truncated entry payload")
                payload = data[pos : pos + val_len]
                pos += val_len
                (crc,) = struct.unpack_from("<I", data, pos)
                pos += 4
                if zlib.crc32(data[entry_start : pos - 4]) != crc:
                    raise CorruptRecord("entry checksum mismatch")
                try:
                    key = key_bytes.decode("utf-8")
                except UnicodeDecodeError as exc:
                    raise CorruptRecord("undecodable key bytes") from exc
            except CorruptRecord:
                if recover:
                    # torn tail after a crash: keep what was durable
                    with open(self.path, "r+b") as fh:
                        fh.truncate(entry_start)
                    break
                raise
            if op == OP_PUT:
                records[key] = decode_record(payload)
            elif op == OP_DELETE:
                records.pop(key, None)
            else:
                raise CorruptRecord(f"unknown op {op}")
        self._records = records

    @classmethod
    def recover(cls, path: str | Path, durable: bool = True) -> "CredentialStore":
        """Open a store, discarding a torn trailing entry if present."""
        store = cls.__new__(cls)
        store.path = Path(path)
        store.durable = durable
        store._lock = threading.Lock()
        store._records = {}
        store._replay(recover=True)
        return store

    def _append(self, op: int, user_id: str, payload: bytes) -> None:
        key = user_id.encode("utf-8")
        entry = (
            struct.pack("<BH", op, len(key))
            + key
            + struct.pack("<I", len(payload))
            + payload
        )
        entry += struct.pack("<I", zlib.crc32(entry))
        try:
            with open(self.path, "ab") as fh:
                fh.write(entry)
                fh.flush()
                if self.durable:
                    os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFull(str(exc)) from exc

    def put(self, record: CredentialRecord) -> None:
        with self._lock:
            self._append(OP_PUT, record.user_id, encode_record(record))
            self._records[record.user_id] = record

    def get(self, user_id: str) -> CredentialRecord | None:
        with self._lock:
            return self._records.get(user_id)

    def delete(self, user_id: str) -> None:
        with self._lock:
            if user_id in self._records:
                self._append(OP_DELETE, user_id, b"")
                del self._records[user_id]

    def user_ids(self) -> list:
        with self._lock:
            return sorted(self._records)

    def compact(self) -> None:
        """Rewrite the log with one entry per live record, atomically."""
        with self._lock:
            tmp = self.path.with_suffix(self.path.suffix + ".compact")
            with open(tmp, "wb") as fh:
                fh.write(FILE_MAGIC)
                for user_id in sorted(self._records):
                    payload = encode_record(self._records[user_id])
                    key = user_id.encode("utf-8")
                    entry = (
                        struct.pack("<BH", OP_PUT, len(key))
                        + key
                        + struct.pack("<I", len(payload))
                        + payload
                    )
                    entry += struct.pack("<I", zlib.crc32(entry))
                    fh.write(entry)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)


class Keyring:
    """Versioned server-side feedback-PRF keys.

    Rotation adds a new version; old versions stay resolvable so
    existing credentials keep their chains.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if self.path.exists():
            raw = json.loads(self.path.read_text())
            self._keys = {int(v): bytes.fromhex(h) for v, h in raw["keys"].items()}
            self.current_version = raw["current"]
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._keys = {1: secrets.token_bytes(32)}
            self.current_version = 1
            self._save()

    def _save(self) -> None:
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(
                {
                    "current": self.current_version,
                    "keys": {str(v): k.hex() for v, k in self._keys.items()},
                }
            )
        )
        os.replace(tmp, self.path)

    def current_key(self) -> bytes:
        return self._keys[self.current_version]

    def key_for(self, version: int) -> bytes:
        return self._keys[version]

    def rotate(self) -> int:
        self.current_version += 1
        self._keys[self.current_version] = secrets.token_bytes(32)
        self._save()
        return self.current_version
