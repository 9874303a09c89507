import dataclasses
import random

import pytest
from fastapi.testclient import TestClient

from cuedauth.config import (
    FAST_KDF,
    LockoutPolicy,
    SchemeConfig,
    ServiceConfig,
)
from cuedauth.pack import generate_fixture, load_pack
from cuedauth.service import AuthServer, create_app
from cuedauth.store import CredentialStore, Keyring

ADMIN_TOKEN = "test-admin-token"


@pytest.fixture(scope="session")
def fixture_pack_dir(tmp_path_factory):
    """The default 18-portfolio, 26-keyword synthetic pack."""
    path = tmp_path_factory.mktemp("pack18") / "pack"
    generate_fixture(path, seed=1234, n=18, k=26)
    return path


@pytest.fixture(scope="session")
def fixture_pset(fixture_pack_dir):
    return load_pack(fixture_pack_dir, k=26)


@pytest.fixture(scope="session")
def small_pack_dir(tmp_path_factory):
    """Desk-scale pack: 10 portfolios of 4 keywords."""
    path = tmp_path_factory.mktemp("pack4") / "pack"
    generate_fixture(path, seed=77, n=10, k=4)
    return path


@pytest.fixture(scope="session")
def small_pset(small_pack_dir):
    return load_pack(small_pack_dir, k=4)


class FakeClock:
    def __init__(self, start=1_000_000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds


def make_server(
    pset,
    pack_dir,
    data_dir,
    k,
    m,
    lockout=None,
    clock=None,
    kdf=FAST_KDF,
    seed=0,
    session_ttl=600.0,
):
    scheme = SchemeConfig.for_test(k, m, lockout=lockout or LockoutPolicy(enabled=False))
    scheme = dataclasses.replace(scheme, kdf=kdf, session_ttl_seconds=session_ttl)
    config = ServiceConfig(
        scheme=scheme,
        data_dir=data_dir,
        pack_dir=pack_dir,
        admin_token=ADMIN_TOKEN,
        login_starts_per_minute=0,
        durable_writes=False,
    )
    data_dir.mkdir(parents=True, exist_ok=True)
    store = CredentialStore(data_dir / "credentials.dat", durable=False)
    keyring = Keyring(data_dir / "prf_keys.json")
    kwargs = {"rng": random.Random(seed)}
    if clock is not None:
        kwargs["clock"] = clock
    return AuthServer(config, pset, store, keyring, **kwargs)


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def small_server(small_pset, small_pack_dir, tmp_path, clock):
    return make_server(small_pset, small_pack_dir, tmp_path / "data", k=4, m=2, clock=clock)


@pytest.fixture
def small_client(small_server):
    return TestClient(create_app(small_server, ADMIN_TOKEN))


def register_user(client, user_id, admin_token=ADMIN_TOKEN):
    """Walk the registration flow correctly; returns the learned sequence."""
    resp = client.post(
        "/register/start",
        json={"user_id": user_id},
        headers={"X-Admin-Token": admin_token},
    )
    assert resp.status_code == 200, resp.text
    study = resp.json()["study"]
    learned = []
    while True:
        learned.append((study["portfolio"]["portfolio_id"], study["ordinal"]))
        symbol = next(
            e["key_symbol"]
            for e in study["portfolio"]["entries"]
            if e["ordinal"] == study["ordinal"]
        )
        resp = client.post(
            "/register/key", json={"session_id": study["session_id"], "key": symbol}
        )
        body = resp.json()
        if body.get("state") == "complete":
            assert resp.status_code == 201
            return learned
        assert resp.status_code == 200, resp.text
        study = body["study"]


def login_with(client, user_id, ordinals_by_portfolio):
    """Drive a login typing the key for each portfolio's known ordinal."""
    resp = client.post("/login/start", json={"user_id": user_id})
    assert resp.status_code == 200, resp.text
    view = resp.json()
    while view["state"] == "challenge":
        pid = view["portfolio"]["portfolio_id"]
        ordinal = ordinals_by_portfolio[pid]
        symbol = next(
            e["key_symbol"] for e in view["portfolio"]["entries"] if e["ordinal"] == ordinal
        )
        view = client.post(
            "/login/key", json={"session_id": view["session_id"], "key": symbol}
        ).json()
    return client.post("/login/finalize", json={"session_id": view["session_id"]})
