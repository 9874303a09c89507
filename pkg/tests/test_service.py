"""HTTP integration tests over the in-process FastAPI app."""

import logging

import pytest
from fastapi.testclient import TestClient

from cuedauth.config import LockoutPolicy
from cuedauth.errors import SessionBusy
from cuedauth.service import create_app
from cuedauth.service.core import log_event

from conftest import ADMIN_TOKEN, FakeClock, login_with, make_server, register_user


def shape(value):
    """Structural fingerprint of a JSON document: keys and types only."""
    if isinstance(value, dict):
        return {k: shape(v) for k, v in sorted(value.items())}
    if isinstance(value, list):
        return [shape(value[0])] if value else []
    return type(value).__name__


def wrong_symbol_for(view, known_ordinal):
    return next(
        e["key_symbol"]
        for e in view["portfolio"]["entries"]
        if e["ordinal"] != known_ordinal
    )


def right_symbol_for(view, known_ordinal):
    return next(
        e["key_symbol"]
        for e in view["portfolio"]["entries"]
        if e["ordinal"] == known_ordinal
    )


def test_healthz(small_client):
    body = small_client.get("/healthz").json()
    assert body["status"] == "ok"
    assert body["portfolios"] == 10


# -- registration ------------------------------------------------------


def test_register_happy_path_persists_record(small_client, small_server):
    learned = register_user(small_client, "alice")
    assert len(learned) == 2
    record = small_server.store.get("alice")
    assert record is not None
    assert record.first_portfolio_id == learned[0][0]
    assert login_with(small_client, "alice", dict(learned)).status_code == 200


def test_register_requires_admin_token(small_client):
    resp = small_client.post(
        "/register/start", json={"user_id": "eve"}, headers={"X-Admin-Token": "nope"}
    )
    assert resp.status_code == 401
    assert small_client.post("/register/start", json={"user_id": "eve"}).status_code == 401


def test_register_existing_user_conflicts(small_client):
    register_user(small_client, "bob")
    resp = small_client.post(
        "/register/start", json={"user_id": "bob"}, headers={"X-Admin-Token": ADMIN_TOKEN}
    )
    assert resp.status_code == 409


def test_register_wrong_key_keeps_step(small_client):
    start = small_client.post(
        "/register/start", json={"user_id": "carol"}, headers={"X-Admin-Token": ADMIN_TOKEN}
    ).json()
    study = start["study"]
    session_id = study["session_id"]
    wrong = wrong_symbol_for(study, study["ordinal"])
    resp = small_client.post("/register/key", json={"session_id": session_id, "key": wrong})
    assert resp.status_code == 400
    assert resp.json()["error"] == "wrong_key"
    assert resp.json()["step"] == 0
    # study view unchanged, still step 0
    again = small_client.get("/register/study", params={"session_id": session_id}).json()
    assert again["step"] == 0 and again["keyword"] == study["keyword"]
    right = right_symbol_for(again, again["ordinal"])
    ok = small_client.post("/register/key", json={"session_id": session_id, "key": right})
    assert ok.status_code == 200 and ok.json()["step"] == 1


def test_register_replay_after_completion_gone(small_client):
    start = small_client.post(
        "/register/start", json={"user_id": "dave"}, headers={"X-Admin-Token": ADMIN_TOKEN}
    ).json()
    study = start["study"]
    session_id = study["session_id"]
    while True:
        symbol = right_symbol_for(study, study["ordinal"])
        resp = small_client.post(
            "/register/key", json={"session_id": session_id, "key": symbol}
        )
        if resp.json().get("state") == "complete":
            break
        study = resp.json()["study"]
    replay = small_client.post("/register/key", json={"session_id": session_id, "key": "a"})
    assert replay.status_code == 410


def test_register_invalid_symbol(small_client):
    start = small_client.post(
        "/register/start", json={"user_id": "zed"}, headers={"X-Admin-Token": ADMIN_TOKEN}
    ).json()
    resp = small_client.post(
        "/register/key", json={"session_id": start["session_id"], "key": "9"}
    )
    assert resp.status_code == 422


# -- login -------------------------------------------------------------


def test_login_unknown_user(small_client):
    assert small_client.post("/login/start", json={"user_id": "ghost"}).status_code == 404


def test_login_happy_and_wrong_paths(small_client):
    learned = dict(register_user(small_client, "erin"))
    assert login_with(small_client, "erin", learned).status_code == 200

    # wrong entry at step 2: challenge still comes back, finalize fails
    view = small_client.post("/login/start", json={"user_id": "erin"}).json()
    session_id = view["session_id"]
    first = right_symbol_for(view, learned[view["portfolio"]["portfolio_id"]])
    view = small_client.post("/login/key", json={"session_id": session_id, "key": first}).json()
    assert view["state"] == "challenge"
    known = learned.get(view["portfolio"]["portfolio_id"])
    wrong = wrong_symbol_for(view, known if known is not None else -1)
    view = small_client.post("/login/key", json={"session_id": session_id, "key": wrong}).json()
    assert view["state"] == "awaiting_finalize"
    resp = small_client.post("/login/finalize", json={"session_id": session_id})
    assert resp.status_code == 401
    assert resp.json()["result"] == "failure"


def test_login_responses_schema_identical_for_all_error_positions(small_client):
    learned = dict(register_user(small_client, "frank"))

    def walk(inject_at):
        """Full login; wrong key injected at one position (or none)."""
        view = small_client.post("/login/start", json={"user_id": "frank"}).json()
        session_id = view["session_id"]
        shapes = [shape(view)]
        step = 0
        while view["state"] == "challenge":
            known = learned.get(view["portfolio"]["portfolio_id"])
            if step == inject_at or known is None:
                symbol = wrong_symbol_for(view, known if known is not None else -1)
            else:
                symbol = right_symbol_for(view, known)
            view = small_client.post(
                "/login/key", json={"session_id": session_id, "key": symbol}
            ).json()
            shapes.append(shape(view))
            step += 1
        resp = small_client.post("/login/finalize", json={"session_id": session_id})
        shapes.append(shape(resp.json()))
        return shapes, resp.status_code

    clean_shapes, clean_status = walk(inject_at=None)
    assert clean_status == 200
    for position in range(2):
        err_shapes, err_status = walk(inject_at=position)
        assert err_status == 401
        assert err_shapes == clean_shapes


def test_login_finalize_before_complete(small_client):
    register_user(small_client, "gina")
    view = small_client.post("/login/start", json={"user_id": "gina"}).json()
    resp = small_client.post("/login/finalize", json={"session_id": view["session_id"]})
    assert resp.status_code == 409


def test_login_invalid_symbol(small_client):
    register_user(small_client, "hugo")
    view = small_client.post("/login/start", json={"user_id": "hugo"}).json()
    resp = small_client.post(
        "/login/key", json={"session_id": view["session_id"], "key": "z"}
    )
    assert resp.status_code == 422  # z is outside the k=4 test alphabet


def test_session_ttl_expiry(small_pset, small_pack_dir, tmp_path):
    clock = FakeClock()
    server = make_server(
        small_pset, small_pack_dir, tmp_path / "data", k=4, m=2, clock=clock, session_ttl=60.0
    )
    client = TestClient(create_app(server, ADMIN_TOKEN))
    register_user(client, "ivy")
    view = client.post("/login/start", json={"user_id": "ivy"}).json()
    clock.advance(61.0)
    resp = client.post("/login/key", json={"session_id": view["session_id"], "key": "a"})
    assert resp.status_code == 410


def test_lockout_after_failed_finalizes(small_pset, small_pack_dir, tmp_path):
    clock = FakeClock()
    server = make_server(
        small_pset,
        small_pack_dir,
        tmp_path / "data",
        k=4,
        m=2,
        clock=clock,
        lockout=LockoutPolicy(enabled=True, max_failures=3, backoff_seconds=(120.0,)),
    )
    client = TestClient(create_app(server, ADMIN_TOKEN))
    learned = dict(register_user(client, "jack"))

    def fail_once():
        view = client.post("/login/start", json={"user_id": "jack"}).json()
        sid = view["session_id"]
        while view["state"] == "challenge":
            known = learned.get(view["portfolio"]["portfolio_id"])
            view = client.post(
                "/login/key",
                json={"session_id": sid, "key": wrong_symbol_for(view, known or -1)},
            ).json()
        return client.post("/login/finalize", json={"session_id": sid})

    for _ in range(3):
        assert fail_once().status_code == 401
    locked = client.post("/login/start", json={"user_id": "jack"})
    assert locked.status_code == 423
    assert "portfolio" not in locked.json()  # no challenge content leaks
    clock.advance(121.0)
    assert login_with(client, "jack", learned).status_code == 200


def test_session_busy_guard(small_server, small_client):
    register_user(small_client, "kate")
    view = small_client.post("/login/start", json={"user_id": "kate"}).json()
    wrapper = small_server._sessions[view["session_id"]]
    wrapper.lock.acquire()
    try:
        with pytest.raises(SessionBusy):
            small_server.login_key(view["session_id"], "a")
    finally:
        wrapper.lock.release()


def test_rate_limited_login_start(small_pset, small_pack_dir, tmp_path):
    server = make_server(small_pset, small_pack_dir, tmp_path / "data", k=4, m=2)
    server._limiter.per_minute = 2
    client = TestClient(create_app(server, ADMIN_TOKEN))
    register_user(client, "liam")
    client.post("/login/start", json={"user_id": "liam"})
    client.post("/login/start", json={"user_id": "liam"})
    assert client.post("/login/start", json={"user_id": "liam"}).status_code == 429


# -- challenges and assets --------------------------------------------


def test_fresh_mapping_per_challenge(small_client):
    register_user(small_client, "mona")
    orders = set()
    for _ in range(8):
        view = small_client.post("/login/start", json={"user_id": "mona"}).json()
        entries = view["portfolio"]["entries"]
        assert sorted(e["key_symbol"] for e in entries) == ["a", "b", "c", "d"]
        orders.add(tuple(e["key_symbol"] for e in entries))
    assert len(orders) > 1  # 8 identical draws of 4! orderings is a 1e-11 event


def test_challenge_layout_is_stable(small_client):
    register_user(small_client, "nina")
    a = small_client.post("/login/start", json={"user_id": "nina"}).json()
    b = small_client.post("/login/start", json={"user_id": "nina"}).json()
    assert a["portfolio"]["portfolio_id"] == b["portfolio"]["portfolio_id"]
    assert [e["keyword"] for e in a["portfolio"]["entries"]] == [
        e["keyword"] for e in b["portfolio"]["entries"]
    ]


def test_assets_immutable(small_client):
    register_user(small_client, "otto")
    view = small_client.post("/login/start", json={"user_id": "otto"}).json()
    url = view["portfolio"]["entries"][0]["image_url"]
    first = small_client.get(url)
    second = small_client.get(url)
    assert first.status_code == 200
    assert first.content == second.content
    assert first.headers["etag"] == second.headers["etag"]
    assert "immutable" in first.headers["cache-control"]
    assert small_client.get("/assets/doesnotexist").status_code == 404


# -- pack upload -------------------------------------------------------


def build_upload_body(pack_dir):
    import base64

    from cuedauth.pack import IMAGES_DIR, MANIFEST_NAME

    images = [
        {
            "filename": p.name,
            "data_base64": base64.b64encode(p.read_bytes()).decode(),
        }
        for p in sorted((pack_dir / IMAGES_DIR).iterdir())
    ]
    return {"manifest_yaml": (pack_dir / MANIFEST_NAME).read_text(), "images": images}


def test_pack_upload_valid(small_client, tmp_path):
    from cuedauth.pack import generate_fixture

    new_pack = generate_fixture(tmp_path / "newpack", seed=123, n=10, k=4)
    before = small_client.get("/healthz").json()["pack_version"]
    resp = small_client.post(
        "/admin/pack",
        json=build_upload_body(new_pack),
        headers={"X-Admin-Token": ADMIN_TOKEN},
    )
    assert resp.status_code == 201
    assert resp.json()["pack_version"] == before + 1


def test_pack_upload_invalid_gets_diagnostics(small_client, tmp_path):
    import yaml

    from cuedauth.pack import MANIFEST_NAME, generate_fixture

    bad_pack = generate_fixture(tmp_path / "badpack", seed=9, n=10, k=4)
    raw = yaml.safe_load((bad_pack / MANIFEST_NAME).read_text())
    raw["portfolios"][2]["entries"].pop()  # 3 keywords in one portfolio
    (bad_pack / MANIFEST_NAME).write_text(yaml.safe_dump(raw))
    resp = small_client.post(
        "/admin/pack",
        json=build_upload_body(bad_pack),
        headers={"X-Admin-Token": ADMIN_TOKEN},
    )
    assert resp.status_code == 422
    assert any("p03" in d for d in resp.json()["diagnostics"])


def test_pack_upload_requires_token(small_client, tmp_path):
    from cuedauth.pack import generate_fixture

    pack = generate_fixture(tmp_path / "pack", seed=4, n=10, k=4)
    resp = small_client.post("/admin/pack", json=build_upload_body(pack))
    assert resp.status_code == 401


# -- logging hygiene ---------------------------------------------------


def test_log_event_redacts_secret_fields(caplog):
    with caplog.at_level(logging.INFO, logger="cuedauth.service"):
        log_event("test_event", user="alice", keyword="zebra", key="q", step=3)
    joined = " ".join(r.getMessage() for r in caplog.records)
    assert "alice" in joined and "step=3" in joined
    assert "zebra" not in joined and "key=" not in joined
