"""HTTP surface: status codes, payload shapes, prompt stream."""

import json

import httpx
import pytest
from fastapi.testclient import TestClient

from liveserver import live_server
from purposeguard.config import Config
from purposeguard.engine import DecisionEngine
from purposeguard.generator import load_library_facts
from purposeguard.service import create_app
from purposeguard.simulator import VirtualClock
from purposeguard.store import PolicyStore

APP = "com.example.app"

MOPUB_CLAUSE = {
    "uses": "android.permission.ACCESS_FINE_LOCATION",
    "purpose": "Advertisement",
    "class": "com.mopub.mobileads.MoPubView",
    "method": "loadAd",
    "for": "Ads keep this app free.",
}

ORG_PROFILE = {
    "id": "corp",
    "name": "Corp",
    "issuer": "IT",
    "rules": [
        {"app": "*", "permission": "CAMERA", "purpose": "*", "origin": "*", "action": "Deny"}
    ],
}


@pytest.fixture
def vclock():
    return VirtualClock(1_000.0)


@pytest.fixture
def client(vclock):
    config = Config(prompt_timeout=60.0, suppression_window=300.0, sse_keepalive=0.2)
    store = PolicyStore(clock=vclock.now, admin_token="secret-admin")
    engine = DecisionEngine(store, config, clock=vclock.now, facts=load_library_facts())
    with TestClient(create_app(engine=engine)) as c:
        yield c


def install(client, app_id=APP, declared=("CAMERA",), policy=None, **extra):
    body = {"app": app_id, "declared": list(declared), "policy": policy}
    body.update(extra)
    response = client.post("/apps", json=body)
    assert response.status_code == 201, response.text
    return response.json()


# -- apps ---------------------------------------------------------------------------


def test_install_returns_plan_and_lists_app(client):
    plan = install(client, declared=("ACCESS_FINE_LOCATION",), policy=[MOPUB_CLAUSE])
    assert plan["app"] == APP
    assert plan["provenance"] == "developer_embedded"
    assert plan["cards"][0]["purpose"] == "Displaying Advertisements"
    assert plan["cards"][0]["origin"] == "third-party:MoPub"
    apps = client.get("/apps").json()
    assert [a["app"] for a in apps] == [APP]
    assert apps[0]["provenance"] == "developer_embedded"


def test_duplicate_install_conflicts(client):
    install(client)
    response = client.post("/apps", json={"app": APP, "declared": ["CAMERA"]})
    assert response.status_code == 409
    assert response.json()["error"] == "AppAlreadyInstalledError"


def test_plan_only_does_not_install(client):
    response = client.post(
        "/apps", json={"app": APP, "declared": ["CAMERA"], "plan_only": True}
    )
    assert response.status_code == 201
    assert response.json()["provenance"] == "fallback"
    assert client.get("/apps").json() == []


def test_app_policy_and_settings_views(client):
    install(client, declared=("ACCESS_FINE_LOCATION",), policy=[MOPUB_CLAUSE])
    policy = client.get(f"/apps/{APP}/policy").json()
    assert policy["provenance"] == "developer_embedded"
    assert policy["clauses"][0]["uses"] == "android.permission.ACCESS_FINE_LOCATION"
    settings = client.get(f"/apps/{APP}/settings").json()
    assert settings["cards"][0]["action"] == "Ask"
    assert settings["cards"][0]["for"] == ["Ads keep this app free."]


def test_unknown_app_is_404(client):
    assert client.get("/apps/com.ghost/policy").status_code == 404
    assert client.get("/apps/com.ghost/settings").status_code == 404
    assert client.delete("/apps/com.ghost").status_code == 404


def test_remove_app(client):
    install(client)
    assert client.delete(f"/apps/{APP}").json() == {"removed": APP}
    assert client.get("/apps").json() == []


# -- policies -----------------------------------------------------------------------


def test_put_policy_updates_settings_card(client):
    install(client)
    response = client.put(
        "/policies",
        json={"app": APP, "permission": "CAMERA", "purpose": "*", "action": "Deny"},
    )
    assert response.status_code == 200
    stored = response.json()
    assert stored["action"] == "Deny" and stored["app"] == APP
    card = client.get(f"/apps/{APP}/settings").json()["cards"][0]
    assert card["action"] == "Deny"


def test_put_policy_rejects_garbage(client):
    install(client)
    bad_action = client.put(
        "/policies", json={"app": APP, "permission": "CAMERA", "action": "Maybe"}
    )
    assert bad_action.status_code == 400
    bad_perm = client.put(
        "/policies", json={"app": APP, "permission": "FLY", "action": "Deny"}
    )
    assert bad_perm.status_code == 400


def test_global_permission_view(client):
    install(client)
    client.put("/policies", json={"permission": "CAMERA", "action": "Deny"})
    client.put("/policies", json={"permission": "CAMERA", "action": "Ask"})
    view = client.get("/global/CAMERA").json()
    assert view["permission"] == "android.permission.CAMERA"
    assert [p["action"] for p in view["policies"]] == ["Ask", "Deny"]  # newest first
    assert view["apps"] == [APP]


# -- quick settings -------------------------------------------------------------------


def test_quick_settings_roundtrip(client):
    state = client.get("/quick-settings").json()
    assert state["camera"] == {"state": "On", "locked": False}
    updated = client.put("/quick-settings", json={"sensor": "camera", "state": "Off"}).json()
    assert updated["camera"]["state"] == "Off"
    assert client.put("/quick-settings", json={"sensor": "thermal", "state": "Off"}).status_code == 400


def test_org_locked_sensor_conflicts(client):
    client.post("/org-profile", json=ORG_PROFILE)
    state = client.get("/quick-settings").json()
    assert state["camera"] == {"state": "Off", "locked": True}
    response = client.put("/quick-settings", json={"sensor": "camera", "state": "On"})
    assert response.status_code == 409
    assert response.json()["error"] == "SensorLockedError"


# -- org profile ----------------------------------------------------------------------


def test_org_profile_lifecycle(client):
    assert client.get("/org-profile").json() == {"profile": None}
    created = client.post("/org-profile", json=ORG_PROFILE)
    assert created.status_code == 201
    assert client.get("/org-profile").json()["profile"]["id"] == "corp"

    other = dict(ORG_PROFILE, id="corp2")
    assert client.post("/org-profile", json=other).status_code == 409

    assert client.delete("/org-profile/corp").status_code == 403
    wrong = client.delete("/org-profile/corp", headers={"X-Admin-Token": "nope"})
    assert wrong.status_code == 403
    missing = client.delete("/org-profile/corp2", headers={"X-Admin-Token": "secret-admin"})
    assert missing.status_code == 404
    ok = client.delete("/org-profile/corp", headers={"X-Admin-Token": "secret-admin"})
    assert ok.status_code == 200
    assert client.get("/org-profile").json() == {"profile": None}


def test_org_profile_validation_error_is_400(client):
    response = client.post("/org-profile", json={"id": "x", "rules": []})
    assert response.status_code == 400


# -- requests and prompts ---------------------------------------------------------------


def test_request_decided_by_stored_policy(client):
    install(client)
    client.put("/policies", json={"app": APP, "permission": "CAMERA", "action": "Deny"})
    response = client.post("/requests", json={"app": APP, "permission": "CAMERA"}).json()
    assert response["status"] == "decided"
    assert response["decision"]["action"] == "Deny"
    assert response["decision"]["source"] == "user-policy"


def test_request_opens_prompt_and_answer_resolves(client):
    install(client)
    pending = client.post("/requests", json={"app": APP, "permission": "CAMERA"}).json()
    assert pending["status"] == "pending"
    prompt = pending["prompt"]
    assert prompt["permission"] == "android.permission.CAMERA"
    assert prompt["pending"] == 1

    listed = client.get("/prompts").json()
    assert [t["id"] for t in listed] == [prompt["id"]]

    answered = client.post(
        f"/prompts/{prompt['id']}/answer", json={"action": "Allow", "remember": "this-app"}
    ).json()
    assert [d["action"] for d in answered["decisions"]] == ["Allow"]
    assert client.get("/prompts").json() == []

    # remembered: the next request is decided without a prompt
    decided = client.post("/requests", json={"app": APP, "permission": "CAMERA"}).json()
    assert decided["status"] == "decided"
    assert decided["decision"]["source"] == "user-policy"


def test_request_attributes_purpose_from_policy_clause(client):
    install(client, declared=("ACCESS_FINE_LOCATION",), policy=[MOPUB_CLAUSE])
    pending = client.post(
        "/requests",
        json={
            "app": APP,
            "permission": "ACCESS_FINE_LOCATION",
            "class_name": "com.mopub.mobileads.MoPubView",
            "method_name": "loadAd",
        },
    ).json()
    assert pending["prompt"]["purpose"] == "Displaying Advertisements"
    assert pending["prompt"]["origin"] == "third-party:MoPub"
    assert pending["prompt"]["for"] == "Ads keep this app free."


def test_identical_requests_share_prompt(client):
    install(client)
    first = client.post("/requests", json={"app": APP, "permission": "CAMERA"}).json()
    second = client.post("/requests", json={"app": APP, "permission": "CAMERA"}).json()
    assert first["prompt"]["id"] == second["prompt"]["id"]
    assert second["prompt"]["pending"] == 2


def test_expired_prompt_is_410_and_listed_gone(client, vclock):
    install(client)
    prompt = client.post("/requests", json={"app": APP, "permission": "CAMERA"}).json()["prompt"]
    vclock.advance(120.0)
    late = client.post(f"/prompts/{prompt['id']}/answer", json={"action": "Allow"})
    assert late.status_code == 410
    assert client.get("/prompts").json() == []


def test_answering_unknown_prompt_is_404(client):
    response = client.post("/prompts/pr999/answer", json={"action": "Allow"})
    assert response.status_code == 404


def test_prompt_stream_replays_and_pushes():
    # the in-process test transport buffers whole bodies, so the unbounded
    # event stream needs a real socket
    config = Config(prompt_timeout=600.0, sse_keepalive=0.2)
    store = PolicyStore()
    engine = DecisionEngine(store, config)
    with live_server(create_app(engine=engine)) as base:
        with httpx.Client(base_url=base, timeout=5.0) as web:
            web.post("/apps", json={"app": APP, "declared": ["CAMERA", "READ_CONTACTS"]})
            existing = web.post(
                "/requests", json={"app": APP, "permission": "CAMERA"}
            ).json()["prompt"]

            events = []
            with web.stream(
                "GET", "/prompts", headers={"accept": "text/event-stream"}
            ) as stream:
                assert stream.headers["content-type"].startswith("text/event-stream")
                lines = stream.iter_lines()
                for line in lines:
                    if line.startswith("data: "):
                        events.append(json.loads(line[len("data: "):]))
                        break
                # a prompt opened while the stream is up is pushed to it
                pushed = web.post(
                    "/requests", json={"app": APP, "permission": "READ_CONTACTS"}
                ).json()["prompt"]
                for line in lines:
                    if line.startswith("data: "):
                        events.append(json.loads(line[len("data: "):]))
                        break
    assert [e["id"] for e in events] == [existing["id"], pushed["id"]]
    assert events[0]["app"] == APP


# -- notifications, reporting, scenarios ---------------------------------------------


def test_notifications_listing(client):
    install(client)
    client.put("/policies", json={"app": APP, "permission": "CAMERA", "action": "Deny"})
    for _ in range(3):
        client.post("/requests", json={"app": APP, "permission": "CAMERA"})
    notes = client.get("/notifications").json()
    assert len(notes) == 1
    assert notes[0]["count"] == 3
    assert notes[0]["silent"] is True
    assert notes[0]["deep_link"] == f"/apps/{APP}/settings#CAMERA"


def test_summary_endpoint(client, vclock):
    install(client)
    client.put("/policies", json={"app": APP, "permission": "CAMERA", "action": "Allow"})
    client.post("/requests", json={"app": APP, "permission": "CAMERA"})
    vclock.advance(10_000.0)
    client.post("/requests", json={"app": APP, "permission": "CAMERA"})
    recent = client.get("/summary", params={"window": 3600}).json()
    assert recent["apps"][0]["allowed"] == 1
    everything = client.get("/summary").json()
    assert everything["apps"][0]["allowed"] == 2


def test_recommendations_endpoint(client):
    install(client)
    assert client.get("/recommendations").json() == []


def test_scenario_run_endpoint(client):
    doc = {
        "name": "remote",
        "events": [
            {"do": "install", "at": 0.0, "app": "com.s.app", "declared": ["CAMERA"]},
            {"do": "request", "at": 1.0, "app": "com.s.app", "permission": "CAMERA"},
            {"do": "answer", "at": 2.0, "action": "Allow"},
        ],
    }
    report = client.post("/scenario/run", json=doc).json()
    assert report["mode"] == "batch"
    assert [d["action"] for d in report["decisions"]] == ["Allow"]
    # the scenario ran in its own sandbox, not against the live store
    assert client.get("/apps").json() == []


def test_taxonomy_endpoint(client):
    doc = client.get("/taxonomy").json()
    assert len(doc["permissions"]) == 26
    assert len(doc["purposes"]) == 18
    assert all(p["display"].startswith("For ") for p in doc["purposes"])
