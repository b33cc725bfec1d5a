"""HTTP API for the policy manager UI and the simulated-device hooks."""

from __future__ import annotations

import json
import queue
from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .config import Config
from .engine import DecisionEngine, PermissionRequest, PromptTicket, RememberScope
from .errors import (
    AppAlreadyInstalledError,
    NotFoundError,
    ProfileConflictError,
    PromptExpiredError,
    PurposeGuardError,
    RemovalRefusedError,
    SensorLockedError,
    UnknownAppError,
    UnknownPromptError,
)
from .generator import PolicyRepository, load_library_facts
from .simulator import run_scenario, run_scenario_interactive
from .store import Origin, PolicyAction, PolicyStore, Sensor

_STATUS = {
    UnknownAppError: 404,
    NotFoundError: 404,
    UnknownPromptError: 404,
    AppAlreadyInstalledError: 409,
    ProfileConflictError: 409,
    SensorLockedError: 409,
    RemovalRefusedError: 403,
    PromptExpiredError: 410,
}


def _status_for(exc: PurposeGuardError) -> int:
    for kind, status in _STATUS.items():
        if isinstance(exc, kind):
            return status
    return 400


class InstallBody(BaseModel):
    app: str
    name: str = ""
    declared: list[str] = []
    policy: list[dict] | dict | None = None
    category: str = ""
    plan_only: bool = False


class PolicyBody(BaseModel):
    app: str | None = None
    permission: str
    purpose: str | None = None
    origin: str = "*"
    action: str


class QuickBody(BaseModel):
    sensor: str
    state: str


class AnswerBody(BaseModel):
    action: str
    remember: str = "none"


class RequestBody(BaseModel):
    app: str
    permission: str
    class_name: str = ""
    method_name: str = ""
    purpose: str | None = None
    origin: str | None = None


def create_app(
    config: Config | None = None,
    *,
    engine: DecisionEngine | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    config = config or (engine.config if engine else Config())
    if engine is None:
        store = PolicyStore(config.store_path, admin_token=config.admin_token)
        engine = DecisionEngine(
            store,
            config,
            facts=load_library_facts(),
            pregen=PolicyRepository(config.pregen_dir),
        )
    tax = engine.tax
    app = FastAPI(title="purposeguard", version="1.0")
    app.state.engine = engine
    request_counter = {"n": 0}

    @app.exception_handler(PurposeGuardError)
    async def domain_error(_request: Request, exc: PurposeGuardError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def value_error(_request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": "ValueError", "detail": str(exc)})

    # -- apps -------------------------------------------------------------

    @app.get("/apps")
    def list_apps():
        return [
            {
                "app": a.app_id,
                "name": a.name,
                "category": a.category,
                "declared": sorted(p.name for p in a.declared),
                "provenance": a.policy.provenance.value,
                "installed_at": a.installed_at,
            }
            for a in engine.store.apps()
        ]

    @app.post("/apps", status_code=201)
    def install_app(body: InstallBody):
        embedded = None
        if body.policy is not None:
            embedded = json.dumps(body.policy).encode("utf-8")
        declared = [tax.permission(n) for n in body.declared]
        if body.plan_only:
            plan, _policy = engine.plan_install(body.app, body.name or body.app, declared, embedded)
            return plan.to_dict()
        plan = engine.install_app(
            body.app, body.name or body.app, declared, embedded, category=body.category
        )
        return plan.to_dict()

    @app.get("/apps/{app_id}/policy")
    def app_policy(app_id: str):
        record = engine.store.app(app_id)
        return {
            "app": app_id,
            "provenance": record.policy.provenance.value,
            "clauses": [c.to_dict() for c in record.policy.clauses],
            "warnings": list(record.policy.warnings),
        }

    @app.get("/apps/{app_id}/settings")
    def app_settings(app_id: str):
        record = engine.store.app(app_id)
        return {
            "app": app_id,
            "name": record.name,
            "provenance": record.policy.provenance.value,
            "cards": [card.to_dict() for card in engine.settings_cards(app_id)],
        }

    @app.delete("/apps/{app_id}")
    def remove_app(app_id: str):
        engine.store.remove_app(app_id)
        return {"removed": app_id}

    # -- policies ------------------------------------------------------------

    @app.put("/policies")
    def put_policy(body: PolicyBody):
        purpose = None
        if body.purpose not in (None, "*"):
            purpose = tax.normalize_purpose(body.purpose)
        stored = engine.store.record_user_policy(
            body.app,
            tax.permission(body.permission),
            purpose,
            Origin.parse(body.origin),
            PolicyAction(body.action),
        )
        return stored.to_dict()

    @app.get("/global/{permission}")
    def global_setting(permission: str):
        perm = tax.permission(permission)
        stored = [
            p for p in engine.store.user_policies(None) if p.permission == perm
        ]
        stored.sort(key=lambda p: p.seq, reverse=True)
        return {
            "permission": perm.name,
            "display": perm.display_name,
            "group": perm.group.value,
            "policies": [p.to_dict() for p in stored],
            "apps": [
                a.app_id for a in engine.store.apps() if perm in a.declared
            ],
        }

    # -- quick settings ----------------------------------------------------

    @app.get("/quick-settings")
    def quick_settings():
        locks = engine.store.sensor_locks()
        states = engine.store.quick_settings()
        return {
            sensor.value: {"state": states[sensor].value, "locked": sensor in locks}
            for sensor in Sensor
        }

    @app.put("/quick-settings")
    def set_quick(body: QuickBody):
        engine.store.set_quick_setting(body.sensor, body.state)
        return quick_settings()

    # -- org profile ---------------------------------------------------------

    @app.get("/org-profile")
    def org_profile():
        profile = engine.store.org_profile()
        return {"profile": profile.to_dict() if profile else None}

    @app.post("/org-profile", status_code=201)
    def install_org(profile: dict):
        installed = engine.store.install_org_profile(profile)
        return installed.to_dict()

    @app.delete("/org-profile/{profile_id}")
    def remove_org(profile_id: str, x_admin_token: str | None = Header(default=None)):
        engine.store.remove_org_profile(profile_id, x_admin_token)
        return {"removed": profile_id}

    # -- notifications, prompts ------------------------------------------------

    @app.get("/notifications")
    def notifications():
        return [n.to_dict() for n in engine.notifications()]

    @app.get("/prompts")
    def prompts(request: Request):
        engine.expire_prompts()
        if "text/event-stream" not in request.headers.get("accept", ""):
            return JSONResponse([t.to_dict() for t in engine.open_prompts()])

        def stream():
            inbox: queue.Queue[PromptTicket] = queue.Queue()
            unsubscribe = engine.add_prompt_listener(inbox.put)
            seen: set[str] = set()
            try:
                for ticket in engine.open_prompts():
                    seen.add(ticket.id)
                    yield f"data: {json.dumps(ticket.to_dict())}\n\n"
                while True:
                    try:
                        ticket = inbox.get(timeout=config.sse_keepalive)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    if ticket.id in seen:
                        continue
                    seen.add(ticket.id)
                    yield f"data: {json.dumps(ticket.to_dict())}\n\n"
            finally:
                unsubscribe()

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.post("/prompts/{prompt_id}/answer")
    def answer_prompt(prompt_id: str, body: AnswerBody):
        decisions = engine.answer_prompt(
            prompt_id, PolicyAction(body.action), RememberScope(body.remember)
        )
        return {"decisions": [d.to_dict() for d in decisions]}

    # -- device hook -----------------------------------------------------------

    @app.post("/requests")
    def access_request(body: RequestBody):
        engine.expire_prompts()
        request_counter["n"] += 1
        request = PermissionRequest(
            request_id=f"http{request_counter['n']}",
            app_id=body.app,
            permission=tax.permission(body.permission),
            class_name=body.class_name,
            method_name=body.method_name,
            purpose=tax.normalize_purpose(body.purpose) if body.purpose else None,
            origin=Origin.parse(body.origin) if body.origin else None,
        )
        outcome = engine.resolve(request)
        if isinstance(outcome, PromptTicket):
            return {"status": "pending", "prompt": outcome.to_dict()}
        return {"status": "decided", "decision": outcome.to_dict()}

    # -- reporting ----------------------------------------------------------

    @app.get("/summary")
    def summary(window: float | None = None):
        return engine.usage_summary(window)

    @app.get("/recommendations")
    def recommendations():
        return [r.to_dict() for r in engine.recommendations()]

    @app.post("/scenario/run")
    def scenario_run(doc: dict):
        if doc.get("mode") == "interactive":
            return run_scenario_interactive(doc, tax=tax)
        return run_scenario(doc, tax=tax)

    # -- taxonomy (read-only reference data for the UI) -------------------------

    @app.get("/taxonomy")
    def taxonomy_view():
        return {
            "permissions": [
                {
                    "name": p.name,
                    "display": p.display_name,
                    "group": p.group.value,
                }
                for p in tax.permissions
            ],
            "purposes": [
                {
                    "name": p.name,
                    "display": p.display_name,
                    "description": p.description,
                }
                for p in tax.purposes
            ],
        }

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
