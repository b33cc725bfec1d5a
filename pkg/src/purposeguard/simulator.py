"""Simulated-device harness: replay scripted scenarios against the engine.

A scenario is a JSON document with a list of timed events (installs, policy
edits, quick-settings toggles, access requests, prompt answers). Batch runs
drive a virtual clock, so a day of simulated traffic finishes in milliseconds
and results are exactly reproducible. Interactive runs use the real clock and
threads, exercising the same blocking path the service uses.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import replace as dc_replace
from pathlib import Path
from typing import Callable

from . import taxonomy
from .config import Config
from .engine import DecisionEngine, PermissionRequest, RememberScope
from .errors import ScenarioError
from .generator import load_library_facts
from .store import Origin, PolicyAction, PolicyStore
from .taxonomy import Taxonomy


class VirtualClock:
    """A clock that only moves when told to."""

    def __init__(self, start: float = 0.0):
        self._now = start

    def now(self) -> float:
        return self._now

    def set(self, at: float) -> None:
        if at < self._now:
            raise ValueError(f"clock cannot move backwards ({at} < {self._now})")
        self._now = at

    def advance(self, seconds: float) -> None:
        self.set(self._now + seconds)


EVENT_KINDS = {
    "install",
    "remove",
    "request",
    "policy",
    "quick",
    "org-install",
    "org-remove",
    "answer",
    "session-start",
    "snapshot",
    "wait",
}


def load_scenario(source: str | Path | dict) -> dict:
    """Read and structurally check a scenario document."""
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    events = doc.get("events")
    if not isinstance(events, list):
        raise ScenarioError("scenario needs an 'events' array")
    last_at = 0.0
    for i, event in enumerate(events):
        if not isinstance(event, dict):
            raise ScenarioError("event is not an object", i)
        kind = event.get("do")
        if kind not in EVENT_KINDS:
            raise ScenarioError(f"unknown event kind {kind!r}", i)
        at = event.get("at", last_at)
        if not isinstance(at, (int, float)) or at < last_at:
            raise ScenarioError(f"'at' must be a number and never decrease (got {at!r})", i)
        last_at = float(at)
    return doc


class ScenarioRunner:
    """Applies scenario events to a fresh store and engine."""

    def __init__(
        self,
        config: Config | None = None,
        *,
        clock: Callable[[], float] = time.time,
        tax: Taxonomy | None = None,
    ):
        self.config = config or Config()
        self.tax = tax or taxonomy.DEFAULT_TAXONOMY
        self.clock = clock
        self.store = PolicyStore(
            self.config.store_path,
            clock=clock,
            admin_token=self.config.admin_token,
            tax=self.tax,
        )
        self.engine = DecisionEngine(
            self.store,
            self.config,
            clock=clock,
            facts=load_library_facts(tax=self.tax),
            tax=self.tax,
        )
        self._request_ids = 0

    def _next_request_id(self) -> str:
        self._request_ids += 1
        return f"rq{self._request_ids}"

    def apply(self, event: dict, now: float) -> None:
        kind = event["do"]
        if kind == "install":
            embedded = None
            if event.get("policy") is not None:
                embedded = json.dumps(event["policy"]).encode("utf-8")
            self.engine.install_app(
                event["app"],
                event.get("name", event["app"]),
                [self.tax.permission(n) for n in event.get("declared", [])],
                embedded,
                category=event.get("category", ""),
            )
        elif kind == "remove":
            self.store.remove_app(event["app"])
        elif kind == "request":
            request = PermissionRequest(
                request_id=event.get("id") or self._next_request_id(),
                app_id=event["app"],
                permission=self.tax.permission(event["permission"]),
                class_name=event.get("class", ""),
                method_name=event.get("method", ""),
                purpose=(
                    self.tax.normalize_purpose(event["purpose"]) if event.get("purpose") else None
                ),
                origin=Origin.parse(event["origin"]) if event.get("origin") else None,
                at=now,
            )
            self.engine.resolve(request)
        elif kind == "policy":
            self.store.record_user_policy(
                event.get("app"),
                self.tax.permission(event["permission"]),
                (
                    self.tax.normalize_purpose(event["purpose"])
                    if event.get("purpose") not in (None, "*")
                    else None
                ),
                Origin.parse(event.get("origin", "*")),
                PolicyAction(event["action"]),
            )
        elif kind == "quick":
            self.store.set_quick_setting(event["sensor"], event["state"])
        elif kind == "org-install":
            self.store.install_org_profile(event["profile"])
        elif kind == "org-remove":
            self.store.remove_org_profile(event["profile_id"], event.get("token"))
        elif kind == "answer":
            open_prompts = sorted(self.engine.open_prompts(), key=lambda t: (t.created_at, t.id))
            if not open_prompts:
                raise ScenarioError("no open prompt to answer")
            self.engine.answer_prompt(
                event.get("prompt_id") or open_prompts[0].id,
                PolicyAction(event["action"]),
                RememberScope(event.get("remember", "none")),
                at=now,
            )
        elif kind == "session-start":
            self.engine.session_start(event["app"], at=now)
        elif kind == "snapshot":
            self.store.snapshot()
        # "wait" only moves the clock, which the caller already did.


def run_scenario(
    source: str | Path | dict,
    config: Config | None = None,
    tax: Taxonomy | None = None,
) -> dict:
    """Run a scenario on a virtual clock and report everything that happened."""
    doc = load_scenario(source)
    config = dc_replace(config or Config(), **doc.get("config", {}))
    start = float(doc.get("start_at", 0.0))
    clock = VirtualClock(start)
    runner = ScenarioRunner(config, clock=clock.now, tax=tax)

    began = time.monotonic()
    errors: list[dict] = []
    for i, event in enumerate(doc["events"]):
        at = start + float(event.get("at", clock.now() - start))
        if at > clock.now():
            clock.set(at)
        runner.engine.expire_prompts(clock.now())
        try:
            runner.apply(event, clock.now())
        except ScenarioError as exc:
            errors.append({"event": i, "error": str(exc)})
        except Exception as exc:
            errors.append({"event": i, "error": f"{type(exc).__name__}: {exc}"})

    if doc.get("flush_prompts", True):
        deadlines = [t.deadline for t in runner.engine.open_prompts()]
        if deadlines:
            clock.set(max(deadlines))
            runner.engine.expire_prompts(clock.now())

    return {
        "name": doc.get("name", ""),
        "mode": "batch",
        "started_at": start,
        "ended_at": clock.now(),
        "decisions": [d.to_dict() for d in runner.engine.decisions()],
        "notifications": [n.to_dict() for n in runner.engine.notifications()],
        "open_prompts": [t.to_dict() for t in runner.engine.open_prompts()],
        "errors": errors,
        "final_state": runner.store.state_dict(),
        "wall_seconds": time.monotonic() - began,
    }


def run_scenario_interactive(
    source: str | Path | dict,
    config: Config | None = None,
    tax: Taxonomy | None = None,
) -> dict:
    """Run a scenario in real time.

    Requests run on worker threads through the blocking entry point, so an
    unanswered prompt really does hold the requester until an answer event
    lands or the timeout hits.
    """
    doc = load_scenario(source)
    config = dc_replace(config or Config(), **doc.get("config", {}))
    runner = ScenarioRunner(config, clock=time.time, tax=tax)

    began = time.monotonic()
    start = time.time()
    errors: list[dict] = []
    lock = threading.Lock()
    workers: list[threading.Thread] = []

    def worker(request: PermissionRequest, index: int) -> None:
        try:
            runner.engine.request_access(request)
        except Exception as exc:
            with lock:
                errors.append({"event": index, "error": f"{type(exc).__name__}: {exc}"})

    for i, event in enumerate(doc["events"]):
        delay = start + float(event.get("at", 0.0)) - time.time()
        if delay > 0:
            time.sleep(delay)
        runner.engine.expire_prompts()
        try:
            if event["do"] == "request":
                request = PermissionRequest(
                    request_id=event.get("id") or runner._next_request_id(),
                    app_id=event["app"],
                    permission=runner.tax.permission(event["permission"]),
                    class_name=event.get("class", ""),
                    method_name=event.get("method", ""),
                    at=time.time(),
                )
                thread = threading.Thread(target=worker, args=(request, i), daemon=True)
                thread.start()
                workers.append(thread)
                time.sleep(0.01)  # let the request open its prompt before the next event
            else:
                runner.apply(event, time.time())
        except Exception as exc:
            with lock:
                errors.append({"event": i, "error": f"{type(exc).__name__}: {exc}"})

    for thread in workers:
        thread.join(timeout=config.prompt_timeout + 5.0)
    runner.engine.expire_prompts()

    return {
        "name": doc.get("name", ""),
        "mode": "interactive",
        "decisions": [d.to_dict() for d in runner.engine.decisions()],
        "notifications": [n.to_dict() for n in runner.engine.notifications()],
        "open_prompts": [t.to_dict() for t in runner.engine.open_prompts()],
        "errors": errors,
        "final_state": runner.store.state_dict(),
        "wall_seconds": time.monotonic() - began,
    }
