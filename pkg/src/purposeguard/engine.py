"""Decision engine: answers "may this app use this permission right now?".

Resolution walks four tiers and stops at the first that decides:

1. Org profile rules (mandatory, installed by an administrator).
2. Quick settings (a sensor toggled off denies its permissions).
3. Stored user policies; of all that match, the newest one wins. Allow and
   Deny decide, Ask falls through.
4. A runtime prompt. Unanswered prompts auto-deny after a timeout.

The engine also owns prompt lifecycle, silent notifications for automatic
decisions, the decision log behind usage summaries, and install-time policy
selection (embedded, then pre-generated, then fallback).
"""

from __future__ import annotations

import itertools
import json
import statistics
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from . import taxonomy
from .config import Config
from .errors import ParseError, PromptExpiredError, UnknownPromptError
from .generator import LibraryFact, PolicyRepository, build_fallback_policy, clause_origin
from .policy import (
    AppPolicy,
    PolicyClause,
    Provenance,
    display_for_string,
    parse_app_policy,
)
from .store import (
    FIRST_PARTY,
    InstalledApp,
    Origin,
    PolicyAction,
    PolicyStore,
    Sensor,
    SensorState,
    sensor_for_permission,
)
from .taxonomy import Permission, Purpose, Taxonomy


class RequestKind(str, Enum):
    PERMISSION = "permission"
    DATA = "data"


@dataclass(frozen=True)
class PermissionRequest:
    """One access attempt by an app, as seen by the OS hook."""

    request_id: str
    app_id: str
    permission: Permission
    class_name: str = ""
    method_name: str = ""
    # Explicit purpose override; normally left None and filled from the
    # app policy clause matching the call site.
    purpose: Purpose | None = None
    # Concrete data destination; None means classify from the call site.
    origin: Origin | None = None
    kind: RequestKind = RequestKind.PERMISSION
    at: float = 0.0


class SourceKind(str, Enum):
    ORG_PROFILE = "org-profile"
    QUICK_SETTINGS = "quick-settings"
    USER_POLICY = "user-policy"
    RUNTIME_PROMPT = "runtime-prompt"
    PROMPT_TIMEOUT = "prompt-timeout"


# Tiers whose decisions happen without the user in the loop right now; these
# are the ones worth a notification.
AUTOMATIC_SOURCES = frozenset(
    {SourceKind.ORG_PROFILE, SourceKind.QUICK_SETTINGS, SourceKind.USER_POLICY}
)


@dataclass(frozen=True)
class DecisionSource:
    kind: SourceKind
    detail: str = ""


@dataclass(frozen=True)
class Decision:
    request_id: str
    app_id: str
    permission: Permission
    purpose: Purpose
    origin: Origin
    action: PolicyAction
    source: DecisionSource
    at: float

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "app": self.app_id,
            "permission": self.permission.name,
            "purpose": self.purpose.name,
            "origin": self.origin.wire,
            "action": self.action.value,
            "source": self.source.kind.value,
            "source_detail": self.source.detail,
            "at": self.at,
        }


@dataclass
class PromptTicket:
    """An open runtime prompt. Identical pending requests coalesce into one."""

    id: str
    app_id: str
    app_name: str
    permission: Permission
    purpose: Purpose
    origin: Origin
    for_string: str
    created_at: float
    deadline: float
    request_ids: list[str] = field(default_factory=list)
    result: Decision | None = None
    _done: threading.Event = field(default_factory=threading.Event, repr=False)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.app_id, self.permission.name, self.purpose.name)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "app": self.app_id,
            "app_name": self.app_name,
            "permission": self.permission.name,
            "permission_display": self.permission.display_name,
            "purpose": self.purpose.name,
            "purpose_display": self.purpose.display_name,
            "origin": self.origin.wire,
            "for": display_for_string(self.for_string),
            "created_at": self.created_at,
            "deadline": self.deadline,
            "pending": len(self.request_ids),
        }


class RememberScope(str, Enum):
    NONE = "none"
    THIS_APP = "this-app"
    ALL_APPS = "all-apps"


@dataclass
class Notification:
    """Status-bar record of an automatic decision. Always silent; repeats
    within the suppression window bump the counter instead of re-posting."""

    id: str
    app_id: str
    permission: Permission
    purpose: Purpose
    action: PolicyAction
    source: DecisionSource
    first_at: float
    last_at: float
    count: int = 1
    silent: bool = True

    @property
    def deep_link(self) -> str:
        return f"/apps/{self.app_id}/settings#{self.permission.short_name}"

    def to_dict(self) -> dict:
        word = "allowed" if self.action is PolicyAction.ALLOW else "denied"
        return {
            "id": self.id,
            "app": self.app_id,
            "permission": self.permission.name,
            "purpose": self.purpose.name,
            "action": self.action.value,
            "source": self.source.kind.value,
            "message": (
                f"{self.permission.display_name} was automatically {word} "
                f"{self.purpose.display_name}"
            ),
            "count": self.count,
            "first_at": self.first_at,
            "last_at": self.last_at,
            "silent": self.silent,
            "deep_link": self.deep_link,
        }


@dataclass(frozen=True)
class PolicyCard:
    """One row on the install screen: a permission/purpose pair the app
    declares, with the tri-state control the user can set."""

    permission: Permission
    purpose: Purpose
    origin: Origin
    for_strings: tuple[str, ...]
    action: PolicyAction = PolicyAction.ASK
    locked: bool = False

    def to_dict(self) -> dict:
        return {
            "permission": self.permission.name,
            "permission_display": self.permission.display_name,
            "group": self.permission.group.value,
            "purpose": self.purpose.name,
            "purpose_display": self.purpose.display_name,
            "origin": self.origin.wire,
            "for": [display_for_string(s) for s in self.for_strings if s],
            "action": self.action.value,
            "locked": self.locked,
        }


@dataclass(frozen=True)
class InstallPlan:
    app_id: str
    name: str
    provenance: Provenance
    cards: tuple[PolicyCard, ...]
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "app": self.app_id,
            "name": self.name,
            "provenance": self.provenance.value,
            "cards": [card.to_dict() for card in self.cards],
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class Recommendation:
    kind: str
    app_id: str
    message: str
    permission: Permission | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "app": self.app_id,
            "permission": self.permission.name if self.permission else None,
            "message": self.message,
        }


def load_blacklist(path: str | Path | None = None) -> frozenset[str]:
    """App ids of known stalking apps; '#' comments and blank lines skipped."""
    if path is None:
        from importlib import resources

        text = resources.files("purposeguard.data").joinpath("spouseware_blacklist.txt").read_text(
            "utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.add(line)
    return frozenset(entries)


class DecisionEngine:
    """Ties the store, taxonomy, and generation data into one decision point."""

    def __init__(
        self,
        store: PolicyStore,
        config: Config | None = None,
        *,
        clock: Callable[[], float] = time.time,
        facts: Iterable[LibraryFact] = (),
        pregen: PolicyRepository | None = None,
        blacklist: frozenset[str] | None = None,
        tax: Taxonomy | None = None,
    ):
        self.store = store
        self.config = config or Config()
        self.clock = clock
        self.facts = tuple(facts)
        self.pregen = pregen or PolicyRepository(self.config.pregen_dir)
        self.blacklist = blacklist if blacklist is not None else load_blacklist(
            self.config.blacklist_path
        )
        self.tax = tax or taxonomy.DEFAULT_TAXONOMY
        self._lock = threading.RLock()
        self._decisions: list[Decision] = []
        self._notifications: list[Notification] = []
        # (app, permission, purpose, source kind, action) -> (notification, window start)
        self._suppression: dict[tuple, tuple[Notification, float]] = {}
        self._prompts: dict[str, PromptTicket] = {}
        self._prompt_listeners: list[Callable[[PromptTicket], None]] = []
        self._ids = itertools.count(1)
        self._audit = None
        if self.config.audit_path:
            Path(self.config.audit_path).parent.mkdir(parents=True, exist_ok=True)
            self._audit = open(self.config.audit_path, "a", encoding="utf-8")

    def close(self) -> None:
        if self._audit is not None:
            self._audit.close()
            self._audit = None

    # -- install ------------------------------------------------------------

    def select_policy(
        self,
        app_id: str,
        declared: frozenset[Permission],
        embedded: bytes | None,
    ) -> AppPolicy:
        """Pick the best available policy: embedded beats pre-generated beats
        the synthesized fallback. A broken embedded document demotes the app
        to the next tier rather than blocking the install."""
        warnings: list[str] = []
        if embedded is not None:
            try:
                policy = parse_app_policy(embedded, app_id, Provenance.DEVELOPER_EMBEDDED)
                return policy
            except ParseError as exc:
                warnings.append(f"embedded policy rejected: {exc}")
        pregen = self.pregen.lookup(app_id)
        if pregen is not None:
            try:
                policy = parse_app_policy(pregen, app_id, Provenance.PRE_GENERATED)
                return AppPolicy(
                    app_id=policy.app_id,
                    clauses=policy.clauses,
                    provenance=policy.provenance,
                    warnings=tuple(warnings) + policy.warnings,
                )
            except ParseError as exc:
                warnings.append(f"pre-generated policy rejected: {exc}")
        policy = build_fallback_policy(app_id, declared, self.tax)
        return AppPolicy(
            app_id=policy.app_id,
            clauses=policy.clauses,
            provenance=policy.provenance,
            warnings=tuple(warnings),
        )

    def plan_install(
        self,
        app_id: str,
        name: str,
        declared: Iterable[Permission],
        embedded: bytes | None = None,
    ) -> tuple[InstallPlan, AppPolicy]:
        declared = frozenset(declared)
        policy = self.select_policy(app_id, declared, embedded)
        cards = self._cards_for(app_id, policy)
        plan = InstallPlan(
            app_id=app_id,
            name=name,
            provenance=policy.provenance,
            cards=cards,
            warnings=policy.warnings,
        )
        return plan, policy

    def install_app(
        self,
        app_id: str,
        name: str,
        declared: Iterable[Permission],
        embedded: bytes | None = None,
        category: str = "",
    ) -> InstallPlan:
        declared = frozenset(declared)
        plan, policy = self.plan_install(app_id, name, declared, embedded)
        self.store.install_app(app_id, name, declared, policy, category=category)
        return plan

    def _cards_for(self, app_id: str, policy: AppPolicy) -> tuple[PolicyCard, ...]:
        grouped: dict[tuple[str, str, str], list[PolicyClause]] = {}
        order: list[tuple[str, str, str]] = []
        origins: dict[tuple[str, str, str], Origin] = {}
        for clause in policy.clauses:
            origin = clause_origin(clause, self.facts)
            key = (clause.uses.name, clause.purpose.name, origin.wire)
            if key not in grouped:
                grouped[key] = []
                order.append(key)
                origins[key] = origin
            grouped[key].append(clause)
        cards = []
        for key in order:
            clauses = grouped[key]
            first = clauses[0]
            origin = origins[key]
            rule = self.store.org_rule_for(app_id, first.uses, first.purpose, origin)
            cards.append(
                PolicyCard(
                    permission=first.uses,
                    purpose=first.purpose,
                    origin=origin,
                    for_strings=tuple(dict.fromkeys(c.for_string for c in clauses)),
                    action=rule.action if rule else PolicyAction.ASK,
                    locked=rule is not None,
                )
            )
        return tuple(cards)

    def settings_cards(self, app_id: str) -> tuple[PolicyCard, ...]:
        """Cards for the app settings screen, reflecting stored policies."""
        app = self.store.app(app_id)
        cards = []
        for card in self._cards_for(app_id, app.policy):
            if card.locked:
                cards.append(card)
                continue
            newest = self.store.newest_matching_policy(
                app_id, card.permission, card.purpose, card.origin
            )
            if newest is not None:
                card = PolicyCard(
                    permission=card.permission,
                    purpose=card.purpose,
                    origin=card.origin,
                    for_strings=card.for_strings,
                    action=newest.action,
                    locked=False,
                )
            cards.append(card)
        return tuple(cards)

    # -- purpose attribution -------------------------------------------------

    def attribute(self, app: InstalledApp, request: PermissionRequest) -> tuple[Purpose, Origin, PolicyClause | None]:
        """Fill in purpose and origin for a request from the app's policy.

        The most specific clause matching the call site wins; with no match
        the access runs under the fallback purpose.
        """
        clause = None
        if request.purpose is None or request.origin is None:
            candidates = [
                c
                for c in app.policy.clauses_for(request.permission)
                if c.matches_site(request.class_name, request.method_name)
            ]
            if candidates:
                best = max(range(len(candidates)), key=lambda i: (candidates[i].site_specificity(), -i))
                clause = candidates[best]
        purpose = request.purpose
        if purpose is None:
            purpose = clause.purpose if clause else self.tax.purpose(taxonomy.FALLBACK_PURPOSE_NAME)
        origin = request.origin
        if origin is None:
            origin = clause_origin(clause, self.facts) if clause else FIRST_PARTY
        return purpose, origin, clause

    # -- resolution -----------------------------------------------------------

    def resolve(self, request: PermissionRequest) -> Decision | PromptTicket:
        """Walk the tiers for one request.

        Returns a Decision when some tier decides, or the (possibly shared)
        PromptTicket when the user has to be asked.
        """
        with self._lock:
            now = request.at or self.clock()
            app = self.store.app(request.app_id)
            purpose, origin, clause = self.attribute(app, request)

            rule = self.store.org_rule_for(request.app_id, request.permission, purpose, origin)
            if rule is not None:
                profile = self.store.org_profile()
                return self._decide(
                    request,
                    purpose,
                    origin,
                    rule.action,
                    DecisionSource(SourceKind.ORG_PROFILE, profile.id if profile else ""),
                    now,
                )

            sensor = sensor_for_permission(request.permission)
            if sensor is not None and self.store.quick_settings()[sensor] is SensorState.OFF:
                return self._decide(
                    request,
                    purpose,
                    origin,
                    PolicyAction.DENY,
                    DecisionSource(SourceKind.QUICK_SETTINGS, sensor.value),
                    now,
                )

            newest = self.store.newest_matching_policy(
                request.app_id, request.permission, purpose, origin
            )
            if newest is not None and newest.action is not PolicyAction.ASK:
                return self._decide(
                    request,
                    purpose,
                    origin,
                    newest.action,
                    DecisionSource(SourceKind.USER_POLICY, newest.id),
                    now,
                )

            return self._open_prompt(app, request, purpose, origin, clause, now)

    def _decide(
        self,
        request: PermissionRequest,
        purpose: Purpose,
        origin: Origin,
        action: PolicyAction,
        source: DecisionSource,
        now: float,
    ) -> Decision:
        decision = Decision(
            request_id=request.request_id,
            app_id=request.app_id,
            permission=request.permission,
            purpose=purpose,
            origin=origin,
            action=action,
            source=source,
            at=now,
        )
        self._decisions.append(decision)
        if self._audit is not None:
            self._audit.write(json.dumps(decision.to_dict(), ensure_ascii=False) + "\n")
            self._audit.flush()
        if source.kind in AUTOMATIC_SOURCES:
            self._notify(decision)
        return decision

    # -- prompts ---------------------------------------------------------------

    def _open_prompt(
        self,
        app: InstalledApp,
        request: PermissionRequest,
        purpose: Purpose,
        origin: Origin,
        clause: PolicyClause | None,
        now: float,
    ) -> PromptTicket:
        key = (request.app_id, request.permission.name, purpose.name)
        for ticket in self._prompts.values():
            if ticket.key == key and ticket.result is None:
                ticket.request_ids.append(request.request_id)
                return ticket
        ticket = PromptTicket(
            id=f"pr{next(self._ids)}",
            app_id=request.app_id,
            app_name=app.name,
            permission=request.permission,
            purpose=purpose,
            origin=origin,
            for_string=clause.for_string if clause else "",
            created_at=now,
            deadline=now + self.config.prompt_timeout,
            request_ids=[request.request_id],
        )
        self._prompts[ticket.id] = ticket
        for listener in list(self._prompt_listeners):
            listener(ticket)
        return ticket

    def open_prompts(self) -> list[PromptTicket]:
        with self._lock:
            return [t for t in self._prompts.values() if t.result is None]

    def add_prompt_listener(self, listener: Callable[[PromptTicket], None]) -> Callable[[], None]:
        with self._lock:
            self._prompt_listeners.append(listener)

        def unsubscribe() -> None:
            with self._lock:
                if listener in self._prompt_listeners:
                    self._prompt_listeners.remove(listener)

        return unsubscribe

    def answer_prompt(
        self,
        prompt_id: str,
        action: PolicyAction,
        remember: RememberScope = RememberScope.NONE,
        at: float | None = None,
    ) -> list[Decision]:
        """Apply the user's answer to an open prompt.

        With a remember scope the answer is also stored as a user policy for
        this app or all apps, so the next identical access skips the prompt.
        """
        with self._lock:
            now = at if at is not None else self.clock()
            ticket = self._prompts.get(prompt_id)
            if ticket is None or ticket.result is not None:
                raise UnknownPromptError(prompt_id)
            if now > ticket.deadline:
                self._expire(ticket, ticket.deadline)
                raise PromptExpiredError(prompt_id)
            if action is PolicyAction.ASK:
                raise ValueError("a prompt answer must be Allow or Deny")

            detail = ticket.id
            if remember is not RememberScope.NONE:
                stored = self.store.record_user_policy(
                    ticket.app_id if remember is RememberScope.THIS_APP else None,
                    ticket.permission,
                    ticket.purpose,
                    ticket.origin,
                    action,
                )
                detail = f"{ticket.id}:{stored.id}"

            decisions = [
                self._decide(
                    PermissionRequest(
                        request_id=request_id,
                        app_id=ticket.app_id,
                        permission=ticket.permission,
                        at=now,
                    ),
                    ticket.purpose,
                    ticket.origin,
                    action,
                    DecisionSource(SourceKind.RUNTIME_PROMPT, detail),
                    now,
                )
                for request_id in ticket.request_ids
            ]
            ticket.result = decisions[0]
            ticket._done.set()
            del self._prompts[prompt_id]
            return decisions

    def _expire(self, ticket: PromptTicket, now: float) -> list[Decision]:
        decisions = [
            self._decide(
                PermissionRequest(
                    request_id=request_id,
                    app_id=ticket.app_id,
                    permission=ticket.permission,
                    at=now,
                ),
                ticket.purpose,
                ticket.origin,
                PolicyAction.DENY,
                DecisionSource(SourceKind.PROMPT_TIMEOUT, ticket.id),
                now,
            )
            for request_id in ticket.request_ids
        ]
        ticket.result = decisions[0]
        ticket._done.set()
        self._prompts.pop(ticket.id, None)
        return decisions

    def expire_prompts(self, now: float | None = None) -> list[Decision]:
        """Auto-deny every prompt whose deadline has passed."""
        with self._lock:
            now = now if now is not None else self.clock()
            expired = [t for t in self._prompts.values() if t.result is None and now >= t.deadline]
            decisions: list[Decision] = []
            for ticket in expired:
                decisions.extend(self._expire(ticket, ticket.deadline))
            return decisions

    def request_access(self, request: PermissionRequest) -> Decision:
        """Blocking entry point for OS hooks: resolve, and if that opens a
        prompt, wait for the answer or the timeout."""
        outcome = self.resolve(request)
        if isinstance(outcome, Decision):
            return outcome
        ticket = outcome
        remaining = max(0.0, ticket.deadline - self.clock())
        if not ticket._done.wait(timeout=remaining):
            with self._lock:
                if ticket.result is None:
                    self._expire(ticket, ticket.deadline)
        for decision in self._decisions[::-1]:
            if decision.request_id == request.request_id:
                return decision
        raise RuntimeError(f"no decision recorded for {request.request_id}")

    # -- notifications ---------------------------------------------------------

    def _notify(self, decision: Decision) -> None:
        key = (
            decision.app_id,
            decision.permission.name,
            decision.purpose.name,
            decision.source.kind,
            decision.action,
        )
        window = self.config.suppression_window
        entry = self._suppression.get(key)
        if entry is not None:
            notification, started = entry
            if decision.at - started < window:
                notification.count += 1
                notification.last_at = decision.at
                return
        notification = Notification(
            id=f"nt{next(self._ids)}",
            app_id=decision.app_id,
            permission=decision.permission,
            purpose=decision.purpose,
            action=decision.action,
            source=decision.source,
            first_at=decision.at,
            last_at=decision.at,
        )
        self._notifications.append(notification)
        self._suppression[key] = (notification, decision.at)

    def notifications(self) -> list[Notification]:
        with self._lock:
            return list(self._notifications)

    def session_start(self, app_id: str, at: float | None = None) -> None:
        """A fresh app session resets suppression, so the first automatic
        decision of the session notifies again."""
        with self._lock:
            self._suppression = {
                key: value for key, value in self._suppression.items() if key[0] != app_id
            }

    # -- reporting ---------------------------------------------------------------

    def decisions(self) -> list[Decision]:
        with self._lock:
            return list(self._decisions)

    def usage_summary(self, window: float | None = None, now: float | None = None) -> dict:
        """Per-app access counts over a trailing window."""
        with self._lock:
            now = now if now is not None else self.clock()
            window = window if window is not None else self.config.summary_window
            cutoff = now - window
            apps: dict[str, dict] = {}
            for decision in self._decisions:
                if decision.at < cutoff:
                    continue
                app = apps.setdefault(
                    decision.app_id,
                    {"app": decision.app_id, "allowed": 0, "denied": 0, "prompted": 0, "permissions": {}},
                )
                if decision.action is PolicyAction.ALLOW:
                    app["allowed"] += 1
                else:
                    app["denied"] += 1
                if decision.source.kind in (SourceKind.RUNTIME_PROMPT, SourceKind.PROMPT_TIMEOUT):
                    app["prompted"] += 1
                per = app["permissions"].setdefault(
                    decision.permission.name, {"allowed": 0, "denied": 0}
                )
                per["allowed" if decision.action is PolicyAction.ALLOW else "denied"] += 1
            return {
                "window": window,
                "since": cutoff,
                "apps": [apps[k] for k in sorted(apps)],
            }

    def recommendations(self, now: float | None = None) -> list[Recommendation]:
        """Things worth the user's attention: apps on the stalking-app list
        and apps using a permission far more than peers in their category."""
        with self._lock:
            now = now if now is not None else self.clock()
            cutoff = now - self.config.recommendation_window
            results: list[Recommendation] = []

            for app in self.store.apps():
                if app.app_id in self.blacklist:
                    results.append(
                        Recommendation(
                            kind="blacklisted-app",
                            app_id=app.app_id,
                            message=(
                                f"{app.name or app.app_id} matches a known stalking-app "
                                "signature; consider removing it"
                            ),
                        )
                    )

            counts: dict[tuple[str, str], int] = {}
            for decision in self._decisions:
                if decision.at >= cutoff and decision.action is PolicyAction.ALLOW:
                    key = (decision.app_id, decision.permission.name)
                    counts[key] = counts.get(key, 0) + 1

            by_category: dict[tuple[str, str], list[int]] = {}
            categories = {app.app_id: app.category for app in self.store.apps()}
            for (app_id, perm_name), count in counts.items():
                category = categories.get(app_id, "")
                by_category.setdefault((category, perm_name), []).append(count)

            for (app_id, perm_name), count in sorted(counts.items()):
                category = categories.get(app_id, "")
                peers = by_category[(category, perm_name)]
                median = statistics.median(peers)
                if median > 0 and count > self.config.outlier_factor * median:
                    permission = self.tax.permission(perm_name)
                    results.append(
                        Recommendation(
                            kind="frequency-outlier",
                            app_id=app_id,
                            permission=permission,
                            message=(
                                f"{app_id} used {permission.display_name} {count} times, far "
                                f"above the {category or 'overall'} median of {median:g}"
                            ),
                        )
                    )
            return results
