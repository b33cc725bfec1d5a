"""Durable settings store backed by an append-only event log.

Every mutation (app install, user policy change, quick-settings toggle, org
profile install or removal) is one JSON line ``{"seq", "at", "type", "data"}``.
State is rebuilt by replaying the log, so a store reopened from disk is
indistinguishable from one that never closed. A single monotonic sequence
counter orders all events and doubles as the timestamp that decides which of
two user policies is newer.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from . import taxonomy
from .errors import (
    AppAlreadyInstalledError,
    CorruptLogError,
    NotFoundError,
    ProfileConflictError,
    ProfileValidationError,
    RemovalRefusedError,
    SensorLockedError,
    UnknownAppError,
    UnknownSensorError,
)
from .policy import AppPolicy, PolicyClause, Provenance
from .taxonomy import Permission, Purpose, Taxonomy


class PolicyAction(str, Enum):
    ALLOW = "Allow"
    DENY = "Deny"
    ASK = "Ask"


class Sensor(str, Enum):
    CAMERA = "camera"
    LOCATION = "location"
    MICROPHONE = "microphone"


class SensorState(str, Enum):
    ON = "On"
    OFF = "Off"


# Permissions gated by each quick-settings sensor toggle.
SENSOR_PERMISSIONS: dict[Sensor, frozenset[str]] = {
    Sensor.CAMERA: frozenset({"android.permission.CAMERA"}),
    Sensor.LOCATION: frozenset(
        {
            "android.permission.ACCESS_FINE_LOCATION",
            "android.permission.ACCESS_COARSE_LOCATION",
        }
    ),
    Sensor.MICROPHONE: frozenset({"android.permission.RECORD_AUDIO"}),
}


def sensor_for_permission(permission: Permission) -> Sensor | None:
    for sensor, names in SENSOR_PERMISSIONS.items():
        if permission.name in names:
            return sensor
    return None


class OriginKind(str, Enum):
    ANY = "any"
    FIRST_PARTY = "first-party"
    THIRD_PARTY = "third-party"


@dataclass(frozen=True)
class Origin:
    """Where accessed data flows: kept by the app or sent to a named third party."""

    kind: OriginKind = OriginKind.ANY
    destination: str = ""

    def __post_init__(self):
        if self.destination and self.kind is not OriginKind.THIRD_PARTY:
            raise ValueError("only third-party origins carry a destination")

    @property
    def wire(self) -> str:
        if self.kind is OriginKind.ANY:
            return "*"
        if self.kind is OriginKind.THIRD_PARTY and self.destination:
            return f"third-party:{self.destination}"
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> "Origin":
        if text in ("*", "", "any"):
            return cls(OriginKind.ANY)
        if text == "first-party":
            return cls(OriginKind.FIRST_PARTY)
        if text == "third-party":
            return cls(OriginKind.THIRD_PARTY)
        if text.startswith("third-party:"):
            return cls(OriginKind.THIRD_PARTY, text.split(":", 1)[1])
        raise ValueError(f"unrecognized origin {text!r}")

    def matches(self, concrete: "Origin") -> bool:
        """True when this (possibly broad) origin covers a concrete one."""
        if self.kind is OriginKind.ANY:
            return True
        if self.kind is not concrete.kind:
            return False
        return not self.destination or self.destination == concrete.destination


ANY_ORIGIN = Origin(OriginKind.ANY)
FIRST_PARTY = Origin(OriginKind.FIRST_PARTY)


def third_party(destination: str = "") -> Origin:
    return Origin(OriginKind.THIRD_PARTY, destination)


@dataclass(frozen=True)
class UserPolicy:
    """One stored tri-state setting. app_id None means it applies to all apps."""

    id: str
    app_id: str | None
    permission: Permission
    purpose: Purpose | None
    origin: Origin
    action: PolicyAction
    seq: int
    at: float

    def matches(self, app_id: str, permission: Permission, purpose: Purpose, origin: Origin) -> bool:
        if self.app_id is not None and self.app_id != app_id:
            return False
        if self.permission != permission:
            return False
        if self.purpose is not None and self.purpose != purpose:
            return False
        return self.origin.matches(origin)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "app": self.app_id,
            "permission": self.permission.name,
            "purpose": self.purpose.name if self.purpose else None,
            "origin": self.origin.wire,
            "action": self.action.value,
            "seq": self.seq,
            "at": self.at,
        }


@dataclass(frozen=True)
class OrgRule:
    app_id: str | None
    permission: Permission
    purpose: Purpose | None
    origin: Origin
    action: PolicyAction

    def matches(self, app_id: str, permission: Permission, purpose: Purpose, origin: Origin) -> bool:
        if self.app_id is not None and self.app_id != app_id:
            return False
        if self.permission != permission:
            return False
        if self.purpose is not None and self.purpose != purpose:
            return False
        return self.origin.matches(origin)

    @property
    def is_blanket(self) -> bool:
        """Covers every app, purpose, and origin for its permission."""
        return self.app_id is None and self.purpose is None and self.origin.kind is OriginKind.ANY

    def to_dict(self) -> dict:
        return {
            "app": self.app_id if self.app_id is not None else "*",
            "permission": self.permission.name,
            "purpose": self.purpose.name if self.purpose else "*",
            "origin": self.origin.wire,
            "action": self.action.value,
        }


@dataclass(frozen=True)
class OrgProfile:
    id: str
    name: str
    issuer: str
    rules: tuple[OrgRule, ...]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "issuer": self.issuer,
            "rules": [rule.to_dict() for rule in self.rules],
        }


def parse_org_profile(doc: dict, tax: Taxonomy | None = None) -> OrgProfile:
    """Build an OrgProfile from its JSON form, rejecting malformed rules."""
    tax = tax or taxonomy.DEFAULT_TAXONOMY
    if not isinstance(doc, dict):
        raise ProfileValidationError("profile must be an object")
    profile_id = doc.get("id")
    if not profile_id or not isinstance(profile_id, str):
        raise ProfileValidationError("profile needs a string 'id'")
    rules_doc = doc.get("rules")
    if not isinstance(rules_doc, list) or not rules_doc:
        raise ProfileValidationError("profile needs a non-empty 'rules' array")

    rules = []
    for i, rule in enumerate(rules_doc):
        if not isinstance(rule, dict):
            raise ProfileValidationError(f"rule {i} is not an object")
        try:
            action = PolicyAction(rule.get("action"))
        except ValueError:
            raise ProfileValidationError(f"rule {i}: action must be Allow or Deny") from None
        if action is PolicyAction.ASK:
            raise ProfileValidationError(f"rule {i}: org rules cannot be Ask")
        try:
            permission = tax.permission(rule.get("permission", ""))
        except Exception as exc:
            raise ProfileValidationError(f"rule {i}: {exc}") from None
        app_id = rule.get("app", "*")
        purpose_name = rule.get("purpose", "*")
        try:
            purpose = None if purpose_name in ("*", None) else tax.normalize_purpose(purpose_name)
        except Exception as exc:
            raise ProfileValidationError(f"rule {i}: {exc}") from None
        try:
            origin = Origin.parse(rule.get("origin", "*"))
        except ValueError as exc:
            raise ProfileValidationError(f"rule {i}: {exc}") from None
        rules.append(
            OrgRule(
                app_id=None if app_id in ("*", None) else app_id,
                permission=permission,
                purpose=purpose,
                origin=origin,
                action=action,
            )
        )
    return OrgProfile(
        id=profile_id,
        name=str(doc.get("name", profile_id)),
        issuer=str(doc.get("issuer", "")),
        rules=tuple(rules),
    )


def derive_sensor_locks(profile: OrgProfile | None) -> dict[Sensor, SensorState]:
    """Sensor toggles pinned by blanket org rules; first rule per sensor wins."""
    locks: dict[Sensor, SensorState] = {}
    if profile is None:
        return locks
    for rule in profile.rules:
        if not rule.is_blanket:
            continue
        sensor = sensor_for_permission(rule.permission)
        if sensor is None or sensor in locks:
            continue
        locks[sensor] = SensorState.ON if rule.action is PolicyAction.ALLOW else SensorState.OFF
    return locks


@dataclass(frozen=True)
class InstalledApp:
    app_id: str
    name: str
    category: str
    declared: frozenset[Permission]
    policy: AppPolicy
    installed_at: float

    def to_dict(self) -> dict:
        return {
            "app": self.app_id,
            "name": self.name,
            "category": self.category,
            "declared": sorted(p.name for p in self.declared),
            "policy": {
                "provenance": self.policy.provenance.value,
                "clauses": [c.to_dict() for c in self.policy.clauses],
                "warnings": list(self.policy.warnings),
            },
            "installed_at": self.installed_at,
        }


class PolicyStore:
    """All device settings state, with optional durability.

    With ``path`` set, events append to an LDJSON log and the constructor
    replays any existing log. Without it the store is memory-only but behaves
    identically. One internal lock serializes writers; reads of rebuilt state
    are plain attribute access.
    """

    def __init__(
        self,
        path: str | Path | None = None,
        *,
        clock: Callable[[], float] = time.time,
        admin_token: str | None = None,
        tax: Taxonomy | None = None,
    ):
        self._path = Path(path) if path else None
        self._clock = clock
        self._admin_token = admin_token
        self._tax = tax or taxonomy.DEFAULT_TAXONOMY
        self._lock = threading.RLock()
        self._seq = 0
        self._apps: dict[str, InstalledApp] = {}
        self._policies: list[UserPolicy] = []
        self._quick: dict[Sensor, SensorState] = {s: SensorState.ON for s in Sensor}
        self._locks: dict[Sensor, SensorState] = {}
        self._org: OrgProfile | None = None
        self._log = None
        if self._path is not None:
            if self._path.exists():
                self._replay()
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._log = open(self._path, "a", encoding="utf-8")

    # -- log plumbing ------------------------------------------------------

    def _replay(self) -> None:
        offset = 0
        with open(self._path, "rb") as fh:
            for line in fh:
                stripped = line.strip()
                if stripped:
                    try:
                        event = json.loads(stripped)
                    except json.JSONDecodeError as exc:
                        raise CorruptLogError(offset, f"bad JSON: {exc.msg}") from None
                    if not isinstance(event, dict) or not {"seq", "at", "type", "data"} <= set(event):
                        raise CorruptLogError(offset, "event missing required fields")
                    if event["seq"] <= self._seq:
                        raise CorruptLogError(
                            offset, f"sequence {event['seq']} not after {self._seq}"
                        )
                    self._apply(event)
                offset += len(line)

    def _record(self, type_: str, data: dict) -> dict:
        event = {"seq": self._seq + 1, "at": self._clock(), "type": type_, "data": data}
        if self._log is not None:
            self._log.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._log.flush()
        self._apply(event)
        return event

    def _apply(self, event: dict) -> None:
        data = event["data"]
        type_ = event["type"]
        if type_ == "app_installed":
            self._apps[data["app"]] = self._app_from_dict(data)
        elif type_ == "app_removed":
            self._apps.pop(data["app"], None)
            self._policies = [p for p in self._policies if p.app_id != data["app"]]
        elif type_ == "user_policy":
            self._policies.append(self._policy_from_dict(data))
        elif type_ == "quick_setting":
            self._quick[Sensor(data["sensor"])] = SensorState(data["state"])
        elif type_ == "org_installed":
            self._org = parse_org_profile(data["profile"], self._tax)
            self._derive_locks()
        elif type_ == "org_removed":
            self._org = None
            self._locks = {}
        elif type_ == "snapshot":
            self._restore(data["state"])
        else:
            raise CorruptLogError(0, f"unknown event type {type_!r}")
        self._seq = event["seq"]

    def _derive_locks(self) -> None:
        """Blanket org rules on sensor permissions pin the matching toggle."""
        self._locks = derive_sensor_locks(self._org)
        for sensor, state in self._locks.items():
            self._quick[sensor] = state

    def _app_from_dict(self, data: dict) -> InstalledApp:
        pol = data["policy"]
        clauses = tuple(
            PolicyClause(
                uses=self._tax.permission(c["uses"]),
                purpose=self._tax.normalize_purpose(c["purpose"]),
                class_pattern=c["class"],
                method_pattern=c["method"],
                for_string=c["for"],
            )
            for c in pol["clauses"]
        )
        return InstalledApp(
            app_id=data["app"],
            name=data["name"],
            category=data.get("category", ""),
            declared=frozenset(self._tax.permission(n) for n in data["declared"]),
            policy=AppPolicy(
                app_id=data["app"],
                clauses=clauses,
                provenance=Provenance(pol["provenance"]),
                warnings=tuple(pol.get("warnings", ())),
            ),
            installed_at=data["installed_at"],
        )

    def _policy_from_dict(self, data: dict) -> UserPolicy:
        return UserPolicy(
            id=data["id"],
            app_id=data["app"],
            permission=self._tax.permission(data["permission"]),
            purpose=self._tax.normalize_purpose(data["purpose"]) if data["purpose"] else None,
            origin=Origin.parse(data["origin"]),
            action=PolicyAction(data["action"]),
            seq=data["seq"],
            at=data["at"],
        )

    def _restore(self, state: dict) -> None:
        self._apps = {app_id: self._app_from_dict(d) for app_id, d in state["apps"].items()}
        self._policies = [self._policy_from_dict(d) for d in state["user_policies"]]
        self._quick = {
            Sensor(name): SensorState(value) for name, value in state["quick_settings"].items()
        }
        self._org = (
            parse_org_profile(state["org_profile"], self._tax) if state["org_profile"] else None
        )
        # Quick values in the snapshot already reflect any locks, so only the
        # lock table itself needs rebuilding.
        self._locks = derive_sensor_locks(self._org)

    # -- state -------------------------------------------------------------

    def state_dict(self) -> dict:
        """Full state in JSON form; equal dicts mean equal stores."""
        with self._lock:
            return {
                "seq": self._seq,
                "apps": {app_id: app.to_dict() for app_id, app in sorted(self._apps.items())},
                "user_policies": [p.to_dict() for p in self._policies],
                "quick_settings": {s.value: self._quick[s].value for s in Sensor},
                "org_profile": self._org.to_dict() if self._org else None,
            }

    def snapshot(self) -> None:
        """Write current state as one event so older log lines can be dropped."""
        with self._lock:
            event = {
                "seq": self._seq + 1,
                "at": self._clock(),
                "type": "snapshot",
                "data": {"state": self.state_dict()},
            }
            if self._log is not None:
                self._log.close()
                with open(self._path, "w", encoding="utf-8") as fh:
                    fh.write(json.dumps(event, ensure_ascii=False) + "\n")
                self._log = open(self._path, "a", encoding="utf-8")
            self._seq = event["seq"]

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
            self._log = None

    @property
    def seq(self) -> int:
        return self._seq

    def now(self) -> float:
        return self._clock()

    # -- apps ----------------------------------------------------------------

    def install_app(
        self,
        app_id: str,
        name: str,
        declared: Iterable[Permission],
        policy: AppPolicy,
        category: str = "",
    ) -> InstalledApp:
        with self._lock:
            if app_id in self._apps:
                raise AppAlreadyInstalledError(app_id)
            record = InstalledApp(
                app_id=app_id,
                name=name,
                category=category,
                declared=frozenset(declared),
                policy=policy,
                installed_at=self._clock(),
            )
            self._record("app_installed", record.to_dict())
            return self._apps[app_id]

    def remove_app(self, app_id: str) -> None:
        with self._lock:
            if app_id not in self._apps:
                raise UnknownAppError(app_id)
            self._record("app_removed", {"app": app_id})

    def app(self, app_id: str) -> InstalledApp:
        found = self._apps.get(app_id)
        if found is None:
            raise UnknownAppError(app_id)
        return found

    def has_app(self, app_id: str) -> bool:
        return app_id in self._apps

    def apps(self) -> list[InstalledApp]:
        return sorted(self._apps.values(), key=lambda a: a.app_id)

    # -- user policies ---------------------------------------------------

    def record_user_policy(
        self,
        app_id: str | None,
        permission: Permission,
        purpose: Purpose | None,
        origin: Origin,
        action: PolicyAction,
    ) -> UserPolicy:
        with self._lock:
            if app_id is not None and app_id not in self._apps:
                raise UnknownAppError(app_id)
            seq = self._seq + 1
            data = UserPolicy(
                id=f"up{seq}",
                app_id=app_id,
                permission=permission,
                purpose=purpose,
                origin=origin,
                action=action,
                seq=seq,
                at=self._clock(),
            ).to_dict()
            self._record("user_policy", data)
            return self._policies[-1]

    def user_policies(self, app_id: str | None = ...) -> list[UserPolicy]:
        """Stored policies oldest-first; pass app_id (or None for global-only) to filter."""
        if app_id is ...:
            return list(self._policies)
        return [p for p in self._policies if p.app_id == app_id]

    def matching_policies(
        self, app_id: str, permission: Permission, purpose: Purpose, origin: Origin
    ) -> list[UserPolicy]:
        """Policies covering the given access, newest first."""
        found = [p for p in self._policies if p.matches(app_id, permission, purpose, origin)]
        found.sort(key=lambda p: p.seq, reverse=True)
        return found

    def newest_matching_policy(
        self, app_id: str, permission: Permission, purpose: Purpose, origin: Origin
    ) -> UserPolicy | None:
        found = self.matching_policies(app_id, permission, purpose, origin)
        return found[0] if found else None

    # -- quick settings ----------------------------------------------------

    def quick_settings(self) -> dict[Sensor, SensorState]:
        return dict(self._quick)

    def sensor_locks(self) -> dict[Sensor, SensorState]:
        return dict(self._locks)

    def set_quick_setting(self, sensor: Sensor | str, state: SensorState | str) -> None:
        try:
            sensor = Sensor(sensor)
            state = SensorState(state)
        except ValueError as exc:
            raise UnknownSensorError(str(exc)) from None
        with self._lock:
            if sensor in self._locks and state is not self._locks[sensor]:
                raise SensorLockedError(sensor.value, self._locks[sensor].value)
            self._record("quick_setting", {"sensor": sensor.value, "state": state.value})

    # -- org profile -------------------------------------------------------

    def org_profile(self) -> OrgProfile | None:
        return self._org

    def install_org_profile(self, profile: OrgProfile | dict) -> OrgProfile:
        if isinstance(profile, dict):
            profile = parse_org_profile(profile, self._tax)
        with self._lock:
            if self._org is not None and self._org.id != profile.id:
                raise ProfileConflictError(
                    f"profile {self._org.id!r} is active; remove it before installing another"
                )
            self._record("org_installed", {"profile": profile.to_dict()})
            return profile

    def remove_org_profile(self, profile_id: str, token: str | None) -> None:
        with self._lock:
            if self._admin_token is None:
                raise RemovalRefusedError("no admin token is configured; removal is disabled")
            if token != self._admin_token:
                raise RemovalRefusedError("admin token does not match")
            if self._org is None or self._org.id != profile_id:
                raise NotFoundError(f"no active profile {profile_id!r}")
            self._record("org_removed", {"profile_id": profile_id})

    def org_rule_for(
        self, app_id: str, permission: Permission, purpose: Purpose, origin: Origin
    ) -> OrgRule | None:
        """First org rule covering the access, in profile order."""
        if self._org is None:
            return None
        for rule in self._org.rules:
            if rule.matches(app_id, permission, purpose, origin):
                return rule
        return None
