"""Dangerous-permission set and the purpose taxonomy.

Both tables ship as versioned JSON data files (``data/dangerous_permissions.json``
and ``data/purposes.json``) so they can be updated without code changes. The
module-level accessors operate on the default shipped tables; ``load_taxonomy``
builds a registry from alternative files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import UnknownPermissionError, UnknownPurposeError

PERMISSION_PREFIX = "android.permission."


class PermissionGroup(str, Enum):
    CALENDAR = "CALENDAR"
    CAMERA = "CAMERA"
    CONTACTS = "CONTACTS"
    LOCATION = "LOCATION"
    MICROPHONE = "MICROPHONE"
    PHONE = "PHONE"
    SENSORS = "SENSORS"
    SMS = "SMS"
    STORAGE = "STORAGE"


@dataclass(frozen=True)
class Permission:
    """One dangerous permission, e.g. ``android.permission.ACCESS_FINE_LOCATION``."""

    name: str
    group: PermissionGroup
    display_name: str

    @property
    def short_name(self) -> str:
        return self.name.rsplit(".", 1)[-1]

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Purpose:
    """One canonical purpose from the taxonomy."""

    name: str
    description: str
    likely_permissions: frozenset[Permission]

    @property
    def display_name(self) -> str:
        return "For " + self.name

    @property
    def short_description(self) -> str:
        """First sentence of the description, used for generated purpose strings."""
        head, sep, _ = self.description.partition(".")
        return head + (sep or ".")

    def __str__(self) -> str:
        return self.name


class Taxonomy:
    """Immutable registry of dangerous permissions, purposes, and purpose aliases."""

    def __init__(
        self,
        permissions: tuple[Permission, ...],
        purposes: tuple[Purpose, ...],
        aliases: dict[str, str],
        version: tuple[int, int] = (1, 1),
    ):
        self._permissions = permissions
        self._purposes = purposes
        self._aliases = dict(aliases)
        self.version = version
        self._permission_index: dict[str, Permission] = {}
        for p in permissions:
            self._permission_index[p.name] = p
            self._permission_index[p.short_name] = p
        self._purpose_index: dict[str, Purpose] = {}
        for goal in purposes:
            self._purpose_index[goal.name.casefold()] = goal
            self._purpose_index[goal.display_name.casefold()] = goal
        for alias, target in aliases.items():
            resolved = self._purpose_index[target.casefold()]
            self._purpose_index.setdefault(alias.casefold(), resolved)
            self._purpose_index.setdefault(("for " + alias).casefold(), resolved)

    @property
    def permissions(self) -> tuple[Permission, ...]:
        return self._permissions

    @property
    def purposes(self) -> tuple[Purpose, ...]:
        return self._purposes

    @property
    def aliases(self) -> dict[str, str]:
        return dict(self._aliases)

    def permission(self, name: str) -> Permission:
        """Look up a permission by full or bare identifier."""
        try:
            return self._permission_index[name.strip()]
        except KeyError:
            raise UnknownPermissionError(name) from None

    def is_dangerous(self, name: str) -> bool:
        return name.strip() in self._permission_index

    def purpose(self, name: str) -> Purpose:
        """Look up a purpose by exact canonical name."""
        for goal in self._purposes:
            if goal.name == name:
                return goal
        raise UnknownPurposeError(name)

    def normalize_purpose(self, raw: str) -> Purpose:
        """Resolve any purpose spelling to its canonical Purpose.

        Matches case-insensitively against canonical names, display names
        ("For ..."), and the alias table.
        """
        key = raw.strip().casefold()
        try:
            return self._purpose_index[key]
        except KeyError:
            raise UnknownPurposeError(raw) from None

    def permission_groups(self) -> dict[PermissionGroup, tuple[Permission, ...]]:
        groups: dict[PermissionGroup, list[Permission]] = {}
        for p in self._permissions:
            groups.setdefault(p.group, []).append(p)
        return {g: tuple(ps) for g, ps in groups.items()}


def _read_json(path: Path | None, default_resource: str) -> dict:
    if path is not None:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    text = resources.files("purposeguard.data").joinpath(default_resource).read_text(encoding="utf-8")
    return json.loads(text)


def load_taxonomy(
    permissions_path: Path | None = None,
    purposes_path: Path | None = None,
) -> Taxonomy:
    perm_doc = _read_json(permissions_path, "dangerous_permissions.json")
    purpose_doc = _read_json(purposes_path, "purposes.json")

    permissions = tuple(
        Permission(
            name=entry["name"],
            group=PermissionGroup(entry["group"]),
            display_name=entry["display"],
        )
        for entry in perm_doc["permissions"]
    )
    by_short = {p.short_name: p for p in permissions}
    all_permissions = frozenset(permissions)

    purposes = []
    for entry in purpose_doc["purposes"]:
        likely = entry["likely_permissions"]
        if likely == "*":
            likely_set = all_permissions
        else:
            likely_set = frozenset(by_short[short] for short in likely)
        purposes.append(
            Purpose(
                name=entry["name"],
                description=entry["description"],
                likely_permissions=likely_set,
            )
        )
    return Taxonomy(
        permissions=permissions,
        purposes=tuple(purposes),
        aliases=purpose_doc.get("aliases", {}),
        version=(perm_doc.get("version", 1), purpose_doc.get("version", 1)),
    )


DEFAULT_TAXONOMY = load_taxonomy()

# The fallback purpose applied whenever no purpose can be determined.
FALLBACK_PURPOSE_NAME = "Running Other Features"


def dangerous_permissions() -> tuple[Permission, ...]:
    return DEFAULT_TAXONOMY.permissions


def permission(name: str) -> Permission:
    return DEFAULT_TAXONOMY.permission(name)


def is_dangerous(name: str) -> bool:
    return DEFAULT_TAXONOMY.is_dangerous(name)


def purposes() -> tuple[Purpose, ...]:
    return DEFAULT_TAXONOMY.purposes


def purpose(name: str) -> Purpose:
    return DEFAULT_TAXONOMY.purpose(name)


def normalize_purpose(raw: str) -> Purpose:
    return DEFAULT_TAXONOMY.normalize_purpose(raw)


def fallback_purpose() -> Purpose:
    return DEFAULT_TAXONOMY.purpose(FALLBACK_PURPOSE_NAME)
