"""App-policy data model: parsing, validation, canonical serialization.

An app policy is a JSON document embedded with an app (or generated for it)
declaring which dangerous permissions the app uses, for which purpose, and at
which code site. The on-disk clause format uses the keys ``uses``, ``purpose``,
``class``, ``method``, ``for``.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import taxonomy
from .errors import (
    ArchiveError,
    MalformedDocumentError,
    MissingFieldError,
    ParseError,
    UnknownKeyError,
    UnknownPurposeError,
)
from .taxonomy import Permission, Purpose, Taxonomy

# Location of an embedded policy inside an app archive.
EMBEDDED_POLICY_PATH = "assets/odp/policy.json"

# Canonical clause key order in serialized documents.
CLAUSE_KEYS = ("uses", "purpose", "class", "method", "for")

WILDCARD = "*"

# Purpose strings longer than this are cut for display; storage keeps them whole.
FOR_DISPLAY_LIMIT = 140


class Provenance(str, Enum):
    """How an app came to have its policy."""

    DEVELOPER_EMBEDDED = "developer_embedded"
    PRE_GENERATED = "pre_generated"
    FALLBACK = "fallback"


def class_pattern_matches(pattern: str, class_name: str) -> bool:
    """True when ``pattern`` covers ``class_name``.

    Patterns are an exact fully-qualified class name, the full wildcard ``*``,
    or a package prefix wildcard such as ``com.mopub.*``.
    """
    if pattern == WILDCARD:
        return True
    if pattern.endswith(".*"):
        prefix = pattern[:-2]
        return class_name == prefix or class_name.startswith(prefix + ".")
    return class_name == pattern


def method_pattern_matches(pattern: str, method_name: str) -> bool:
    return pattern == WILDCARD or pattern == method_name


def display_for_string(for_string: str, limit: int = FOR_DISPLAY_LIMIT) -> str:
    if len(for_string) <= limit:
        return for_string
    return for_string[: limit - 1].rstrip() + "…"


@dataclass(frozen=True)
class PolicyClause:
    """One (permission, purpose, code site, purpose string) declaration."""

    uses: Permission
    purpose: Purpose
    class_pattern: str = WILDCARD
    method_pattern: str = WILDCARD
    for_string: str = ""

    def __post_init__(self):
        if not self.class_pattern:
            raise ValueError("class_pattern must be '*' or a non-empty identifier")
        if not self.method_pattern:
            raise ValueError("method_pattern must be '*' or a non-empty identifier")

    @property
    def site(self) -> tuple[str, str]:
        return (self.class_pattern, self.method_pattern)

    @property
    def is_wildcard_site(self) -> bool:
        return self.class_pattern == WILDCARD and self.method_pattern == WILDCARD

    def matches_site(self, class_name: str, method_name: str) -> bool:
        return class_pattern_matches(self.class_pattern, class_name) and method_pattern_matches(
            self.method_pattern, method_name
        )

    def site_specificity(self) -> int:
        """Rank for choosing among clauses that match the same call site.

        Higher is more specific: exact parts beat prefix patterns beat
        wildcards, with the class part weighing more than the method part.
        """
        if self.class_pattern == WILDCARD:
            class_rank = 0
        elif self.class_pattern.endswith(".*"):
            class_rank = 1
        else:
            class_rank = 2
        method_rank = 0 if self.method_pattern == WILDCARD else 1
        return class_rank * 2 + method_rank

    def to_dict(self) -> dict:
        return {
            "uses": self.uses.name,
            "purpose": self.purpose.name,
            "class": self.class_pattern,
            "method": self.method_pattern,
            "for": self.for_string,
        }


@dataclass(frozen=True)
class AppPolicy:
    """The full set of policy clauses declared for one app."""

    app_id: str
    clauses: tuple[PolicyClause, ...]
    provenance: Provenance
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def clauses_for(self, permission: Permission) -> tuple[PolicyClause, ...]:
        return tuple(c for c in self.clauses if c.uses == permission)

    def permissions_used(self) -> frozenset[Permission]:
        return frozenset(c.uses for c in self.clauses)


class ViolationKind(str, Enum):
    DUPLICATE_PURPOSE_FOR_SITE = "duplicate_purpose_for_site"
    UNDECLARED_PERMISSION = "undeclared_permission"
    UNUSED_DECLARED_PERMISSION = "unused_declared_permission"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    message: str
    permission: str | None = None
    site: tuple[str, str] | None = None


def _clause_from_dict(
    entry: object,
    index: int,
    strict: bool,
    warnings: list[str],
    tax: Taxonomy,
) -> PolicyClause:
    if not isinstance(entry, dict):
        raise MalformedDocumentError(f"clause {index} is not an object")

    for key in entry:
        if key not in CLAUSE_KEYS:
            if strict:
                raise UnknownKeyError(key, index)
            warnings.append(f"clause {index}: ignored unknown key {key!r}")

    def text(key: str) -> str | None:
        value = entry.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            raise MalformedDocumentError(f"clause {index}: {key!r} must be a string")
        return value

    uses_raw = text("uses")
    if not uses_raw:
        raise MissingFieldError("uses", index)
    uses = tax.permission(uses_raw)

    purpose_raw = text("purpose")
    if not purpose_raw:
        raise MissingFieldError("purpose", index)
    try:
        purpose = tax.normalize_purpose(purpose_raw)
    except UnknownPurposeError:
        if strict:
            raise
        purpose = tax.purpose(taxonomy.FALLBACK_PURPOSE_NAME)
        warnings.append(
            f"clause {index}: unknown purpose {purpose_raw!r} mapped to {purpose.name!r}"
        )

    class_pattern = text("class")
    method_pattern = text("method")
    for_string = text("for")
    if strict:
        if not class_pattern:
            raise MissingFieldError("class", index)
        if not method_pattern:
            raise MissingFieldError("method", index)
        if not for_string:
            raise MissingFieldError("for", index)
    else:
        if class_pattern is None:
            warnings.append(f"clause {index}: missing 'class', assuming wildcard")
        if method_pattern is None:
            warnings.append(f"clause {index}: missing 'method', assuming wildcard")
        class_pattern = class_pattern or WILDCARD
        method_pattern = method_pattern or WILDCARD
        for_string = for_string or ""

    return PolicyClause(
        uses=uses,
        purpose=purpose,
        class_pattern=class_pattern,
        method_pattern=method_pattern,
        for_string=for_string,
    )


def parse_app_policy(
    raw: bytes | str,
    app_id: str,
    provenance: Provenance = Provenance.DEVELOPER_EMBEDDED,
    *,
    strict: bool | None = None,
    tax: Taxonomy | None = None,
) -> AppPolicy:
    """Parse an app-policy document into an AppPolicy.

    The top level may be a single clause object or an array of clause objects;
    both appear in the wild. Developer-embedded policies parse strictly
    (unknown permissions, purposes, and keys are rejected); generated policies
    parse leniently, collecting warnings and mapping unknown purposes to the
    fallback purpose.
    """
    tax = tax or taxonomy.DEFAULT_TAXONOMY
    if strict is None:
        strict = provenance is Provenance.DEVELOPER_EMBEDDED

    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocumentError(f"document is not UTF-8: {exc}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedDocumentError(f"document is not valid JSON: {exc}") from None

    if isinstance(doc, dict):
        entries: list[object] = [doc]
    elif isinstance(doc, list):
        entries = doc
    else:
        raise MalformedDocumentError("top level must be a clause object or an array of clauses")

    warnings: list[str] = []
    clauses = tuple(
        _clause_from_dict(entry, i, strict, warnings, tax) for i, entry in enumerate(entries)
    )
    return AppPolicy(
        app_id=app_id,
        clauses=clauses,
        provenance=provenance,
        warnings=tuple(warnings),
    )


def serialize_app_policy(policy: AppPolicy) -> bytes:
    """Render a policy in canonical form.

    Always an array of clause objects with keys in fixed order and purposes
    spelled by canonical name, so identical policies serialize byte-identically
    and ``parse(serialize(p))`` equals ``p``.
    """
    doc = [clause.to_dict() for clause in policy.clauses]
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def validate_app_policy(
    policy: AppPolicy, declared_permissions: frozenset[Permission] | set[Permission]
) -> list[Violation]:
    """Check a policy for conformance; reports violations, never raises.

    Rules: at most one purpose per (class, method, permission) site, every
    clause permission declared, and every declared permission covered by at
    least one clause.
    """
    violations: list[Violation] = []

    by_site: dict[tuple[str, str, str], dict[str, PolicyClause]] = {}
    for clause in policy.clauses:
        key = (clause.class_pattern, clause.method_pattern, clause.uses.name)
        by_site.setdefault(key, {})[clause.purpose.name] = clause
    for (class_pattern, method_pattern, perm_name), purposes in sorted(by_site.items()):
        if len(purposes) > 1:
            names = ", ".join(sorted(purposes))
            violations.append(
                Violation(
                    kind=ViolationKind.DUPLICATE_PURPOSE_FOR_SITE,
                    message=(
                        f"site ({class_pattern}, {method_pattern}) uses {perm_name} "
                        f"for multiple purposes: {names}"
                    ),
                    permission=perm_name,
                    site=(class_pattern, method_pattern),
                )
            )

    declared = frozenset(declared_permissions)
    used = policy.permissions_used()
    for perm in sorted(used - declared, key=lambda p: p.name):
        violations.append(
            Violation(
                kind=ViolationKind.UNDECLARED_PERMISSION,
                message=f"clause uses {perm.name} which the app does not declare",
                permission=perm.name,
            )
        )
    for perm in sorted(declared - used, key=lambda p: p.name):
        violations.append(
            Violation(
                kind=ViolationKind.UNUSED_DECLARED_PERMISSION,
                message=f"declared permission {perm.name} has no policy clause",
                permission=perm.name,
            )
        )
    return violations


def extract_embedded_policy(archive_path: str | Path) -> bytes | None:
    """Read the embedded policy document out of an app archive.

    Returns None when the archive has no policy entry, so callers can fall
    back to a pre-generated or fallback policy.
    """
    try:
        with zipfile.ZipFile(archive_path) as archive:
            try:
                return archive.read(EMBEDDED_POLICY_PATH)
            except KeyError:
                return None
    except (zipfile.BadZipFile, OSError) as exc:
        raise ArchiveError(f"cannot read archive {archive_path}: {exc}") from None
