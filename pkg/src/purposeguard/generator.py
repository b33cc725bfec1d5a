"""Heuristic policy generation for apps that ship without one.

Input is an app descriptor: declared dangerous permissions plus the call
sites (class, method, permission) where the app exercises them. Three passes
produce clauses:

1. Call sites inside a known library get that library's purpose, with the
   library package prefix as the clause class pattern.
2. Remaining call sites are matched against keyword rules over their package
   segments (an app with a ``...weatherwidget...`` package likely reads
   location for weather).
3. Any declared permission still uncovered gets a catch-all clause with the
   fallback purpose, so every declared permission resolves to something.

The same facts drive an auditor that checks a policy against a descriptor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable

from . import taxonomy
from .errors import MalformedDocumentError
from .policy import (
    WILDCARD,
    AppPolicy,
    PolicyClause,
    Provenance,
    ViolationKind,
    serialize_app_policy,
    validate_app_policy,
)
from .store import FIRST_PARTY, Origin, third_party
from .taxonomy import Permission, Purpose, Taxonomy


@dataclass(frozen=True)
class CallSite:
    """One spot in app code that exercises a dangerous permission."""

    class_name: str
    method_name: str
    permission: Permission

    @property
    def package(self) -> str:
        return self.class_name.rsplit(".", 1)[0] if "." in self.class_name else ""


@dataclass(frozen=True)
class AppDescriptor:
    app_id: str
    declared: frozenset[Permission]
    call_sites: tuple[CallSite, ...] = ()
    name: str = ""
    category: str = ""


def parse_descriptor(doc: dict | str | bytes, tax: Taxonomy | None = None) -> AppDescriptor:
    tax = tax or taxonomy.DEFAULT_TAXONOMY
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise MalformedDocumentError(f"descriptor is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not doc.get("app"):
        raise MalformedDocumentError("descriptor must be an object with an 'app' id")
    sites = []
    for i, entry in enumerate(doc.get("call_sites", [])):
        if not isinstance(entry, dict) or not entry.get("class") or not entry.get("permission"):
            raise MalformedDocumentError(f"call site {i} needs 'class' and 'permission'")
        sites.append(
            CallSite(
                class_name=entry["class"],
                method_name=entry.get("method", WILDCARD),
                permission=tax.permission(entry["permission"]),
            )
        )
    return AppDescriptor(
        app_id=doc["app"],
        declared=frozenset(tax.permission(n) for n in doc.get("declared", [])),
        call_sites=tuple(sites),
        name=doc.get("name", ""),
        category=doc.get("category", ""),
    )


@dataclass(frozen=True)
class LibraryFact:
    """What is known about a third-party library package."""

    prefix: str
    library: str
    kind: str = ""
    # Where data handled by this library ends up; empty means on-device only.
    destination: str = ""
    grants: tuple[tuple[Permission, Purpose], ...] = ()

    def purpose_for(self, permission: Permission) -> Purpose | None:
        for granted, purpose in self.grants:
            if granted == permission:
                return purpose
        return None

    def covers(self, class_name: str) -> bool:
        return class_name == self.prefix or class_name.startswith(self.prefix + ".")


@dataclass(frozen=True)
class KeywordRule:
    keyword: str
    purpose: Purpose


def _read_packaged(name: str) -> dict:
    return json.loads(resources.files("purposeguard.data").joinpath(name).read_text("utf-8"))


def load_library_facts(
    path: str | Path | None = None, tax: Taxonomy | None = None
) -> tuple[LibraryFact, ...]:
    tax = tax or taxonomy.DEFAULT_TAXONOMY
    doc = (
        json.loads(Path(path).read_text(encoding="utf-8"))
        if path
        else _read_packaged("library_facts.json")
    )
    facts = []
    for entry in doc["facts"]:
        grants = tuple(
            (tax.permission(g["permission"]), tax.normalize_purpose(g["purpose"]))
            for g in entry.get("grants", [])
        )
        facts.append(
            LibraryFact(
                prefix=entry["prefix"],
                library=entry["library"],
                kind=entry.get("kind", ""),
                destination=entry.get("destination", ""),
                grants=grants,
            )
        )
    return tuple(facts)


def load_keyword_rules(
    path: str | Path | None = None, tax: Taxonomy | None = None
) -> tuple[KeywordRule, ...]:
    tax = tax or taxonomy.DEFAULT_TAXONOMY
    doc = (
        json.loads(Path(path).read_text(encoding="utf-8"))
        if path
        else _read_packaged("keyword_rules.json")
    )
    return tuple(
        KeywordRule(keyword=entry["keyword"], purpose=tax.normalize_purpose(entry["purpose"]))
        for entry in doc["rules"]
    )


def applicable_fact(class_name: str, facts: Iterable[LibraryFact]) -> LibraryFact | None:
    """The most specific (longest-prefix) library fact covering a class."""
    best = None
    for fact in facts:
        if fact.covers(class_name) and (best is None or len(fact.prefix) > len(best.prefix)):
            best = fact
    return best


def keyword_rule_for(class_name: str, rules: Iterable[KeywordRule]) -> KeywordRule | None:
    """First rule whose keyword starts a package segment of the class name.

    Only package segments count, not the class name itself, and a keyword has
    to start the segment: ``ads`` matches ``com.foo.ads.Loader`` and
    ``com.foo.adserver.X`` but not ``com.foo.loads.Y``.
    """
    segments = class_name.lower().split(".")[:-1]
    for rule in rules:
        keyword = rule.keyword.lower()
        if any(segment.startswith(keyword) for segment in segments):
            return rule
    return None


def clause_origin(clause: PolicyClause, facts: Iterable[LibraryFact]) -> Origin:
    """Classify where a clause's data flows, judged by its class pattern."""
    if clause.class_pattern == WILDCARD:
        return FIRST_PARTY
    base = clause.class_pattern[:-2] if clause.class_pattern.endswith(".*") else clause.class_pattern
    fact = applicable_fact(base, facts)
    if fact is not None and fact.destination:
        return third_party(fact.destination)
    return FIRST_PARTY


def build_fallback_policy(
    app_id: str, declared: Iterable[Permission], tax: Taxonomy | None = None
) -> AppPolicy:
    """Catch-all policy for an app nothing else covers: every declared
    permission mapped to the fallback purpose at any call site."""
    tax = tax or taxonomy.DEFAULT_TAXONOMY
    fallback = tax.purpose(taxonomy.FALLBACK_PURPOSE_NAME)
    clauses = tuple(
        PolicyClause(
            uses=perm,
            purpose=fallback,
            class_pattern=WILDCARD,
            method_pattern=WILDCARD,
            for_string=fallback.short_description,
        )
        for perm in sorted(declared, key=lambda p: p.name)
    )
    return AppPolicy(app_id=app_id, clauses=clauses, provenance=Provenance.FALLBACK)


def generate_policy(
    descriptor: AppDescriptor,
    facts: Iterable[LibraryFact] = (),
    rules: Iterable[KeywordRule] = (),
    tax: Taxonomy | None = None,
) -> AppPolicy:
    """Produce a policy for a descriptor; output always audits clean."""
    tax = tax or taxonomy.DEFAULT_TAXONOMY
    facts = tuple(facts)
    rules = tuple(rules)
    fallback = tax.purpose(taxonomy.FALLBACK_PURPOSE_NAME)

    warnings: list[str] = []
    clauses: list[PolicyClause] = []
    seen_sites: set[tuple[str, str, str]] = set()

    def add(clause: PolicyClause) -> None:
        key = (clause.class_pattern, clause.method_pattern, clause.uses.name)
        if key not in seen_sites:
            seen_sites.add(key)
            clauses.append(clause)

    leftover: list[CallSite] = []
    for site in descriptor.call_sites:
        if site.permission not in descriptor.declared:
            warnings.append(
                f"{site.class_name}.{site.method_name} exercises undeclared "
                f"{site.permission.name}; skipped"
            )
            continue
        fact = applicable_fact(site.class_name, facts)
        if fact is None:
            leftover.append(site)
            continue
        purpose = fact.purpose_for(site.permission)
        if purpose is None:
            purpose = fallback
            warnings.append(
                f"{fact.library} exercises {site.permission.name} without a known purpose"
            )
        add(
            PolicyClause(
                uses=site.permission,
                purpose=purpose,
                class_pattern=fact.prefix + ".*",
                method_pattern=WILDCARD,
                for_string=purpose.short_description,
            )
        )

    for site in leftover:
        rule = keyword_rule_for(site.class_name, rules)
        if rule is None:
            continue
        add(
            PolicyClause(
                uses=site.permission,
                purpose=rule.purpose,
                class_pattern=site.class_name,
                method_pattern=site.method_name,
                for_string=rule.purpose.short_description,
            )
        )

    covered = {c.uses for c in clauses}
    for perm in sorted(descriptor.declared - covered, key=lambda p: p.name):
        add(
            PolicyClause(
                uses=perm,
                purpose=fallback,
                class_pattern=WILDCARD,
                method_pattern=WILDCARD,
                for_string=fallback.short_description,
            )
        )

    return AppPolicy(
        app_id=descriptor.app_id,
        clauses=tuple(clauses),
        provenance=Provenance.PRE_GENERATED,
        warnings=tuple(warnings),
    )


class AuditKind(str, Enum):
    DUPLICATE_PURPOSE_FOR_SITE = ViolationKind.DUPLICATE_PURPOSE_FOR_SITE.value
    UNDECLARED_PERMISSION = ViolationKind.UNDECLARED_PERMISSION.value
    UNUSED_DECLARED_PERMISSION = ViolationKind.UNUSED_DECLARED_PERMISSION.value
    LIBRARY_MISMATCH = "library_mismatch"
    ORPHAN_CLAUSE = "orphan_clause"


@dataclass(frozen=True)
class AuditFinding:
    kind: AuditKind
    message: str
    clause_index: int | None = None


def audit_policy(
    policy: AppPolicy,
    descriptor: AppDescriptor,
    facts: Iterable[LibraryFact] = (),
) -> list[AuditFinding]:
    """Cross-check a policy against what the app actually does.

    On top of the structural rules this flags clauses whose purpose
    contradicts a known library (declared permissions only) and site-specific
    clauses that point at code the descriptor never exercises.
    """
    facts = tuple(facts)
    findings = [
        AuditFinding(kind=AuditKind(v.kind.value), message=v.message)
        for v in validate_app_policy(policy, descriptor.declared)
    ]

    for i, clause in enumerate(policy.clauses):
        if clause.class_pattern == WILDCARD:
            continue
        base = (
            clause.class_pattern[:-2]
            if clause.class_pattern.endswith(".*")
            else clause.class_pattern
        )
        fact = applicable_fact(base, facts)
        if fact is not None and clause.uses in descriptor.declared:
            expected = fact.purpose_for(clause.uses)
            if expected is not None and expected != clause.purpose:
                findings.append(
                    AuditFinding(
                        kind=AuditKind.LIBRARY_MISMATCH,
                        message=(
                            f"clause {i} gives {clause.uses.name} in {fact.library} the purpose "
                            f"{clause.purpose.name!r}, expected {expected.name!r}"
                        ),
                        clause_index=i,
                    )
                )
        hit = any(
            site.permission == clause.uses and clause.matches_site(site.class_name, site.method_name)
            for site in descriptor.call_sites
        )
        if not hit:
            findings.append(
                AuditFinding(
                    kind=AuditKind.ORPHAN_CLAUSE,
                    message=(
                        f"clause {i} names site ({clause.class_pattern}, "
                        f"{clause.method_pattern}) but no such call site exists"
                    ),
                    clause_index=i,
                )
            )
    return findings


def batch_generate(
    descriptors: Iterable[AppDescriptor],
    out_dir: str | Path,
    facts: Iterable[LibraryFact] = (),
    rules: Iterable[KeywordRule] = (),
    tax: Taxonomy | None = None,
) -> tuple[list[Path], list[str]]:
    """Generate one <app_id>.policy.json per descriptor; collect errors."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    facts = tuple(facts)
    rules = tuple(rules)
    written: list[Path] = []
    errors: list[str] = []
    for descriptor in descriptors:
        try:
            policy = generate_policy(descriptor, facts, rules, tax)
            target = out / f"{descriptor.app_id}.policy.json"
            target.write_bytes(serialize_app_policy(policy))
            written.append(target)
        except Exception as exc:
            errors.append(f"{descriptor.app_id}: {exc}")
    return written, errors


class PolicyRepository:
    """Directory of pre-generated policies keyed by app id."""

    def __init__(self, root: str | Path | None):
        self._root = Path(root) if root else None

    def lookup(self, app_id: str) -> bytes | None:
        if self._root is None:
            return None
        target = self._root / f"{app_id}.policy.json"
        if target.is_file():
            return target.read_bytes()
        return None
