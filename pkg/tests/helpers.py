"""Shared builders for tests."""

import itertools

from purposeguard.engine import PermissionRequest
from purposeguard.store import Origin
from purposeguard.taxonomy import DEFAULT_TAXONOMY

_ids = itertools.count(1)


def perm(name: str):
    return DEFAULT_TAXONOMY.permission(name)


def purpose(name: str):
    return DEFAULT_TAXONOMY.normalize_purpose(name)


def install(engine, app_id, declared, policy_bytes=None, category="", name=None):
    return engine.install_app(
        app_id,
        name or app_id,
        [perm(n) for n in declared],
        policy_bytes,
        category=category,
    )


def check_scenario_report(doc, report):
    """Assert a batch report satisfies the scenario's own 'expect' block.

    Expected decisions are subset-matched in order: every key present in the
    expected dict has to equal the corresponding field of the actual decision.
    """
    expect = doc.get("expect", {})
    failures = []
    if "errors" in expect and len(report["errors"]) != expect["errors"]:
        failures.append(f"errors: wanted {expect['errors']}, got {report['errors']}")
    if "decisions" in expect:
        actual = report["decisions"]
        if len(actual) != len(expect["decisions"]):
            failures.append(
                f"decision count: wanted {len(expect['decisions'])}, got {len(actual)}"
            )
        else:
            for i, (want, got) in enumerate(zip(expect["decisions"], actual)):
                for key, value in want.items():
                    if got.get(key) != value:
                        failures.append(f"decision {i} {key}: wanted {value!r}, got {got.get(key)!r}")
    if "notifications" in expect and len(report["notifications"]) != expect["notifications"]:
        failures.append(
            f"notifications: wanted {expect['notifications']}, got {report['notifications']}"
        )
    if "open_prompts" in expect and len(report["open_prompts"]) != expect["open_prompts"]:
        failures.append(
            f"open prompts: wanted {expect['open_prompts']}, got {report['open_prompts']}"
        )
    return failures


def request(app_id, permission, **kwargs):
    origin = kwargs.pop("origin", None)
    if isinstance(origin, str):
        origin = Origin.parse(origin)
    raw_purpose = kwargs.pop("purpose", None)
    return PermissionRequest(
        request_id=kwargs.pop("request_id", f"t{next(_ids)}"),
        app_id=app_id,
        permission=perm(permission),
        purpose=purpose(raw_purpose) if isinstance(raw_purpose, str) else raw_purpose,
        origin=origin,
        **kwargs,
    )
