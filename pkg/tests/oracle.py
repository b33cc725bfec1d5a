"""Independent reference for the four-tier resolution, used only by tests.

Deliberately shares no code with the engine: plain dicts and strings, one
literal nested conditional per tier, so both implementations would have to
contain the same bug to agree by accident.

A request is {"app", "permission", "purpose", "origin"} with a concrete
origin wire string ("first-party", "third-party", "third-party:X").
Stored rules/policies use "*" (or None) for any-app / any-purpose and
wire strings for origins.
"""

SENSOR_OF = {
    "android.permission.CAMERA": "camera",
    "android.permission.ACCESS_FINE_LOCATION": "location",
    "android.permission.ACCESS_COARSE_LOCATION": "location",
    "android.permission.RECORD_AUDIO": "microphone",
}


def _origin_covers(stored: str, concrete: str) -> bool:
    if stored in ("*", "", None, "any"):
        return True
    if stored == "first-party":
        return concrete == "first-party"
    if stored == "third-party":
        return concrete == "third-party" or concrete.startswith("third-party:")
    if stored.startswith("third-party:"):
        return concrete == stored
    raise ValueError(stored)


def _rule_covers(rule: dict, request: dict) -> bool:
    if rule.get("app") not in ("*", None) and rule["app"] != request["app"]:
        return False
    if rule["permission"] != request["permission"]:
        return False
    if rule.get("purpose") not in ("*", None) and rule["purpose"] != request["purpose"]:
        return False
    return _origin_covers(rule.get("origin", "*"), request["origin"])


def oracle_resolve(org_rules, quick_off, user_policies, request):
    """Returns (action, tier).

    action: "Allow" / "Deny" / "Ask" ("Ask" means a prompt would open)
    tier:   "org" / "quick" / "user" / "prompt"

    org_rules:     ordered list of rule dicts with action Allow/Deny
    quick_off:     set of sensor names currently toggled Off
    user_policies: list of policy dicts, each with a distinct integer "seq"
    """
    for rule in org_rules:
        if _rule_covers(rule, request):
            return rule["action"], "org"

    sensor = SENSOR_OF.get(request["permission"])
    if sensor is not None and sensor in quick_off:
        return "Deny", "quick"

    newest = None
    for policy in user_policies:
        if _rule_covers(policy, request):
            if newest is None or policy["seq"] > newest["seq"]:
                newest = policy
    if newest is not None:
        if newest["action"] == "Allow":
            return "Allow", "user"
        if newest["action"] == "Deny":
            return "Deny", "user"
        # Ask falls through to the prompt tier.

    return "Ask", "prompt"
