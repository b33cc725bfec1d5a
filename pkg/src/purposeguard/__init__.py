"""Purpose-aware permission management for a simulated mobile device.

Apps carry machine-readable policies declaring why they use each dangerous
permission. A four-tier engine (org profile, quick settings, user policies,
runtime prompt) decides every access; legacy apps get heuristically generated
policies so the same controls apply everywhere.
"""

from .config import Config, load_config
from .engine import (
    Decision,
    DecisionEngine,
    DecisionSource,
    Notification,
    PermissionRequest,
    PromptTicket,
    RememberScope,
    SourceKind,
)
from .policy import (
    AppPolicy,
    PolicyClause,
    Provenance,
    parse_app_policy,
    serialize_app_policy,
    validate_app_policy,
)
from .store import (
    Origin,
    OriginKind,
    OrgProfile,
    OrgRule,
    PolicyAction,
    PolicyStore,
    Sensor,
    SensorState,
    UserPolicy,
)
from .taxonomy import DEFAULT_TAXONOMY, Permission, PermissionGroup, Purpose, Taxonomy

__version__ = "1.0.0"

__all__ = [
    "AppPolicy",
    "Config",
    "DEFAULT_TAXONOMY",
    "Decision",
    "DecisionEngine",
    "DecisionSource",
    "Notification",
    "Origin",
    "OriginKind",
    "OrgProfile",
    "OrgRule",
    "Permission",
    "PermissionGroup",
    "PermissionRequest",
    "PolicyAction",
    "PolicyClause",
    "PolicyStore",
    "PromptTicket",
    "Provenance",
    "Purpose",
    "RememberScope",
    "Sensor",
    "SensorState",
    "SourceKind",
    "Taxonomy",
    "UserPolicy",
    "load_config",
    "parse_app_policy",
    "serialize_app_policy",
    "validate_app_policy",
]
