"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PurposeGuardError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PurposeGuardError):
    """An app-policy document could not be parsed."""


class MalformedDocumentError(ParseError):
    """The document is not valid JSON or has the wrong top-level shape."""


class MissingFieldError(ParseError):
    def __init__(self, field: str, clause_index: int | None = None):
        self.field = field
        self.clause_index = clause_index
        where = f" in clause {clause_index}" if clause_index is not None else ""
        super().__init__(f"missing required field '{field}'{where}")


class UnknownPermissionError(ParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown dangerous permission: {name!r}")


class UnknownPurposeError(ParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown purpose: {name!r}")


class UnknownKeyError(ParseError):
    def __init__(self, key: str, clause_index: int | None = None):
        self.key = key
        self.clause_index = clause_index
        where = f" in clause {clause_index}" if clause_index is not None else ""
        super().__init__(f"unknown key {key!r}{where}")


class ArchiveError(PurposeGuardError):
    """An app archive could not be opened or read."""


class UnknownAppError(PurposeGuardError):
    def __init__(self, app_id: str):
        self.app_id = app_id
        super().__init__(f"app not installed: {app_id!r}")


class AppAlreadyInstalledError(PurposeGuardError):
    def __init__(self, app_id: str):
        self.app_id = app_id
        super().__init__(f"app already installed: {app_id!r}")


class ProfileValidationError(PurposeGuardError):
    """An organizational profile failed validation (e.g. contains Ask rules)."""


class ProfileConflictError(PurposeGuardError):
    """A different organizational profile is already active."""


class RemovalRefusedError(PurposeGuardError):
    """Profile removal was refused because the admin token did not match."""


class NotFoundError(PurposeGuardError):
    """A referenced entity does not exist."""


class SensorLockedError(PurposeGuardError):
    def __init__(self, sensor: str, mandated_state: str):
        self.sensor = sensor
        self.mandated_state = mandated_state
        super().__init__(f"quick setting for {sensor} is locked to {mandated_state}")


class UnknownSensorError(PurposeGuardError):
    def __init__(self, sensor: str):
        self.sensor = sensor
        super().__init__(f"unknown sensor: {sensor!r}")


class CorruptLogError(PurposeGuardError):
    def __init__(self, offset: int, reason: str = ""):
        self.offset = offset
        detail = f": {reason}" if reason else ""
        super().__init__(f"corrupt event log at byte offset {offset}{detail}")


class UnknownPromptError(PurposeGuardError):
    def __init__(self, prompt_id: str):
        self.prompt_id = prompt_id
        super().__init__(f"no outstanding prompt: {prompt_id!r}")


class PromptExpiredError(PurposeGuardError):
    def __init__(self, prompt_id: str):
        self.prompt_id = prompt_id
        super().__init__(f"prompt already expired: {prompt_id!r}")


class ScenarioError(PurposeGuardError):
    def __init__(self, message: str, event_index: int | None = None):
        self.event_index = event_index
        where = f" (event {event_index})" if event_index is not None else ""
        super().__init__(f"{message}{where}")
