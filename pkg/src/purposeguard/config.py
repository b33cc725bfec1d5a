"""Runtime configuration: defaults, JSON config file, environment overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

ENV_PREFIX = "PURPOSEGUARD_"


@dataclass
class Config:
    # Event log location; None keeps everything in memory.
    store_path: str | None = None
    # Decision audit trail (LDJSON); None disables it.
    audit_path: str | None = None
    # Directory of pre-generated policies, one <app_id>.policy.json each.
    pregen_dir: str | None = None
    # Token required to remove an org profile; None refuses all removals.
    admin_token: str | None = None
    # Seconds an unanswered runtime prompt stays open before auto-deny.
    prompt_timeout: float = 60.0
    # Seconds during which repeat notifications for the same decision collapse
    # into a counter on the first one.
    suppression_window: float = 300.0
    # An app is flagged when its access count exceeds this multiple of the
    # median for its category.
    outlier_factor: float = 5.0
    # Default usage-summary window in seconds.
    summary_window: float = 86400.0
    # Window consulted when computing recommendations.
    recommendation_window: float = 7 * 86400.0
    # Denylist of known stalking apps; None uses the packaged list.
    blacklist_path: str | None = None
    # Seconds between keepalive comments on the prompt event stream.
    sse_keepalive: float = 15.0
    host: str = "127.0.0.1"
    port: int = 8710


def _coerce(field: dataclasses.Field, raw: str):
    text = raw.strip()
    if field.type in ("str | None", "int | None", "float | None") and text.lower() in ("", "none", "null"):
        return None
    if field.type in ("float", "float | None"):
        return float(text)
    if field.type in ("int", "int | None"):
        return int(text)
    return text


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None) -> Config:
    """Build a Config from defaults, then a JSON file, then the environment.

    Later sources win. Environment variables are the upper-cased field name
    with the ``PURPOSEGUARD_`` prefix, e.g. ``PURPOSEGUARD_PROMPT_TIMEOUT=10``.
    """
    values: dict = {}
    fields = {f.name: f for f in dataclasses.fields(Config)}

    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValueError("config file must hold a JSON object")
        for key, value in doc.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = value

    env = os.environ if env is None else env
    for name, field in fields.items():
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = _coerce(field, raw)

    return Config(**values)
