"""Bundled scenario presets for the four standard access procedures.

Each preset pins the message timing of one access procedure (payload,
success and failure overheads, scheduling interval) together with the
channel encoding rate and default population size.  Run-time knobs
(``n``, ``q0``, per-node bit rate, backoff) can be overridden when a
scenario is built from a preset.
"""

from __future__ import annotations

import json
from importlib import resources

from .model import AccessScheme, BackoffPolicy, Connection, Family, Scenario, ValidationError

_PRESET_PACKAGE = "radelay.presets"


def preset_names() -> tuple[str, ...]:
    """Names of all bundled presets, sorted."""
    names = []
    for entry in resources.files(_PRESET_PACKAGE).iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[: -len(".json")])
    return tuple(sorted(names))


def load_preset(name: str) -> dict:
    """Return the raw preset dictionary for `name`.

    Raises
    ------
    ValidationError
        If no bundled preset has that name.
    """
    try:
        text = resources.files(_PRESET_PACKAGE).joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        known = ", ".join(preset_names())
        raise ValidationError(f"unknown preset {name!r}; bundled presets: {known}") from None
    return json.loads(text)


def scheme_from_preset(data: dict) -> AccessScheme:
    """Build the AccessScheme described by a preset dictionary."""
    spec = data["scheme"]
    return AccessScheme(
        family=Family(spec["family"]),
        connection=Connection(spec["connection"]),
        payload_ms=float(spec["payload_ms"]),
        overhead_success_ms=float(spec["overhead_success_ms"]),
        overhead_fail_ms=float(spec["overhead_fail_ms"]),
        slot_ms=None if spec["slot_ms"] is None else float(spec["slot_ms"]),
    )


def scenario_from_preset(
    name: str,
    *,
    n: int | None = None,
    q0: float | None = None,
    bit_rate_per_node: float | None = None,
    backoff: BackoffPolicy | None = None,
) -> Scenario:
    """Build a Scenario from a bundled preset, overriding selected knobs."""
    data = load_preset(name)
    defaults = data["defaults"]
    return Scenario(
        n=int(defaults["n"]) if n is None else n,
        scheme=scheme_from_preset(data),
        backoff=BackoffPolicy.constant() if backoff is None else backoff,
        q0=float(defaults["q0"]) if q0 is None else q0,
        bit_rate_per_node=(
            float(defaults["bit_rate_per_node"]) if bit_rate_per_node is None else bit_rate_per_node
        ),
        encoding_rate=float(data["encoding_rate"]),
    )
