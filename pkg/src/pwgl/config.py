"""Flat key=value run configuration with strict key checking.

A config file is plain text: one ``key = value`` per line, blank lines
and ``#`` comment lines ignored. A ``[section]`` header prefixes the
keys that follow, so ``alpha = 2`` under ``[solve]`` becomes
``solve.alpha``. Sectioned keys apply only when the section matches the
running command (or ``common``); bare keys apply to any command that
knows them. Every key must resolve against the command's schema, so a
typo fails the run instead of silently keeping a default.
"""

from __future__ import annotations

from .errors import ConfigError

COMMON_KEYS = ("out", "seed", "threads", "deterministic")


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def parse_methods(text: str) -> tuple:
    methods = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [m for m in methods if m not in ("pw", "standard", "wnll")]
    if bad or not methods:
        raise ConfigError(
            f"methods must be a comma list drawn from pw, standard, wnll; "
            f"got {text!r}"
        )
    return methods


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse key=value lines with optional [section] prefixes.

    Returns the raw string values keyed by their (possibly sectioned)
    names; type conversion happens against a command schema later.
    """
    out = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]") or len(stripped) < 3:
                raise ConfigError(
                    f"{source}:{lineno}: malformed section header {stripped!r}"
                )
            section = stripped[1:-1].strip()
            if not section:
                raise ConfigError(f"{source}:{lineno}: empty section name")
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"{source}:{lineno}: expected key = value, got {stripped!r}"
            )
        key, value = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        full = f"{section}.{key}" if section else key
        if full in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {full!r}")
        out[full] = value.strip()
    return out


def load_config(path) -> dict:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    return parse_config_text(text, source=str(path))


def resolve_config(raw: dict, command: str, schema: dict) -> dict:
    """Convert raw config strings for `command` against its schema.

    `schema` maps option names to converter callables. Sectioned keys
    must sit under the command's own section or ``common``; unknown
    names are rejected with the full list of accepted keys.
    """
    resolved = {}
    unknown = []
    for full, value in raw.items():
        section, _, name = full.rpartition(".")
        if section and section not in (command, "common"):
            unknown.append(full)
            continue
        if section == "common" and name not in COMMON_KEYS:
            unknown.append(full)
            continue
        if name not in schema:
            unknown.append(full)
            continue
        try:
            resolved[name] = schema[name](value)
        except ConfigError as e:
            raise ConfigError(f"config key {full!r}: {e}") from None
        except (TypeError, ValueError) as e:
            raise ConfigError(f"config key {full!r}: {e}") from None
    if unknown:
        accepted = ", ".join(sorted(schema))
        raise ConfigError(
            f"unknown config key(s) for command {command!r}: "
            f"{', '.join(sorted(unknown))}; accepted keys: {accepted}"
        )
    return resolved
