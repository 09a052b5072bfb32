"""Dataclass-backed configuration: strict loading, dotted overrides, hashing."""

import dataclasses
import hashlib
import json
import typing
from typing import Any, Dict, Iterable, Type, TypeVar

from vam_gridworld.common.errors import ConfigError
from vam_gridworld.common.value_infer import coerce_to

T = TypeVar('T')


def to_plain(value: Any) -> Any:
    """Convert nested dataclasses/tuples into JSON-ready dicts and lists."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: to_plain(v) for k, v in value.items()}
    return value


def _check_scalar(hint: Any, value: Any, dotted: str) -> Any:
    if hint is bool and not isinstance(value, bool):
        raise ConfigError(f"{dotted}: expected true or false, got {value!r}")
    if hint is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{dotted}: expected an integer, got {value!r}")
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{dotted}: expected a number, got {value!r}")
        return float(value)
    return value


def from_plain(cls: Type[T], data: Dict[str, Any], prefix: str = "") -> T:
    """
    Build dataclass ``cls`` from a plain dict, recursing into nested dataclasses.

    Missing keys keep their defaults; unknown keys are rejected.

    Raises:
        ConfigError: On an unknown key or a value of the wrong shape.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object, got {type(data).__name__}")

    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs: Dict[str, Any] = {}

    for key, value in data.items():
        dotted = f"{prefix}.{key}" if prefix else key
        if key not in fields:
            raise ConfigError(f"Unknown config key: {dotted}")
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            kwargs[key] = from_plain(hint, value, dotted)
        elif typing.get_origin(hint) is tuple:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{dotted}: expected a list, got {value!r}")
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = _check_scalar(hint, value, dotted)

    try:
        return cls(**kwargs)
    except ConfigError as e:
        raise ConfigError(f"{prefix or 'config'}: {e}") from None
    except TypeError as e:
        raise ConfigError(f"{prefix or 'config'}: {e}") from None


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str], defaults: Dict[str, Any]) -> Dict[str, Any]:
    """
    Apply ``section.key=value`` overrides to a plain config dict.

    ``defaults`` is the fully materialised default config; it decides which
    keys exist and what type each value must parse to.

    Raises:
        ConfigError: If an override is malformed, names an unknown key, or
            its value does not parse to the key's type.
    """
    result = json.loads(json.dumps(data))
    for override in overrides:
        if '=' not in override:
            raise ConfigError(f"Override must look like key=value: {override!r}")
        dotted, raw = override.split('=', 1)
        dotted = dotted.strip()
        path = dotted.split('.')

        template: Any = defaults
        for part in path:
            if not isinstance(template, dict) or part not in template:
                raise ConfigError(f"Unknown config key: {dotted}")
            template = template[part]
        if isinstance(template, dict):
            raise ConfigError(f"Cannot override a whole section: {dotted}")

        try:
            value = coerce_to(raw, tuple(template) if isinstance(template, list) else template)
        except ValueError as e:
            raise ConfigError(f"Bad value for {dotted}: {e}") from None

        node = result
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = list(value) if isinstance(value, tuple) else value
    return result


def canonical_json(data: Any) -> str:
    """Serialise with sorted keys and fixed separators so equal configs give equal text."""
    return json.dumps(to_plain(data), sort_keys=True, separators=(',', ':'))


def config_hash(config: Any) -> str:
    return hashlib.sha256(canonical_json(config).encode('utf-8')).hexdigest()
