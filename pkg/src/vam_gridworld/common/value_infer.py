import re
import json
from typing import Any, Tuple


def infer_value(value: str) -> Tuple[str, Any]:
    """
    Infer the data type of a command-line override value and parse it.

    Returns:
        Tuple[data_type, parsed_value]
        - data_type: one of 'null', 'boolean', 'integer', 'number', 'array',
          'object', 'string'
        - parsed_value: the Python value for that type
    """
    if value is None or value.strip() == '':
        return 'null', None

    value = value.strip()

    # 1. Null
    if value.lower() in ('null', 'none'):
        return 'null', None

    # 2. Boolean (word forms only; '1' and '0' stay integers)
    if value.lower() in ('true', 'yes', 'on'):
        return 'boolean', True
    if value.lower() in ('false', 'no', 'off'):
        return 'boolean', False

    # 3. JSON array / object
    if (value.startswith('[') and value.endswith(']')) or \
       (value.startswith('{') and value.endswith('}')):
        try:
            parsed = json.loads(value)
            return ('array' if isinstance(parsed, list) else 'object'), parsed
        except (json.JSONDecodeError, ValueError):
            pass

    # 4. Integer
    if re.match(r'^[+-]?\d+$', value):
        return 'integer', int(value)

    # 5. Float / scientific notation
    try:
        parsed = float(value)
        if value.lower() in ('nan', 'inf', '-inf', '+inf', 'infinity', '-infinity'):
            return 'string', value
        return 'number', parsed
    except ValueError:
        pass

    # 6. Quoted string keeps its content verbatim
    if len(value) >= 2 and value[0] == value[-1] and value[0] in ('"', "'"):
        return 'string', value[1:-1]

    return 'string', value


def coerce_to(value: str, template: Any) -> Any:
    """
    Parse ``value`` and convert it to the type of ``template``.

    Integers are accepted where floats are expected, and tuples take their
    value from JSON arrays.

    Raises:
        ValueError: If the parsed value cannot stand in for ``template``.
    """
    data_type, parsed = infer_value(value)

    if isinstance(template, bool):
        if data_type != 'boolean':
            raise ValueError(f"expected a boolean, got {data_type} '{value}'")
        return parsed
    if isinstance(template, int):
        if data_type != 'integer':
            raise ValueError(f"expected an integer, got {data_type} '{value}'")
        return parsed
    if isinstance(template, float):
        if data_type not in ('integer', 'number'):
            raise ValueError(f"expected a number, got {data_type} '{value}'")
        return float(parsed)
    if isinstance(template, (list, tuple)):
        if data_type != 'array':
            raise ValueError(f"expected a JSON array, got {data_type} '{value}'")
        return type(template)(parsed)
    if isinstance(template, str):
        return value.strip() if data_type != 'string' else parsed
    if template is None:
        return parsed
    raise ValueError(f"cannot override a value of type {type(template).__name__}")
