import logging

from ..errors import ConfigError

logger = logging.getLogger("json_patterns")

"""
collection of module level functions to support the json patterns which
occur in experiment configuration files, factored into readily isolated
functions here

patterns:
-- A property value which is inherently a list may be given as a single
value, to be interpreted as a list of one ("n_list": 40)

-- A property value which is inherently a single value may be given as a
list with just one entry

-- A tagged value is a string "kind" or "kind:argument", e.g.
"jacobi:0.5,0.5,0.5,0.5" or "custom:1/(1+exp(-x))"
"""


def force_as_singleton(obj):
    """
    If obj is None or an empty list : return None
    if obj is a non-empty list:
        return the 0th element, and report a warning message if some
        entries are being ignored
    otherwise, return obj

    Use this if you expect value of property to be a single value
    """
    if obj is None or obj == []:
        return None
    if isinstance(obj, list):
        if len(obj) != 1:
            logger.warning("list of %i elements being coerced to singleton" % len(obj))
        return obj[0]
    return obj


def force_as_list(obj) -> list:
    """
    If obj is None  return empty list
    if obj is not a list: return [obj]
    else return obj

    Use this if you expect value of property to be a list, possibly empty
    """
    if obj is None:
        return []
    if not isinstance(obj, list):
        return [obj]
    return obj


def parse_tag(tag) -> tuple[str, str | None]:
    """
    split a tagged value "kind:argument" into (kind, argument)

    only the first colon separates, so the argument may itself contain
    colons; a tag without colon returns (kind, None). kind is lower-cased
    and stripped
    """
    if not isinstance(tag, str) or not tag.strip():
        raise ConfigError("cannot interpret %r as a tag" % (tag,))
    kind, sep, argument = tag.partition(":")
    kind = kind.strip().lower()
    if not sep:
        return kind, None
    return kind, argument.strip()


def parse_float_list(text: str, field: str) -> list[float]:
    """
    comma separated numbers "0.5, 0.5" as a list of floats
    """
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigError("cannot interpret %r as comma separated numbers" % (text,), field=field)


def as_int(value, field: str) -> int:
    """
    coerce a json value to int, rejecting floats with a fractional part and
    booleans
    """
    value = force_as_singleton(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected an integer, got %r" % (value,), field=field)
    if isinstance(value, float) and not value.is_integer():
        raise ConfigError("expected an integer, got %r" % (value,), field=field)
    value = int(value)
    return value


def as_float(value, field: str) -> float:
    value = force_as_singleton(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number, got %r" % (value,), field=field)
    return float(value)
