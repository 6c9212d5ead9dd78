"""Capacity guards. Each limit can be overridden through an environment variable."""
import os

MAX_FACES = "NECKLACE_MAX_FACES"
MAX_ENUMERATION = "NECKLACE_MAX_ENUMERATION"
DEFAULTS = {MAX_FACES: 10**6, MAX_ENUMERATION: 10**8}


class CapacityError(RuntimeError):
    """An instance exceeds a configured enumeration limit."""


def limit(name: str) -> int:
    value = os.environ.get(name)
    return int(float(value)) if value else DEFAULTS[name]


def check(value: int, name: str, what: str) -> None:
    """Raise CapacityError naming the limit ``name`` when value exceeds it."""
    bound = limit(name)
    if value > bound:
        raise CapacityError(f"{what}: {value} exceeds limit {bound} (raise {name} to allow)")
