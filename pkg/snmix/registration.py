import importlib
from typing import Dict

from snmix.errors import DomainError

registry: Dict[str, str] = {}


def register(id: str, entry_point: str) -> None:
    """Register an estimator class under a short name; ``entry_point`` reads "module:ClassName"."""
    registry[id] = entry_point


def make(id: str, **config):
    """Instantiate a registered estimator with configuration overrides."""
    try:
        entry_point = registry[id]
    except KeyError:
        raise DomainError(f"No registered estimator with id {id!r}, choose one of {sorted(registry)}") from None
    module_name, sep, class_name = entry_point.partition(":")
    if not sep or not module_name or not class_name:
        raise DomainError(f"Malformed entry point {entry_point!r} for {id!r}, expected 'module:ClassName'")
    try:
        cls = getattr(importlib.import_module(module_name), class_name)
    except (ImportError, AttributeError) as e:
        raise DomainError(f"Cannot load entry point {entry_point!r} for {id!r}: {e}") from e
    return cls(config)
