"""Effective-capacity regions of two-user fading broadcast channels with arbitrary inputs."""

from collections.abc import Iterable, Mapping

from . import _core
from ._core import (
    ConfigError,
    NumericError,
    __version__,
    effective_capacity,
    fading_nodes,
    joint_mutual_information,
    mmse,
    mutual_information,
    theorem2_boundary,
)

__all__ = [
    "ConfigError",
    "NumericError",
    "__version__",
    "csv",
    "effective_capacity",
    "fading_nodes",
    "joint_mutual_information",
    "mmse",
    "mutual_information",
    "policy",
    "region",
    "theorem2_boundary",
]


def _value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, Iterable):
        return ",".join(_value(x) for x in v)
    return repr(v)


def _config(config: Mapping | None, **overrides) -> dict[str, str]:
    """Flattens a config mapping to the tool's key = value form.

    Nested mappings become dotted keys: {"qos": {"theta": 0.01}} is qos.theta.
    """
    out: dict[str, str] = {}

    def walk(prefix: str, m: Mapping):
        for k, v in m.items():
            key = f"{prefix}.{k}" if prefix else str(k)
            if isinstance(v, Mapping):
                walk(key, v)
            else:
                out[key] = _value(v)

    walk("", config or {})
    walk("", {k.replace("__", "."): v for k, v in overrides.items()})
    return out


def region(config: Mapping | None = None, **overrides) -> dict:
    """Frontier points for lambda1 in region.lambdas. Keyword overrides use __ for dots."""
    return _core.region(_config(config, **overrides))


def policy(config: Mapping | None = None, **overrides) -> dict:
    """Per-cell powers and rates of the optimal policy at region.lambda1."""
    return _core.policy(_config(config, **overrides))


def csv(command: str, config: Mapping | None = None, **overrides) -> str:
    """CSV text of a command-line subcommand."""
    return _core.csv(command, _config(config, **overrides))
