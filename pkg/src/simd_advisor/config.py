"""YAML config files: classification rules, remedy overrides, and tunable constants.

Example::

    rules:                      # checked before the built-in rules
      - substring: "vectorization is not beneficial"
        category: UNKNOWN
    replace_default_rules: false
    remedies:                   # replaces the whole list for a category
      LIBCALL:
        - kind: flag
          text: "-fveclib=ArmPL"
          rationale: "Use Arm Performance Libraries vector math."
          correctness_note: "Vector math is less precise than scalar libm."
    benefit:
      bounds_discount: 0.5
      reduction_discount: 0.5
    counters:
      tolerance: 0.10
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import yaml

from .advisor import (
    DEFAULT_BOUNDS_DISCOUNT,
    DEFAULT_REDUCTION_DISCOUNT,
    DEFAULT_TABLE,
    BlockerCategory,
    Remedy,
    RemedyKind,
    RuleTable,
)
from .counters import DEFAULT_TOLERANCE
from .errors import ConfigError

RULES_ENV_VAR = "SIMD_ADVISOR_RULES"
_KNOWN_KEYS = {"rules", "replace_default_rules", "remedies", "benefit", "counters"}


@dataclass(frozen=True)
class AdvisorConfig:
    table: RuleTable = DEFAULT_TABLE
    bounds_discount: float = DEFAULT_BOUNDS_DISCOUNT
    reduction_discount: float = DEFAULT_REDUCTION_DISCOUNT
    tolerance: float = DEFAULT_TOLERANCE


def _category(name: Any, where: str) -> BlockerCategory:
    try:
        return BlockerCategory(str(name))
    except ValueError:
        raise ConfigError(f"{where}: unknown category {name!r}") from None


def _remedy(raw: Any, where: str) -> Remedy:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: remedy must be a mapping")
    try:
        return Remedy(
            kind=RemedyKind(raw["kind"]),
            text=str(raw["text"]),
            rationale=str(raw.get("rationale", "")),
            correctness_note=raw.get("correctness_note"),
        )
    except KeyError as exc:
        raise ConfigError(f"{where}: missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _number(section: dict, key: str, default: float, where: str, *, low: float, high: float) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not (low <= value <= high):
        raise ConfigError(f"{where}.{key}: expected a number in [{low}, {high}], got {value!r}")
    return float(value)


def config_from_mapping(data: Any, base: AdvisorConfig | None = None, *, source: str = "<config>") -> AdvisorConfig:
    """Overlay the settings in ``data`` onto ``base`` (defaults when omitted)."""
    base = base or AdvisorConfig()
    if data is None:
        return base
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")

    rules = base.table.rules
    extra = data.get("rules") or []
    if not isinstance(extra, list):
        raise ConfigError(f"{source}: rules must be a list")
    parsed = []
    for i, item in enumerate(extra):
        where = f"{source}: rules[{i}]"
        if not isinstance(item, dict) or "substring" not in item or "category" not in item:
            raise ConfigError(f"{where}: expected {{substring, category}}")
        if not str(item["substring"]):
            raise ConfigError(f"{where}: empty substring")
        parsed.append((str(item["substring"]), _category(item["category"], where)))
    rules = tuple(parsed) + (() if data.get("replace_default_rules") else rules)

    remedy_lists = dict(base.table.remedy_lists)
    overrides = data.get("remedies") or {}
    if not isinstance(overrides, dict):
        raise ConfigError(f"{source}: remedies must be a mapping")
    for name, items in overrides.items():
        cat = _category(name, f"{source}: remedies")
        if cat is BlockerCategory.VECTORIZED:
            raise ConfigError(f"{source}: VECTORIZED cannot have remedies")
        if not isinstance(items, list):
            raise ConfigError(f"{source}: remedies.{name} must be a list")
        remedy_lists[cat] = tuple(_remedy(r, f"{source}: remedies.{name}[{i}]") for i, r in enumerate(items))

    benefit = data.get("benefit") or {}
    counters = data.get("counters") or {}
    if not isinstance(benefit, dict) or not isinstance(counters, dict):
        raise ConfigError(f"{source}: benefit and counters must be mappings")
    return replace(
        base,
        table=RuleTable(rules=rules, remedy_lists=remedy_lists),
        bounds_discount=_number(benefit, "bounds_discount", base.bounds_discount, f"{source}: benefit", low=0, high=1),
        reduction_discount=_number(
            benefit, "reduction_discount", base.reduction_discount, f"{source}: benefit", low=0, high=1
        ),
        tolerance=_number(counters, "tolerance", base.tolerance, f"{source}: counters", low=0, high=float("inf")),
    )


def load_config(path: str | Path, base: AdvisorConfig | None = None) -> AdvisorConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(data, base, source=str(path))


def rules_path_from_env() -> str | None:
    return os.environ.get(RULES_ENV_VAR) or None
