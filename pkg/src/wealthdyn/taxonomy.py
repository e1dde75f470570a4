"""Economy definition: agent categories, interactions taxonomy, rotation edges.

The economy document is JSON. Category declaration order is the canonical
index order for every wealth vector and rate matrix in the package.

Rate keys are directional strings ``"X->Y"``. For interaction rates a
positive value moves wealth from ``X`` to ``Y`` (payer to receiver); for
rotation rates ``"X->Y"`` is the fraction of ``X``'s wealth per step that
rotates into ``Y``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, ConfigValidationError

Pair = tuple[str, str]

_TOP_REQUIRED = ("max_supply", "delta_t", "steps", "categories")
_TOP_OPTIONAL = ("interactions", "rates", "desired_wealth")
_CATEGORY_REQUIRED = ("name", "initial_wealth")
_CATEGORY_OPTIONAL = ("is_control_mechanism", "rotates_to")
_INTERACTION_FIELDS = ("name", "payer", "receiver")
_RATE_FIELDS = ("beta", "gamma")


@dataclass(frozen=True)
class CategoryDef:
    name: str
    initial_wealth: float
    is_control_mechanism: bool = False
    rotates_to: tuple[str, ...] = ()


@dataclass(frozen=True)
class InteractionDef:
    name: str
    payer: str
    receiver: str


@dataclass(frozen=True)
class RateParams:
    """Directional interaction (``beta``) and rotation (``gamma``) rates."""

    beta: Mapping[Pair, float] = field(default_factory=dict)
    gamma: Mapping[Pair, float] = field(default_factory=dict)


@dataclass(frozen=True)
class EconomyConfig:
    max_supply: float
    delta_t: float
    steps: int
    categories: tuple[CategoryDef, ...]
    interactions: tuple[InteractionDef, ...] = ()
    rates: RateParams = field(default_factory=RateParams)
    desired_wealth: Mapping[str, float] | None = None

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.categories]

    def index(self, name: str) -> int:
        for i, c in enumerate(self.categories):
            if c.name == name:
                return i
        raise KeyError(f"unknown category {name!r}")

    @property
    def initial_wealth(self) -> np.ndarray:
        return np.array([c.initial_wealth for c in self.categories], dtype=float)

    @property
    def desired_vector(self) -> np.ndarray | None:
        if self.desired_wealth is None:
            return None
        return np.array([self.desired_wealth[n] for n in self.names], dtype=float)

    @property
    def control_mechanism(self) -> str | None:
        flagged = [c.name for c in self.categories if c.is_control_mechanism]
        return flagged[0] if len(flagged) == 1 else None

    def interaction(self, name: str) -> InteractionDef:
        for it in self.interactions:
            if it.name == name:
                return it
        raise KeyError(f"unknown interaction {name!r}")

    def rotation_edges(self) -> list[Pair]:
        return [(c.name, dest) for c in self.categories for dest in c.rotates_to]

    def with_rates(self, rates: RateParams) -> "EconomyConfig":
        return EconomyConfig(
            max_supply=self.max_supply,
            delta_t=self.delta_t,
            steps=self.steps,
            categories=self.categories,
            interactions=self.interactions,
            rates=rates,
            desired_wealth=self.desired_wealth,
        )


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)


# --------------------------------------------------------------------------
# parsing


def _fail_unknown(where: str, obj: Mapping, allowed) -> None:
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"unknown field {extra[0]!r} in {where}")


def _require(where: str, obj: Mapping, names) -> None:
    for n in names:
        if n not in obj:
            raise ConfigError(f"missing required field {n!r} in {where}")


def _number(where: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def _string(where: str, value: Any) -> str:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where} must be a non-empty string, got {value!r}")
    return value


def parse_pair(key: str) -> Pair:
    parts = key.split("->")
    if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
        raise ConfigError(f"rate key {key!r} is not of the form 'From->To'")
    return parts[0].strip(), parts[1].strip()


def format_pair(pair: Pair) -> str:
    return f"{pair[0]}->{pair[1]}"


def _rate_map(where: str, raw: Any) -> dict[Pair, float]:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object")
    out: dict[Pair, float] = {}
    for key, value in raw.items():
        out[parse_pair(key)] = _number(f"{where}[{key!r}]", value)
    return out


def _economy_from_mapping(doc: Any) -> EconomyConfig:
    if not isinstance(doc, dict):
        raise ConfigError("economy document must be a JSON object")
    _fail_unknown("document", doc, _TOP_REQUIRED + _TOP_OPTIONAL)
    _require("document", doc, _TOP_REQUIRED)

    steps = doc["steps"]
    if isinstance(steps, bool) or not isinstance(steps, int):
        raise ConfigError(f"steps must be an integer, got {steps!r}")

    if not isinstance(doc["categories"], list):
        raise ConfigError("categories must be an array")
    categories = []
    for k, raw in enumerate(doc["categories"]):
        where = f"categories[{k}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where} must be an object")
        _fail_unknown(where, raw, _CATEGORY_REQUIRED + _CATEGORY_OPTIONAL)
        _require(where, raw, _CATEGORY_REQUIRED)
        flag = raw.get("is_control_mechanism", False)
        if not isinstance(flag, bool):
            raise ConfigError(f"{where}.is_control_mechanism must be a boolean")
        rotates = raw.get("rotates_to", [])
        if not isinstance(rotates, list):
            raise ConfigError(f"{where}.rotates_to must be an array")
        categories.append(
            CategoryDef(
                name=_string(f"{where}.name", raw["name"]),
                initial_wealth=_number(f"{where}.initial_wealth", raw["initial_wealth"]),
                is_control_mechanism=flag,
                rotates_to=tuple(_string(f"{where}.rotates_to", r) for r in rotates),
            )
        )

    raw_interactions = doc.get("interactions", [])
    if not isinstance(raw_interactions, list):
        raise ConfigError("interactions must be an array")
    interactions = []
    for k, raw in enumerate(raw_interactions):
        where = f"interactions[{k}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where} must be an object")
        _fail_unknown(where, raw, _INTERACTION_FIELDS)
        _require(where, raw, _INTERACTION_FIELDS)
        interactions.append(InteractionDef(*(_string(f"{where}.{f}", raw[f]) for f in _INTERACTION_FIELDS)))

    raw_rates = doc.get("rates", {})
    if not isinstance(raw_rates, dict):
        raise ConfigError("rates must be an object")
    _fail_unknown("rates", raw_rates, _RATE_FIELDS)
    rates = RateParams(
        beta=_rate_map("rates.beta", raw_rates.get("beta", {})),
        gamma=_rate_map("rates.gamma", raw_rates.get("gamma", {})),
    )

    desired = doc.get("desired_wealth")
    if desired is not None:
        if not isinstance(desired, dict):
            raise ConfigError("desired_wealth must be an object")
        desired = {k: _number(f"desired_wealth[{k!r}]", v) for k, v in desired.items()}

    return EconomyConfig(
        max_supply=_number("max_supply", doc["max_supply"]),
        delta_t=_number("delta_t", doc["delta_t"]),
        steps=steps,
        categories=tuple(categories),
        interactions=tuple(interactions),
        rates=rates,
        desired_wealth=desired,
    )


def parse_economy_config(text: str, validate: bool = True) -> EconomyConfig:
    """Parse an economy JSON document.

    Raises :class:`ConfigError` for syntax errors (with line/column),
    unknown or missing fields and wrong value types. With ``validate``
    (the default) invariant violations raise :class:`ConfigValidationError`.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    config = _economy_from_mapping(doc)
    if validate:
        report = validate_economy(config)
        if not report.ok:
            raise ConfigValidationError(report.violations)
    return config


def load_economy_config(path, validate: bool = True) -> EconomyConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_economy_config(fh.read(), validate=validate)


def economy_to_dict(config: EconomyConfig) -> dict:
    doc: dict[str, Any] = {
        "max_supply": config.max_supply,
        "delta_t": config.delta_t,
        "steps": config.steps,
        "categories": [
            {
                "name": c.name,
                "initial_wealth": c.initial_wealth,
                "is_control_mechanism": c.is_control_mechanism,
                "rotates_to": list(c.rotates_to),
            }
            for c in config.categories
        ],
        "interactions": [
            {"name": i.name, "payer": i.payer, "receiver": i.receiver} for i in config.interactions
        ],
        "rates": rates_to_dict(config.rates),
    }
    if config.desired_wealth is not None:
        doc["desired_wealth"] = dict(config.desired_wealth)
    return doc


def rates_to_dict(rates: RateParams) -> dict:
    return {
        "beta": {format_pair(k): v for k, v in rates.beta.items()},
        "gamma": {format_pair(k): v for k, v in rates.gamma.items()},
    }


def serialize_economy_config(config: EconomyConfig) -> str:
    return json.dumps(economy_to_dict(config), indent=2)


# --------------------------------------------------------------------------
# validation


def _duplicates(names) -> list[str]:
    seen, dup = set(), []
    for n in names:
        if n in seen and n not in dup:
            dup.append(n)
        seen.add(n)
    return dup


def validate_economy(config: EconomyConfig) -> ValidationReport:
    """Collect every invariant violation; an empty report means valid."""
    v: list[str] = []
    m = config.max_supply
    names = config.names
    known = set(names)

    if not (math.isfinite(m) and m > 0):
        v.append(f"max_supply must be positive, got {m}")
    if not (math.isfinite(config.delta_t) and config.delta_t > 0):
        v.append(f"delta_t must be positive, got {config.delta_t}")
    if config.steps < 1:
        v.append(f"steps must be at least 1, got {config.steps}")
    if not config.categories:
        v.append("no categories declared")

    for n in _duplicates(names):
        v.append(f"duplicate category name {n!r}")
    for n in _duplicates(i.name for i in config.interactions):
        v.append(f"duplicate interaction name {n!r}")

    for c in config.categories:
        if not math.isfinite(c.initial_wealth) or c.initial_wealth < 0:
            v.append(f"category {c.name!r} has negative initial wealth {c.initial_wealth}")
    total = math.fsum(c.initial_wealth for c in config.categories)
    if math.isfinite(m) and abs(total - m) > 1e-9 * abs(m):
        v.append(f"initial wealths sum to {total}, not max_supply {m} (conservation)")

    flagged = [c.name for c in config.categories if c.is_control_mechanism]
    if len(flagged) == 0:
        v.append("no control mechanism")
    elif len(flagged) > 1:
        v.append(f"multiple control mechanisms: {', '.join(flagged)}")

    edges = config.rotation_edges()
    for src, dst in edges:
        if dst not in known:
            v.append(f"category {src!r} rotates to unknown category {dst!r}")
        elif dst == src:
            v.append(f"category {src!r} rotates to itself")
    for n in _duplicates(edges):
        v.append(f"duplicate rotation edge {format_pair(n)}")
    for cm in flagged:
        if config.categories[names.index(cm)].rotates_to:
            v.append(f"control mechanism {cm!r} must not rotate into other categories")
        inbound = [s for s, d in edges if d == cm]
        if inbound:
            v.append(f"control mechanism {cm!r} has inbound rotation from {', '.join(inbound)}")

    pairs = set()
    for it in config.interactions:
        for role in ("payer", "receiver"):
            if getattr(it, role) not in known:
                v.append(f"interaction {it.name!r} {role} {getattr(it, role)!r} is not a declared category")
        if it.payer == it.receiver:
            v.append(f"interaction {it.name!r} has identical payer and receiver")
        pairs.add((it.payer, it.receiver))

    for (a, b), value in config.rates.beta.items():
        key = format_pair((a, b))
        if not math.isfinite(value):
            v.append(f"interaction rate {key} is not finite")
        if (a, b) not in pairs and (b, a) not in pairs:
            v.append(f"interaction rate {key} has no interaction in the taxonomy")
        mirror = config.rates.beta.get((b, a))
        if mirror is not None and a < b and mirror != -value:
            v.append(f"interaction rates {key} and {format_pair((b, a))} conflict")

    edge_set = set(edges)
    for (a, b), value in config.rates.gamma.items():
        key = format_pair((a, b))
        if not (0.0 <= value <= 1.0):
            v.append(f"rotation rate {key}={value} outside [0,1]")
        if (a, b) not in edge_set:
            v.append(f"rotation rate {key} has no matching rotates_to edge")

    if config.desired_wealth is not None:
        d = config.desired_wealth
        for n in d:
            if n not in known:
                v.append(f"desired_wealth names unknown category {n!r}")
        for n in names:
            if n not in d:
                v.append(f"desired_wealth missing category {n!r}")
            elif d[n] < 0:
                v.append(f"desired wealth of {n!r} is negative")
        dtotal = math.fsum(d.values())
        if math.isfinite(m) and abs(dtotal - m) > 1e-9 * abs(m):
            v.append(f"desired wealths sum to {dtotal}, not max_supply {m} (conservation)")

    return ValidationReport(tuple(v))


def interaction_pairs(config: EconomyConfig) -> list[tuple[str, str, list[str]]]:
    """Group interactions by ordered (payer, receiver), in first-seen order."""
    grouped: dict[Pair, list[str]] = {}
    for it in config.interactions:
        grouped.setdefault((it.payer, it.receiver), []).append(it.name)
    return [(p, r, names) for (p, r), names in grouped.items()]
