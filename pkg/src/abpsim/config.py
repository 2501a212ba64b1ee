"""Run configuration with layered resolution: built-in defaults, file, overrides.

The built-in defaults reproduce the reference evaluation setup: 600x600 m
terrain, speeds 0-15 m/s, batteries 20-100 units, 180 s runs, equal election
weights, penalty 2, cluster size cap 10 and history depth 5.

Config files are line-oriented ``key = value`` with ``#`` comments. Nested
energy rates use dotted keys (``energy.e_ordinary``); sweep settings use
``sweep.axis`` and ``sweep.values``. Short aliases for the election knobs
(c1, c2, p, T, n, chc_scale) are accepted. Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace

from .codec import MAX_NODE_ID, ProtocolVariant
from .protocols import OPTION_MAX, ElectionParams
from .world import EnergyModel

__all__ = [
    "ConfigError",
    "SimConfig",
    "ExperimentSpec",
    "load_config",
    "parse_config_text",
    "format_resolved",
    "election_params",
    "resolved_dt",
    "mean_speed_range",
    "config_for_point",
    "validate_config",
]

FIGURES = ("fig6", "fig7", "fig8", "fig9")
SWEEP_AXES = ("mean_speed", "node_count")


class ConfigError(ValueError):
    """Bad key, type or value in a configuration source."""


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 50
    terrain_width: float = 600.0
    terrain_height: float = 600.0
    speed_min: float = 0.0
    speed_max: float = 15.0
    battery_min: float = 20.0
    battery_max: float = 100.0
    duration: float = 180.0
    variant: ProtocolVariant = ProtocolVariant.ABP
    degree_weight: float = 0.5
    battery_weight: float = 0.5
    handover_penalty: float = 2.0
    max_members: int = 10
    history_depth: int = 5
    bp_min: float = 1.0
    bp_max: float = 8.0
    mr_ref: float = 4.0
    baseline_bp: float = 5.0
    radio_range: float = 150.0
    competence_scale: float = 0.5
    tick_dt: float = 0.0  # 0 means the default of 0.1 * bp_min
    heading_redraw_interval: float = 0.0
    energy: EnergyModel = field(default_factory=EnergyModel)


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    config: SimConfig = field(default_factory=SimConfig)
    axis: str = "mean_speed"
    values: list[float] = field(default_factory=lambda: [5.0])
    variants: list[ProtocolVariant] = field(
        default_factory=lambda: [ProtocolVariant.ABP]
    )
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    figures: list[str] = field(default_factory=lambda: list(FIGURES))
    out_dir: str = "out"


# Aliases map the compact knob names used in the literature onto field names.
_SIM_ALIASES = {
    "c1": "degree_weight",
    "c2": "battery_weight",
    "p": "handover_penalty",
    "T": "max_members",
    "n": "history_depth",
    "chc_scale": "competence_scale",
}
_SIM_INT_FIELDS = {"node_count", "max_members", "history_depth"}
_ENERGY_FIELDS = {"e_ordinary", "e_ch_base", "e_ch_per_member"}
_SPEC_LIST_FIELDS = {"values", "seeds", "variants", "figures"}
_SPEC_FIELDS = {"name", "out_dir"} | _SPEC_LIST_FIELDS | {"axis"}


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key}: expected a number, got {raw!r}") from None


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key {key}: expected an integer, got {raw!r}") from None


def _parse_variant(key: str, raw: str) -> ProtocolVariant:
    try:
        return ProtocolVariant(raw.strip().upper())
    except ValueError:
        names = ", ".join(v.value for v in ProtocolVariant)
        raise ConfigError(f"key {key}: unknown variant {raw!r} (one of {names})") from None


def _split_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def _apply_one(sim: dict, spec: dict, energy: dict, key: str, raw: str) -> None:
    raw = raw.strip()
    name = _SIM_ALIASES.get(key, key)
    if name.startswith("energy."):
        sub = name.split(".", 1)[1]
        if sub not in _ENERGY_FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        energy[sub] = _parse_float(key, raw)
        return
    if name.startswith("sweep."):
        sub = name.split(".", 1)[1]
        if sub == "axis":
            spec["axis"] = raw
        elif sub == "values":
            spec["values"] = [_parse_float(key, v) for v in _split_list(raw)]
        else:
            raise ConfigError(f"unknown config key {key!r}")
        return
    if name in _SPEC_FIELDS:
        if name == "seeds":
            spec["seeds"] = [_parse_int(key, v) for v in _split_list(raw)]
        elif name == "variants":
            spec["variants"] = [_parse_variant(key, v) for v in _split_list(raw)]
        elif name == "figures":
            figs = _split_list(raw)
            for f in figs:
                if f not in FIGURES:
                    raise ConfigError(f"key {key}: unknown figure {f!r}")
            spec["figures"] = figs
        elif name == "values":
            spec["values"] = [_parse_float(key, v) for v in _split_list(raw)]
        else:
            spec[name] = raw
        return
    sim_fields = {f.name for f in dataclasses.fields(SimConfig)}
    if name not in sim_fields:
        raise ConfigError(f"unknown config key {key!r}")
    if name == "variant":
        sim[name] = _parse_variant(key, raw)
    elif name in _SIM_INT_FIELDS:
        sim[name] = _parse_int(key, raw)
    else:
        sim[name] = _parse_float(key, raw)


def parse_config_text(text: str, spec: ExperimentSpec | None = None) -> ExperimentSpec:
    """Parse ``key = value`` lines on top of an existing spec (or the defaults)."""
    base = spec if spec is not None else ExperimentSpec()
    sim: dict = {}
    exp: dict = {}
    energy: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        _apply_one(sim, exp, energy, key.strip(), raw)
    if energy:
        merged = dataclasses.asdict(base.config.energy)
        merged.update(energy)
        try:
            sim["energy"] = EnergyModel(**merged)
        except ValueError as exc:
            raise ConfigError(f"key energy.*: {exc}") from None
    config = replace(base.config, **sim) if sim else base.config
    out = ExperimentSpec(
        name=exp.get("name", base.name),
        config=config,
        axis=exp.get("axis", base.axis),
        values=exp.get("values", list(base.values)),
        variants=exp.get("variants", list(base.variants)),
        seeds=exp.get("seeds", list(base.seeds)),
        figures=exp.get("figures", list(base.figures)),
        out_dir=exp.get("out_dir", base.out_dir),
    )
    return out


def load_config(path: str | None = None, overrides: list[str] | None = None) -> ExperimentSpec:
    """Layered resolution: built-in defaults, then the file, then overrides.

    Overrides are ``key=value`` strings as passed by the CLI's ``--set``.
    The fully resolved spec is validated before being returned.
    """
    spec = ExperimentSpec()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        spec = parse_config_text(text, spec)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        spec = parse_config_text(item, spec)
    validate_spec(spec)
    return spec


def resolved_dt(config: SimConfig) -> float:
    """Simulation tick: one tenth of the shortest broadcast period by default."""
    return config.tick_dt if config.tick_dt > 0 else 0.1 * config.bp_min


def _is_multiple(value: float, step: float) -> bool:
    ratio = value / step
    return abs(ratio - round(ratio)) < 1e-6


def validate_config(config: SimConfig) -> None:
    """Reject out-of-range values with an error naming the offending key."""
    if not 0 <= config.node_count <= MAX_NODE_ID:
        raise ConfigError(
            f"key node_count: {config.node_count} outside 0..{MAX_NODE_ID} "
            "(8-bit id field)"
        )
    if config.terrain_width <= 0 or config.terrain_height <= 0:
        raise ConfigError("key terrain_width/terrain_height: terrain must be positive")
    if not 0 <= config.speed_min <= config.speed_max:
        raise ConfigError("key speed_min/speed_max: need 0 <= speed_min <= speed_max")
    if not 0 <= config.battery_min <= config.battery_max:
        raise ConfigError("key battery_min/battery_max: need 0 <= battery_min <= battery_max")
    if config.duration < 0:
        raise ConfigError("key duration: must be non-negative")
    if not (0 <= config.degree_weight <= 1 and 0 <= config.battery_weight <= 1):
        raise ConfigError("key c1/c2: weights must lie in [0, 1]")
    if abs(config.degree_weight + config.battery_weight - 1.0) > 1e-9:
        raise ConfigError("key c1/c2: weights must sum to 1")
    if config.handover_penalty < 0:
        raise ConfigError("key p: handover penalty must be non-negative")
    if not 1 <= config.max_members <= OPTION_MAX:
        raise ConfigError(
            f"key T: max_members {config.max_members} outside 1..{OPTION_MAX} "
            "(4-bit Option field)"
        )
    if config.history_depth < 2:
        raise ConfigError("key n: history depth must be at least 2")
    if not 0 < config.bp_min <= config.bp_max:
        raise ConfigError("key bp_min/bp_max: need 0 < bp_min <= bp_max")
    if config.bp_max / config.bp_min > 255:
        raise ConfigError("key bp_max: bp_max/bp_min must not exceed 255 (8-bit BP field)")
    if config.mr_ref <= 0:
        raise ConfigError("key mr_ref: must be positive")
    if config.baseline_bp <= 0:
        raise ConfigError("key baseline_bp: must be positive")
    if config.radio_range <= 0:
        raise ConfigError("key radio_range: must be positive")
    if config.competence_scale <= 0:
        raise ConfigError("key chc_scale: must be positive")
    if config.tick_dt < 0:
        raise ConfigError("key tick_dt: must be non-negative")
    dt = resolved_dt(config)
    if not _is_multiple(config.bp_min, dt):
        raise ConfigError("key tick_dt: bp_min must be a whole number of ticks")
    if not _is_multiple(config.baseline_bp, dt):
        raise ConfigError("key baseline_bp: must be a whole number of ticks")
    if config.heading_redraw_interval < 0:
        raise ConfigError("key heading_redraw_interval: must be non-negative")
    if config.heading_redraw_interval > 0 and not _is_multiple(
        config.heading_redraw_interval, dt
    ):
        raise ConfigError("key heading_redraw_interval: must be a whole number of ticks")


def validate_spec(spec: ExperimentSpec) -> None:
    validate_config(spec.config)
    if spec.axis not in SWEEP_AXES:
        raise ConfigError(f"key sweep.axis: {spec.axis!r} not one of {SWEEP_AXES}")
    if not spec.values:
        raise ConfigError("key sweep.values: at least one value required")
    if not spec.seeds:
        raise ConfigError("key seeds: at least one seed required")
    if not spec.variants:
        raise ConfigError("key variants: at least one variant required")
    if spec.axis == "node_count":
        for v in spec.values:
            if v != int(v):
                raise ConfigError(f"key sweep.values: node_count value {v} not an integer")
        # Point configs are validated again, but fail early with a clear key.
        for v in spec.values:
            if not 0 <= int(v) <= MAX_NODE_ID:
                raise ConfigError(f"key sweep.values: node_count {int(v)} out of range")
    else:
        for v in spec.values:
            if v < 0:
                raise ConfigError(f"key sweep.values: mean speed {v} must be non-negative")


def election_params(config: SimConfig) -> ElectionParams:
    return ElectionParams(
        degree_weight=config.degree_weight,
        battery_weight=config.battery_weight,
        handover_penalty=config.handover_penalty,
        max_members=config.max_members,
    )


def mean_speed_range(mean: float) -> tuple[float, float]:
    """Speed range for a target average: uniform on [mean-w, mean+w].

    The half-width w = min(mean, 15 - mean) keeps the band inside the 0-15
    m/s envelope (clamped at zero width above 15).
    """
    w = max(0.0, min(mean, 15.0 - mean))
    return max(0.0, mean - w), mean + w


def config_for_point(config: SimConfig, axis: str, value: float) -> SimConfig:
    """Specialize a base config to one sweep point."""
    if axis == "node_count":
        return replace(config, node_count=int(value))
    if axis == "mean_speed":
        lo, hi = mean_speed_range(value)
        return replace(config, speed_min=lo, speed_max=hi)
    raise ConfigError(f"unknown sweep axis {axis!r}")


def format_resolved(spec: ExperimentSpec) -> str:
    """Echo the fully resolved configuration in re-loadable form."""
    cfg = spec.config
    lines = [
        "# resolved configuration",
        f"name = {spec.name}",
        f"sweep.axis = {spec.axis}",
        "sweep.values = " + ", ".join(repr(v) for v in spec.values),
        "variants = " + ", ".join(v.value for v in spec.variants),
        "seeds = " + ", ".join(str(s) for s in spec.seeds),
        "figures = " + ", ".join(spec.figures),
        f"out_dir = {spec.out_dir}",
    ]
    for f in dataclasses.fields(SimConfig):
        value = getattr(cfg, f.name)
        if f.name == "variant":
            lines.append(f"variant = {value.value}")
        elif f.name == "energy":
            lines.append(f"energy.e_ordinary = {value.e_ordinary!r}")
            lines.append(f"energy.e_ch_base = {value.e_ch_base!r}")
            lines.append(f"energy.e_ch_per_member = {value.e_ch_per_member!r}")
        elif isinstance(value, float):
            lines.append(f"{f.name} = {value!r}")
        else:
            lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
