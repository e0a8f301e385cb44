"""Experiment configuration: strict INI-style files with full validation.

The format is line-oriented ``key = value`` under ``[section]`` headers.
Every section and key is schema-checked; unknown names are hard errors so
typos cannot silently fall back to defaults.  ``write_config`` followed by
``load_config`` reproduces the configuration exactly.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .fuzzy import (
    CONTROLLER_NAMES,
    FuzzyControllerSpec,
    default_rule_tables,
    named_spec_from_tables,
    rule_table_axes,
)
from .geometry import PlatformGeometry, mirrored_pair_geometry
from .plant import PlantParams
from .vision import HsvRange, SceneConfig, VisionParams

SENSOR_MODES = ("direct", "vision")


class ConfigError(ValueError):
    """Configuration file is missing, malformed, or violates an invariant."""


@dataclass(frozen=True)
class GeometryParams:
    """Parametric form of the mirrored three-pair platform geometry."""

    base_anchor_radius_mm: float = 130.0
    base_anchor_offset_deg: float = 20.0
    platform_joint_radius_mm: float = 100.0
    platform_joint_offset_deg: float = 8.0
    horn_length_mm: float = 40.0
    rod_length_mm: float = 125.0
    home_height_mm: float | None = None

    def __post_init__(self):
        for name in (
            "base_anchor_radius_mm",
            "platform_joint_radius_mm",
            "horn_length_mm",
            "rod_length_mm",
        ):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        for name in ("base_anchor_offset_deg", "platform_joint_offset_deg"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and 0.0 <= v < 60.0):
                raise ValueError(f"{name} must be in [0, 60) degrees, got {v}")
            object.__setattr__(self, name, v)
        if self.home_height_mm is not None:
            v = float(self.home_height_mm)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"home_height_mm must be positive, got {v}")
            object.__setattr__(self, "home_height_mm", v)

    def build(self) -> PlatformGeometry:
        return mirrored_pair_geometry(
            base_radius=self.base_anchor_radius_mm,
            platform_radius=self.platform_joint_radius_mm,
            anchor_offset=math.radians(self.base_anchor_offset_deg),
            joint_offset=math.radians(self.platform_joint_offset_deg),
            horn_length=self.horn_length_mm,
            rod_length=self.rod_length_mm,
            home_height=self.home_height_mm,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one closed-loop run needs, ready for the harness."""

    controller: FuzzyControllerSpec
    gains: tuple[float, float] | None = None
    initial_pos: tuple[float, float] = (150.0, 150.0)
    initial_vel: tuple[float, float] = (0.0, 0.0)
    duration_s: float = 120.0
    sensor: str = "direct"
    seed: int | None = None
    plant: PlantParams = field(default_factory=PlantParams)
    geometry: GeometryParams = field(default_factory=GeometryParams)
    scene: SceneConfig = field(default_factory=SceneConfig)
    vision: VisionParams = field(default_factory=VisionParams)
    band_window_s: float = 20.0
    stab_band_mm: float = 10.0
    stab_hold_s: float = 10.0
    out_dir: str | None = None

    def __post_init__(self):
        if self.sensor not in SENSOR_MODES:
            raise ValueError(f"sensor must be one of {SENSOR_MODES}, got {self.sensor!r}")
        if not (math.isfinite(self.duration_s) and self.duration_s > 0):
            raise ValueError("duration_s must be positive")
        for name in ("band_window_s", "stab_band_mm", "stab_hold_s"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        pos = tuple(float(v) for v in self.initial_pos)
        vel = tuple(float(v) for v in self.initial_vel)
        if len(pos) != 2 or len(vel) != 2:
            raise ValueError("initial position and velocity must be 2-vectors")
        if not all(math.isfinite(v) for v in pos + vel):
            raise ValueError("initial state must be finite")
        half = self.plant.plate_half_extent
        if max(abs(pos[0]), abs(pos[1])) >= half:
            raise ValueError(
                f"initial position {pos} must be inside the plate (|x|,|y| < {half})"
            )
        object.__setattr__(self, "initial_pos", pos)
        object.__setattr__(self, "initial_vel", vel)
        if self.gains is not None:
            if self.controller.name != "fuzzy_pd":
                raise ValueError("gains apply to the fuzzy_pd controller only")
            kp, kd = (float(g) for g in self.gains)
            if not (math.isfinite(kp) and math.isfinite(kd)):
                raise ValueError("gains must be finite")
            object.__setattr__(self, "gains", (kp, kd))
        if self.seed is not None:
            if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
                raise ValueError("seed must be a non-negative integer")
        if self.sensor == "vision" and self.vision.noise_sigma > 0 and self.seed is None:
            raise ValueError("seed is required when vision noise is enabled")


# --- schema ------------------------------------------------------------

_SCHEMA: dict[str, tuple[tuple[str, bool], ...]] = {
    # section -> ((key, required), ...)
    "experiment": (
        ("controller", True),
        ("duration_s", True),
        ("sensor", True),
        ("initial_x_mm", True),
        ("initial_y_mm", True),
        ("initial_vx_mm_s", False),
        ("initial_vy_mm_s", False),
        ("seed", False),
        ("band_window_s", False),
        ("stab_band_mm", False),
        ("stab_hold_s", False),
        ("out_dir", False),
    ),
    "plant": (
        ("plate_half_extent_mm", False),
        ("gravity_mm_s2", False),
        ("rolling_factor", False),
        ("viscous_damping", True),
        ("actuator_rate_limit_deg_s", False),
        ("sensor_period_s", False),
        ("substep_target_s", False),
    ),
    "geometry": (
        ("base_anchor_radius_mm", False),
        ("base_anchor_offset_deg", False),
        ("platform_joint_radius_mm", False),
        ("platform_joint_offset_deg", False),
        ("horn_length_mm", False),
        ("rod_length_mm", False),
        ("home_height_mm", False),
    ),
    "scene": (
        ("width_px", False),
        ("height_px", False),
        ("mm_per_pixel", False),
        ("center_x_px", False),
        ("center_y_px", False),
        ("plate_half_extent_mm", False),
        ("ball_radius_mm", False),
        ("background_rgb", False),
        ("platform_rgb", False),
        ("ball_rgb", False),
    ),
    "vision": (
        ("blur_sigma", False),
        ("noise_sigma", False),
        ("hue_lo_deg", False),
        ("hue_hi_deg", False),
        ("sat_lo", False),
        ("sat_hi", False),
        ("val_lo", False),
        ("val_hi", False),
        ("min_area_px", False),
        ("max_area_px", False),
        ("min_circularity", False),
    ),
    "controller": (
        ("name", True),
        ("kp", False),
        ("kd", False),
    ),
}

_REQUIRED_SECTIONS = ("experiment", "plant", "geometry", "controller")


def _required_keys_text() -> str:
    parts = []
    for sec in _REQUIRED_SECTIONS:
        keys = [k for k, req in _SCHEMA[sec] if req]
        parts.append(f"[{sec}] needs " + (", ".join(keys) if keys else "no keys"))
    return "; ".join(parts)


class _SectionView:
    """Typed access to one parsed section with error context."""

    def __init__(self, path, name, items):
        self.path = path
        self.name = name
        self.items = items

    def _fail(self, key, msg):
        raise ConfigError(f"{self.path}: [{self.name}] {key}: {msg}")

    def get(self, key, default=None):
        return self.items.get(key, default)

    def text(self, key, default=None):
        raw = self.items.get(key)
        if raw is None or raw == "":
            return default
        return raw

    def number(self, key, default=None, convert=float, required=False):
        raw = self.items.get(key)
        if raw is None or raw == "":
            if required:
                self._fail(key, "required value is missing or empty")
            return default
        try:
            return convert(raw)
        except ValueError:
            self._fail(key, f"expected a number, got {raw!r}")

    def integer(self, key, default=None):
        raw = self.items.get(key)
        if raw is None or raw == "":
            return default
        try:
            return int(raw)
        except ValueError:
            self._fail(key, f"expected an integer, got {raw!r}")

    def rgb(self, key, default):
        raw = self.items.get(key)
        if raw is None or raw == "":
            return default
        parts = raw.split()
        if len(parts) != 3:
            self._fail(key, f"expected three byte values, got {raw!r}")
        try:
            vals = tuple(int(p) for p in parts)
        except ValueError:
            self._fail(key, f"expected three byte values, got {raw!r}")
        if not all(0 <= v <= 255 for v in vals):
            self._fail(key, "color components must be in 0..255")
        return vals


def _parse_sections(path: Path, text: str) -> dict:
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), strict=True
    )
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    out = {}
    for section in parser.sections():
        out[section] = dict(parser.items(section))
    return out


def _check_schema(path: Path, sections: dict):
    known_rule_prefix = "controller.rules."
    for name, items in sections.items():
        if name.startswith(known_rule_prefix):
            out_name = name[len(known_rule_prefix) :]
            if not out_name:
                raise ConfigError(f"{path}: rule section {name!r} names no output")
            continue
        if name not in _SCHEMA:
            raise ConfigError(
                f"{path}: unknown section [{name}]; known sections: "
                + ", ".join(sorted(_SCHEMA))
                + ", controller.rules.<output>"
            )
        allowed = {k for k, _ in _SCHEMA[name]}
        for key in items:
            if key not in allowed:
                raise ConfigError(
                    f"{path}: unknown key {key!r} in [{name}]; allowed keys: "
                    + ", ".join(sorted(allowed))
                )
    missing_sections = [s for s in _REQUIRED_SECTIONS if s not in sections]
    if missing_sections:
        raise ConfigError(
            f"{path}: missing required section(s) "
            + ", ".join(f"[{s}]" for s in missing_sections)
            + f"; {_required_keys_text()}"
        )
    for name in _REQUIRED_SECTIONS:
        for key, required in _SCHEMA[name]:
            if required and key not in sections[name]:
                raise ConfigError(
                    f"{path}: [{name}] is missing required key {key!r}; "
                    + _required_keys_text()
                )


def _parse_rule_tables(path: Path, sections: dict, name: str):
    axes = rule_table_axes(name)
    tables = {}
    for sec_name, items in sections.items():
        if not sec_name.startswith("controller.rules."):
            continue
        out_name = sec_name[len("controller.rules.") :]
        if out_name not in axes:
            raise ConfigError(
                f"{path}: [{sec_name}]: controller {name!r} has no output "
                f"{out_name!r}; outputs: {sorted(axes)}"
            )
        view = _SectionView(path, sec_name, items)
        rows_var, cols_var = axes[out_name]
        if view.text("rows") != rows_var or view.text("cols") != cols_var:
            raise ConfigError(
                f"{path}: [{sec_name}]: grid must declare rows = {rows_var}, "
                f"cols = {cols_var}"
            )
        grid = {}
        for key, raw in items.items():
            if key in ("rows", "cols"):
                continue
            grid[key] = tuple(raw.split())
        tables[out_name] = grid
    if not tables:
        return None
    if sorted(tables) != sorted(axes):
        raise ConfigError(
            f"{path}: rule grids must cover all outputs {sorted(axes)}, got {sorted(tables)}"
        )
    return tables


def _grids_to_spec(path: Path, name: str, raw_tables) -> FuzzyControllerSpec:
    from .fuzzy import _NAMED_LAYOUT  # layout rows come from the pinned universes

    want_in, _ = _NAMED_LAYOUT[name]
    axes = rule_table_axes(name)
    in_labels = {nm: labels for nm, _, _, labels in want_in}
    tables = {}
    for out_name, grid in raw_tables.items():
        rows_var, _ = axes[out_name]
        row_labels = in_labels[rows_var]
        if sorted(grid) != sorted(row_labels):
            raise ConfigError(
                f"{path}: [controller.rules.{out_name}]: rows must be exactly "
                f"{list(row_labels)}, got {sorted(grid)}"
            )
        tables[out_name] = tuple(grid[r] for r in row_labels)
    try:
        return named_spec_from_tables(name, tables)
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid controller rules: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not text.strip():
        raise ConfigError(f"{path}: empty config; {_required_keys_text()}")
    sections = _parse_sections(path, text)
    _check_schema(path, sections)

    exp = _SectionView(path, "experiment", sections["experiment"])
    ctl = _SectionView(path, "controller", sections["controller"])

    name = ctl.text("name", "").lower()
    if name not in CONTROLLER_NAMES:
        ctl._fail("name", f"must be one of {CONTROLLER_NAMES}, got {name!r}")
    if exp.text("controller", "").lower() != name:
        exp._fail("controller", f"does not match [controller] name = {name}")

    gains = None
    if name == "fuzzy_pd":
        kp = ctl.number("kp")
        kd = ctl.number("kd")
        if (kp is None) != (kd is None):
            ctl._fail("kp", "kp and kd must be given together")
        if kp is not None:
            gains = (kp, kd)
    elif ctl.get("kp") is not None or ctl.get("kd") is not None:
        ctl._fail("kp", f"gains apply to fuzzy_pd only, not {name}")

    raw_tables = _parse_rule_tables(path, sections, name)
    if raw_tables is None:
        spec = named_spec_from_tables(name, default_rule_tables(name))
    else:
        spec = _grids_to_spec(path, name, raw_tables)

    plant_view = _SectionView(path, "plant", sections["plant"])
    defaults = PlantParams()
    try:
        plant = PlantParams(
            plate_half_extent=plant_view.number("plate_half_extent_mm", defaults.plate_half_extent),
            gravity=plant_view.number("gravity_mm_s2", defaults.gravity),
            rolling_factor=plant_view.number("rolling_factor", defaults.rolling_factor),
            viscous_damping=plant_view.number("viscous_damping", required=True),
            actuator_rate_limit=plant_view.number(
                "actuator_rate_limit_deg_s", defaults.actuator_rate_limit
            ),
            sensor_period=plant_view.number("sensor_period_s", defaults.sensor_period),
            substep_target=plant_view.number("substep_target_s", defaults.substep_target),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: [plant]: {exc}") from exc

    geo_view = _SectionView(path, "geometry", sections["geometry"])
    gdef = GeometryParams()
    try:
        geometry = GeometryParams(
            base_anchor_radius_mm=geo_view.number(
                "base_anchor_radius_mm", gdef.base_anchor_radius_mm
            ),
            base_anchor_offset_deg=geo_view.number(
                "base_anchor_offset_deg", gdef.base_anchor_offset_deg
            ),
            platform_joint_radius_mm=geo_view.number(
                "platform_joint_radius_mm", gdef.platform_joint_radius_mm
            ),
            platform_joint_offset_deg=geo_view.number(
                "platform_joint_offset_deg", gdef.platform_joint_offset_deg
            ),
            horn_length_mm=geo_view.number("horn_length_mm", gdef.horn_length_mm),
            rod_length_mm=geo_view.number("rod_length_mm", gdef.rod_length_mm),
            home_height_mm=geo_view.number("home_height_mm", None),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: [geometry]: {exc}") from exc

    sdef = SceneConfig()
    scene_view = _SectionView(path, "scene", sections.get("scene", {}))
    try:
        scene = SceneConfig(
            width=scene_view.integer("width_px", sdef.width),
            height=scene_view.integer("height_px", sdef.height),
            mm_per_pixel=scene_view.number("mm_per_pixel", sdef.mm_per_pixel),
            center_px=(
                scene_view.number("center_x_px", sdef.center_px[0]),
                scene_view.number("center_y_px", sdef.center_px[1]),
            ),
            plate_half_extent_mm=scene_view.number(
                "plate_half_extent_mm", sdef.plate_half_extent_mm
            ),
            ball_radius_mm=scene_view.number("ball_radius_mm", sdef.ball_radius_mm),
            background_rgb=scene_view.rgb("background_rgb", sdef.background_rgb),
            platform_rgb=scene_view.rgb("platform_rgb", sdef.platform_rgb),
            ball_rgb=scene_view.rgb("ball_rgb", sdef.ball_rgb),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: [scene]: {exc}") from exc

    vdef = VisionParams()
    vis_view = _SectionView(path, "vision", sections.get("vision", {}))
    try:
        vision = VisionParams(
            blur_sigma=vis_view.number("blur_sigma", vdef.blur_sigma),
            noise_sigma=vis_view.number("noise_sigma", vdef.noise_sigma),
            ball_range=HsvRange(
                vis_view.number("hue_lo_deg", vdef.ball_range.hue_lo),
                vis_view.number("hue_hi_deg", vdef.ball_range.hue_hi),
                vis_view.number("sat_lo", vdef.ball_range.sat_lo),
                vis_view.number("sat_hi", vdef.ball_range.sat_hi),
                vis_view.number("val_lo", vdef.ball_range.val_lo),
                vis_view.number("val_hi", vdef.ball_range.val_hi),
            ),
            min_area_px=vis_view.integer("min_area_px", vdef.min_area_px),
            max_area_px=vis_view.integer("max_area_px", vdef.max_area_px),
            min_circularity=vis_view.number("min_circularity", vdef.min_circularity),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: [vision]: {exc}") from exc

    sensor = exp.text("sensor", "direct").lower()
    try:
        return ExperimentConfig(
            controller=spec,
            gains=gains,
            initial_pos=(
                exp.number("initial_x_mm", required=True),
                exp.number("initial_y_mm", required=True),
            ),
            initial_vel=(
                exp.number("initial_vx_mm_s", 0.0),
                exp.number("initial_vy_mm_s", 0.0),
            ),
            duration_s=exp.number("duration_s", required=True),
            sensor=sensor,
            seed=exp.integer("seed", None),
            plant=plant,
            geometry=geometry,
            scene=scene,
            vision=vision,
            band_window_s=exp.number("band_window_s", 20.0),
            stab_band_mm=exp.number("stab_band_mm", 10.0),
            stab_hold_s=exp.number("stab_hold_s", 10.0),
            out_dir=exp.text("out_dir", None),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# --- writing -----------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_to_text(cfg: ExperimentConfig) -> str:
    """Serialise a configuration; load_config(write) reproduces it exactly."""
    spec = cfg.controller
    lines = ["[experiment]"]
    lines.append(f"controller = {spec.name}")
    lines.append(f"duration_s = {_fmt(cfg.duration_s)}")
    lines.append(f"sensor = {cfg.sensor}")
    if cfg.seed is not None:
        lines.append(f"seed = {cfg.seed}")
    lines.append(f"initial_x_mm = {_fmt(cfg.initial_pos[0])}")
    lines.append(f"initial_y_mm = {_fmt(cfg.initial_pos[1])}")
    lines.append(f"initial_vx_mm_s = {_fmt(cfg.initial_vel[0])}")
    lines.append(f"initial_vy_mm_s = {_fmt(cfg.initial_vel[1])}")
    lines.append(f"band_window_s = {_fmt(cfg.band_window_s)}")
    lines.append(f"stab_band_mm = {_fmt(cfg.stab_band_mm)}")
    lines.append(f"stab_hold_s = {_fmt(cfg.stab_hold_s)}")
    if cfg.out_dir is not None:
        lines.append(f"out_dir = {cfg.out_dir}")

    p = cfg.plant
    lines += [
        "",
        "[plant]",
        f"plate_half_extent_mm = {_fmt(p.plate_half_extent)}",
        f"gravity_mm_s2 = {_fmt(p.gravity)}",
        f"rolling_factor = {_fmt(p.rolling_factor)}",
        f"viscous_damping = {_fmt(p.viscous_damping)}",
        f"actuator_rate_limit_deg_s = {_fmt(p.actuator_rate_limit)}",
        f"sensor_period_s = {_fmt(p.sensor_period)}",
        f"substep_target_s = {_fmt(p.substep_target)}",
    ]

    g = cfg.geometry
    lines += [
        "",
        "[geometry]",
        f"base_anchor_radius_mm = {_fmt(g.base_anchor_radius_mm)}",
        f"base_anchor_offset_deg = {_fmt(g.base_anchor_offset_deg)}",
        f"platform_joint_radius_mm = {_fmt(g.platform_joint_radius_mm)}",
        f"platform_joint_offset_deg = {_fmt(g.platform_joint_offset_deg)}",
        f"horn_length_mm = {_fmt(g.horn_length_mm)}",
        f"rod_length_mm = {_fmt(g.rod_length_mm)}",
    ]
    if g.home_height_mm is not None:
        lines.append(f"home_height_mm = {_fmt(g.home_height_mm)}")

    s = cfg.scene
    lines += [
        "",
        "[scene]",
        f"width_px = {s.width}",
        f"height_px = {s.height}",
        f"mm_per_pixel = {_fmt(s.mm_per_pixel)}",
        f"center_x_px = {_fmt(s.center_px[0])}",
        f"center_y_px = {_fmt(s.center_px[1])}",
        f"plate_half_extent_mm = {_fmt(s.plate_half_extent_mm)}",
        f"ball_radius_mm = {_fmt(s.ball_radius_mm)}",
        f"background_rgb = {s.background_rgb[0]} {s.background_rgb[1]} {s.background_rgb[2]}",
        f"platform_rgb = {s.platform_rgb[0]} {s.platform_rgb[1]} {s.platform_rgb[2]}",
        f"ball_rgb = {s.ball_rgb[0]} {s.ball_rgb[1]} {s.ball_rgb[2]}",
    ]

    v = cfg.vision
    lines += [
        "",
        "[vision]",
        f"blur_sigma = {_fmt(v.blur_sigma)}",
        f"noise_sigma = {_fmt(v.noise_sigma)}",
        f"hue_lo_deg = {_fmt(v.ball_range.hue_lo)}",
        f"hue_hi_deg = {_fmt(v.ball_range.hue_hi)}",
        f"sat_lo = {_fmt(v.ball_range.sat_lo)}",
        f"sat_hi = {_fmt(v.ball_range.sat_hi)}",
        f"val_lo = {_fmt(v.ball_range.val_lo)}",
        f"val_hi = {_fmt(v.ball_range.val_hi)}",
        f"min_area_px = {v.min_area_px}",
        f"max_area_px = {v.max_area_px}",
        f"min_circularity = {_fmt(v.min_circularity)}",
    ]

    lines += ["", "[controller]", f"name = {spec.name}"]
    if cfg.gains is not None:
        lines.append(f"kp = {_fmt(cfg.gains[0])}")
        lines.append(f"kd = {_fmt(cfg.gains[1])}")

    axes = rule_table_axes(spec.name)
    tables = _tables_from_spec(spec)
    for out_name in sorted(tables):
        rows_var, cols_var = axes[out_name]
        lines += ["", f"[controller.rules.{out_name}]"]
        lines.append(f"rows = {rows_var}")
        lines.append(f"cols = {cols_var}")
        row_labels = next(v.labels for v in spec.inputs if v.name == rows_var)
        for label, row in zip(row_labels, tables[out_name]):
            lines.append(f"{label} = " + " ".join(row))
    return "\n".join(lines) + "\n"


def _tables_from_spec(spec: FuzzyControllerSpec):
    """Recover per-output label grids from the expanded product rules."""
    axes = rule_table_axes(spec.name)
    in_labels = {v.name: v.labels for v in spec.inputs}
    tables = {}
    for out_name, (rows_var, cols_var) in axes.items():
        rows, cols = in_labels[rows_var], in_labels[cols_var]
        index = {label: k for k, label in enumerate(cols)}
        grid = [[None] * len(cols) for _ in rows]
        row_index = {label: k for k, label in enumerate(rows)}
        for rule in spec.rules:
            ante = dict(rule.antecedent)
            cons = dict(rule.consequent)
            if out_name not in cons:
                continue
            cell = grid[row_index[ante[rows_var]]]
            j = index[ante[cols_var]]
            if cell[j] is not None and cell[j] != cons[out_name]:
                raise ValueError(
                    f"rules for {out_name!r} are not a function of "
                    f"({rows_var}, {cols_var}); cannot serialise"
                )
            cell[j] = cons[out_name]
        for label, cells in zip(rows, grid):
            if any(c is None for c in cells):
                raise ValueError(f"rule grid for {out_name!r} has holes in row {label!r}")
        tables[out_name] = tuple(tuple(cells) for cells in grid)
    return tables


def write_config(cfg: ExperimentConfig, path):
    Path(path).write_text(config_to_text(cfg))
