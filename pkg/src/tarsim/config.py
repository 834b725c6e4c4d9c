"""Sectioned key-value configuration for the whole toolkit.

The format is deliberately small: ``[section]`` headers, ``key = value``
lines, blank lines, and full-line comments starting with ``#`` or ``;``.
Keys carry their units (``k_spring_n_per_mm``) because unit slips are the
dominant failure mode in a mixed mm/N/deg codebase.  Unknown sections or
keys are rejected with the offending line number and the list of valid
names; anything omitted falls back to the built-in defaults.

Angles are degrees in files (and everywhere else at the I/O boundary),
radians inside.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import replace

from . import chain as chain_mod
from . import contact as contact_mod
from . import gait as gait_mod
from . import leg as leg_mod


class ConfigError(ValueError):
    """Configuration problem; carries the source line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


TARSOMERE_SECTIONS = tuple(f"tarsomere_{i}" for i in range(1, 6))
LEG_SECTIONS = tuple(f"leg_{name}" for name in leg_mod.JOINT_NAMES)

VALID_KEYS = {
    "chain": {"k_spring_n_per_mm", "k_flex_n_per_mm", "k_rigid_n_per_mm",
              "vertical_cap_n", "socket_slack"},
    "claw": {"threshold", "max_opening_deg", "length_mm"},
    "ik": {"damping", "step_clamp_rad", "tol_mm", "max_iter"},
    "solver": {"tol_mm", "max_iter"},
    "mesh": {"spacing_mm", "node_stiffness_n_per_mm", "rest_height_mm",
             "cells_x", "cells_y", "origin_x_mm", "origin_y_mm"},
    "limits": {"vertical_max_n", "hooking_max_n"},
    "analytics": {"rate_fps", "hysteresis_frac", "min_separation_ms",
                  "amplitude_mode", "interpolate_gaps"},
    "retarget": {"scale"},
    "sim": {"dt_ms", "penetration_mm"},
}
for _s in TARSOMERE_SECTIONS:
    VALID_KEYS[_s] = {"radius_mm", "anchor_long_mm", "anchor_trans_mm",
                      "rest_span_mm", "max_bend_deg", "axial_cap_mm",
                      "slack_mm", "length_mm"}
for _s in LEG_SECTIONS:
    VALID_KEYS[_s] = {"a_mm", "alpha_twist_deg", "d_mm", "theta_offset_deg",
                      "min_deg", "max_deg"}

SCENARIO_PREFIX = "scenario:"
SCENARIO_KEYS = {"allow_flexible", "expect_failures", "home"}  # + phase_N


class Config:
    """Parsed configuration: raw section/key table plus typed accessors."""

    def __init__(self, data: dict | None = None, source_text: str = ""):
        self.data = data or {}
        self.source_text = source_text

    @classmethod
    def default(cls) -> "Config":
        return cls({}, "")

    # -- raw access -------------------------------------------------------

    def get(self, section: str, key: str, default=None):
        return self.data.get(section, {}).get(key, (default, None))[0]

    def getfloat(self, section: str, key: str, default: float) -> float:
        raw, line = self.data.get(section, {}).get(key, (None, None))
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: not a number: {raw!r}", line)

    def getint(self, section: str, key: str, default: int) -> int:
        raw, line = self.data.get(section, {}).get(key, (None, None))
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: not an integer: {raw!r}", line)

    def getbool(self, section: str, key: str, default: bool) -> bool:
        raw, line = self.data.get(section, {}).get(key, (None, None))
        if raw is None:
            return default
        low = raw.strip().lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{section}.{key}: not a boolean: {raw!r}", line)

    def getstr(self, section: str, key: str, default: str) -> str:
        raw = self.get(section, key)
        return default if raw is None else raw

    def has_section(self, section: str) -> bool:
        return section in self.data

    # -- typed builders ---------------------------------------------------

    def build_chain(self) -> chain_mod.ChainGeometry:
        """Chain geometry: per-tarsomere sections if given, else calibrated."""
        present = [s for s in TARSOMERE_SECTIONS if self.has_section(s)]
        if present and len(present) != len(TARSOMERE_SECTIONS):
            missing = sorted(set(TARSOMERE_SECTIONS) - set(present))
            raise ConfigError(
                f"tarsomere sections must come as a full set of 5; "
                f"missing {missing}")
        if present:
            segments, lengths, slack = [], [], []
            for s in TARSOMERE_SECTIONS:
                rest_span = self.getfloat(s, "rest_span_mm", float("nan"))
                segments.append(chain_mod.SegmentGeometry(
                    radius=self.getfloat(s, "radius_mm", 5.0),
                    anchor_long=self.getfloat(s, "anchor_long_mm", 6.0),
                    anchor_trans=self.getfloat(s, "anchor_trans_mm", 1.0),
                    max_bend=math.radians(self.getfloat(s, "max_bend_deg", 10.0)),
                    rest_span=None if math.isnan(rest_span) else rest_span,
                    axial_cap=self.getfloat(s, "axial_cap_mm", 0.0),
                ))
                lengths.append(self.getfloat(s, "length_mm", 12.0))
                slack.append(self.getfloat(s, "slack_mm", 0.0))
            base = chain_mod.ChainGeometry(
                segments=tuple(segments), segment_lengths=tuple(lengths),
                socket_slack=tuple(slack))
        else:
            base = chain_mod.default_chain_geometry(
                socket_slack=self.getbool("chain", "socket_slack", False))
        return replace(
            base,
            k_spring=self.getfloat("chain", "k_spring_n_per_mm", base.k_spring),
            k_flex=self.getfloat("chain", "k_flex_n_per_mm", base.k_flex),
            k_rigid=self.getfloat("chain", "k_rigid_n_per_mm", base.k_rigid),
            vertical_cap=self.getfloat("chain", "vertical_cap_n",
                                       base.vertical_cap),
        )

    def build_leg(self) -> leg_mod.LegModel:
        present = [s for s in LEG_SECTIONS if self.has_section(s)]
        if not present:
            return leg_mod.default_leg_model()
        if len(present) != len(LEG_SECTIONS):
            missing = sorted(set(LEG_SECTIONS) - set(present))
            raise ConfigError(
                f"leg joint sections must come as a full set of 4; "
                f"missing {missing}")
        rows, limits = [], []
        for s in LEG_SECTIONS:
            rows.append(leg_mod.DHRow(
                a=self.getfloat(s, "a_mm", 0.0),
                alpha_twist=math.radians(self.getfloat(s, "alpha_twist_deg", 0.0)),
                d=self.getfloat(s, "d_mm", 0.0),
                theta_offset=math.radians(
                    self.getfloat(s, "theta_offset_deg", 0.0)),
            ))
            limits.append((math.radians(self.getfloat(s, "min_deg", -150.0)),
                           math.radians(self.getfloat(s, "max_deg", 150.0))))
        return leg_mod.LegModel(tuple(rows), tuple(limits))

    def build_mesh(self) -> contact_mod.MeshGrid:
        return contact_mod.MeshGrid(
            spacing=self.getfloat("mesh", "spacing_mm",
                                  contact_mod.ROBOT_MESH_SPACING_MM),
            node_stiffness=self.getfloat("mesh", "node_stiffness_n_per_mm",
                                         contact_mod.DEFAULT_NODE_STIFFNESS),
            rest_height=self.getfloat("mesh", "rest_height_mm", -120.0),
            cells=(self.getint("mesh", "cells_x", 4),
                   self.getint("mesh", "cells_y", 4)),
            origin=(self.getfloat("mesh", "origin_x_mm", 100.0),
                    self.getfloat("mesh", "origin_y_mm", -50.0)),
        )

    def build_limits(self) -> contact_mod.ForceLimits:
        return contact_mod.ForceLimits(
            vertical_max=self.getfloat("limits", "vertical_max_n",
                                       contact_mod.DEFAULT_VERTICAL_MAX_N),
            hooking_max=self.getfloat("limits", "hooking_max_n",
                                      contact_mod.DEFAULT_HOOKING_MAX_N),
        )

    def claw_params(self) -> dict:
        return {
            "threshold": self.getfloat("claw", "threshold",
                                       chain_mod.DEFAULT_CLAW_THRESHOLD),
            "max_opening": math.radians(self.getfloat(
                "claw", "max_opening_deg",
                math.degrees(chain_mod.DEFAULT_CLAW_MAX_OPENING))),
            "length_mm": self.getfloat("claw", "length_mm",
                                       contact_mod.DEFAULT_CLAW_LENGTH_MM),
        }

    def analytics_params(self) -> dict:
        mode = self.getstr("analytics", "amplitude_mode",
                           "peak_minus_touchdown")
        if mode not in ("peak_minus_touchdown", "peak_to_trough"):
            raise ConfigError(f"analytics.amplitude_mode: unknown mode {mode!r}")
        return {
            "rate_fps": self.getfloat("analytics", "rate_fps",
                                      gait_mod.DEFAULT_RATE_FPS),
            "hysteresis_frac": self.getfloat("analytics", "hysteresis_frac",
                                             gait_mod.HYSTERESIS_FRAC),
            "min_separation_ms": self.getfloat("analytics", "min_separation_ms",
                                               gait_mod.MIN_SEPARATION_MS),
            "amplitude_mode": mode,
            "interpolate_gaps": self.getbool("analytics",
                                             "interpolate_gaps", False),
        }

    def scenario_names(self) -> list[str]:
        names = ["walk_cycle", "tubed"]
        for section in self.data:
            if section.startswith(SCENARIO_PREFIX):
                name = section[len(SCENARIO_PREFIX):]
                if name not in names:
                    names.append(name)
        return names

    def build_scenario(self, name: str, chain: chain_mod.ChainGeometry,
                       mesh: contact_mod.MeshGrid) -> contact_mod.Scenario:
        """A config-defined scenario, or the built-in one for known names."""
        section = SCENARIO_PREFIX + name
        if not self.has_section(section):
            return contact_mod.builtin_scenario(
                name, chain, mesh,
                claw_length=self.claw_params()["length_mm"],
                penetration_mm=self.getfloat("sim", "penetration_mm", 5.0))
        home_raw = self.getstr(section, "home", "auto")
        if home_raw == "auto":
            base = contact_mod.builtin_scenario(
                "walk_cycle", chain, mesh,
                claw_length=self.claw_params()["length_mm"],
                penetration_mm=self.getfloat("sim", "penetration_mm", 5.0))
            home = base.home_tip
        else:
            try:
                home = tuple(float(v) for v in home_raw.split())
                if len(home) != 3:
                    raise ValueError
            except ValueError:
                raise ConfigError(
                    f"{section}.home: expected 'auto' or three numbers, "
                    f"got {home_raw!r}") from None
        phases = []
        idx = 1
        while True:
            raw, line = self.data[section].get(f"phase_{idx}", (None, None))
            if raw is None:
                break
            parts = raw.split()
            if len(parts) != 6:
                raise ConfigError(
                    f"{section}.phase_{idx}: expected "
                    f"'<name> <mode> <duration_ms> <dx> <dy> <dz>'", line)
            pname, mode = parts[0], parts[1]
            try:
                duration = float(parts[2])
                offset = tuple(float(v) for v in parts[3:6])
            except ValueError:
                raise ConfigError(
                    f"{section}.phase_{idx}: malformed numbers", line)
            phases.append(contact_mod.Phase(pname, duration, mode, offset))
            idx += 1
        # zero phases is legal: the run emits a header-only series
        return contact_mod.Scenario(
            name=name, home_tip=home, phases=tuple(phases),
            allow_flexible=self.getbool(section, "allow_flexible", True),
            expect_failures=self.getbool(section, "expect_failures", False),
        )

    def ik_params(self) -> dict:
        return {
            "damping": self.getfloat("ik", "damping", leg_mod.IK_DAMPING),
            "step_clamp": self.getfloat("ik", "step_clamp_rad",
                                        leg_mod.IK_STEP_CLAMP_RAD),
            "tol_mm": self.getfloat("ik", "tol_mm", leg_mod.IK_TOL_MM),
            "max_iter": self.getint("ik", "max_iter", leg_mod.IK_MAX_ITER),
        }

    def hash(self) -> str:
        """Stable digest of the effective configuration."""
        lines = []
        for section in sorted(self.data):
            for key in sorted(self.data[section]):
                lines.append(f"{section}.{key}={self.data[section][key][0]}")
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def _valid_section(section: str) -> bool:
    return section in VALID_KEYS or section.startswith(SCENARIO_PREFIX)


def _valid_key(section: str, key: str) -> bool:
    if section.startswith(SCENARIO_PREFIX):
        if key in SCENARIO_KEYS:
            return True
        if key.startswith("phase_"):
            tail = key[len("phase_"):]
            return tail.isdigit() and tail == str(int(tail))
        return False
    return key in VALID_KEYS[section]


def parse_config(text: str) -> Config:
    """Parse configuration text; raise ConfigError with line numbers."""
    data: dict = {}
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if not _valid_section(section):
                raise ConfigError(
                    f"unknown section [{section}]; valid sections: "
                    f"{', '.join(sorted(VALID_KEYS))}, scenario:<name>",
                    line_no)
            data.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line_no)
        if section is None:
            raise ConfigError("key outside any [section]", line_no)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not _valid_key(section, key):
            if section.startswith(SCENARIO_PREFIX):
                valid = ", ".join(sorted(SCENARIO_KEYS) + ["phase_<n>"])
            else:
                valid = ", ".join(sorted(VALID_KEYS[section]))
            raise ConfigError(
                f"unknown key {key!r} in [{section}]; valid keys: {valid}",
                line_no)
        if key in data[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", line_no)
        data[section][key] = (value, line_no)
    return Config(data, text)


def load_config(path) -> Config:
    with open(path) as fh:
        return parse_config(fh.read())
