"""Run configuration: device, cavity, synthesis and analysis parameters.

Defaults are the nested-device design point (2.5 kHz outer / 250 kHz inner
resonator, 5 cm cavity at 1064 nm with finesse 181,000).  Effective masses
default to a 100 ug outer mass and a 50 ng inner mirror, which put the
room-temperature outer thermal motion in the tens of picometers.  Unknown
keys anywhere in the tree are rejected.
"""

import json
from dataclasses import dataclass, field

from .cavity import Cavity
from .mech import MechMode, NestedModel


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration input."""


def _check_keys(d: dict, allowed, where: str):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _mode_from_dict(d: dict, where: str, defaults: dict) -> MechMode:
    _check_keys(d, {"f0_hz", "q", "m_eff_kg", "temp_k"}, where)
    merged = dict(defaults, **d)
    try:
        return MechMode(f0=float(merged["f0_hz"]), q=float(merged["q"]),
                        m_eff=float(merged["m_eff_kg"]),
                        temp=float(merged["temp_k"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


_INNER_DEFAULTS = {"f0_hz": 250e3, "q": 418000.0, "m_eff_kg": 5e-11,
                   "temp_k": 300.0}
_OUTER_DEFAULTS = {"f0_hz": 2.5e3, "q": 1e5, "m_eff_kg": 1e-7, "temp_k": 300.0}

_SYNTH_DEFAULTS = {
    "seed": 12345,
    "brownian": {"device": "inner", "mode": "envelope", "sample_rate_hz": 400.0,
                 "duration_s": 1800.0, "noise_floor_m2_per_hz": 1e-26},
    "ringdown_optical": {"sample_rate_hz": 5e6, "duration_s": 1e-4,
                         "snr": 100.0},
    "ringdown_mech": {"sample_rate_hz": 25e3, "duration_s": 120.0,
                      "x0_m": 1e-9, "snr": 50.0, "envelope_cycles": 10},
    "sweep": {"f_min_hz": 60.0, "f_max_hz": 95000.0, "points_per_decade": 25,
              "amplitude_m": 1e-12, "cycles_per_point": 200,
              "samples_per_cycle": 32, "base_noise_rms_m": 0.0,
              "response_noise_rms_m": 1e-17, "piezo_corner_hz": None},
    "lock": {"duration_s": 0.02, "loop_rate_hz": 10e6, "kp": 0.0,
             "ki": 1.28e-5, "kd": 0.0, "detuning_bias_hz": None,
             "actuator_range_m": 1e-9},
}

_ANALYSIS_DEFAULTS = {
    "welch_segment_len": None,
    "welch_overlap": 0.5,
    "welch_window": "hann",
    "fit_window_hz": None,
    "bins_per_decade": 5,
}


def _merge_section(user: dict, defaults: dict, where: str) -> dict:
    _check_keys(user, defaults, where)
    out = {}
    for key, dv in defaults.items():
        uv = user.get(key, dv)
        if isinstance(dv, dict):
            uv = _merge_section(uv if isinstance(uv, dict) else {}, dv,
                                f"{where}.{key}")
        out[key] = uv
    return out


@dataclass
class Config:
    inner: MechMode
    outer: MechMode
    mass_ratio: float
    cavity: Cavity
    synth: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)

    @property
    def nested(self) -> NestedModel:
        return NestedModel(outer=self.outer, inner=self.inner)

    def to_dict(self) -> dict:
        return {
            "device": {
                "inner": {"f0_hz": self.inner.f0, "q": self.inner.q,
                          "m_eff_kg": self.inner.m_eff, "temp_k": self.inner.temp},
                "outer": {"f0_hz": self.outer.f0, "q": self.outer.q,
                          "m_eff_kg": self.outer.m_eff, "temp_k": self.outer.temp},
                "mass_ratio": self.mass_ratio,
            },
            "cavity": {"length_m": self.cavity.length,
                       "wavelength_m": self.cavity.wavelength,
                       "finesse": self.cavity.finesse},
            "synth": self.synth,
            "analysis": self.analysis,
        }


def config_from_dict(d: dict) -> Config:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(d, {"device", "cavity", "synth", "analysis"}, "config")

    device = d.get("device", {})
    _check_keys(device, {"inner", "outer", "mass_ratio"}, "device")
    inner = _mode_from_dict(device.get("inner", {}), "device.inner",
                            _INNER_DEFAULTS)
    outer = _mode_from_dict(device.get("outer", {}), "device.outer",
                            _OUTER_DEFAULTS)
    mass_ratio = float(device.get("mass_ratio", inner.m_eff / outer.m_eff))
    if not 0.0 < mass_ratio < 1.0:
        raise ConfigError(f"mass_ratio must be in (0, 1), got {mass_ratio}")

    cav_d = d.get("cavity", {})
    _check_keys(cav_d, {"length_m", "wavelength_m", "finesse"}, "cavity")
    try:
        cav = Cavity(length=float(cav_d.get("length_m", 0.05)),
                     wavelength=float(cav_d.get("wavelength_m", 1.064e-6)),
                     finesse=float(cav_d.get("finesse", 181000.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid cavity: {exc}") from exc

    synth = _merge_section(d.get("synth", {}), _SYNTH_DEFAULTS, "synth")
    analysis = _merge_section(d.get("analysis", {}), _ANALYSIS_DEFAULTS,
                              "analysis")
    if synth["brownian"]["device"] not in ("inner", "outer"):
        raise ConfigError("synth.brownian.device must be 'inner' or 'outer'")
    if synth["brownian"]["mode"] not in ("envelope", "baseband"):
        raise ConfigError("synth.brownian.mode must be 'envelope' or 'baseband'")
    try:
        NestedModel(outer=outer, inner=inner)   # validate the pairing
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return Config(inner=inner, outer=outer, mass_ratio=mass_ratio, cavity=cav,
                  synth=synth, analysis=analysis)


def load_config(path) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(raw)


def default_config() -> Config:
    return config_from_dict({})
