"""Run configuration: sectioned key = value text with units in the key names.

Values are kept in the units they are written in, so a config written out and
parsed back compares equal. Domain objects (AtomParams, BeamSet, ...) are built
from it on demand.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass

from .dynamics import TimeSequence
from .emission import CloudGeometry
from .errors import ParameterError
from .model import I_SAT_B_CS, SAT_RATIO_CS, AtomParams, BeamSet, SignalNormalization
from .sweeps import Scenario


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _unit(x):
    return 0 <= x <= 1


# section -> key -> (default, type, check, description of the constraint)
SCHEMA = {
    "atom": {
        "gamma22_2pi_mhz": (5.2, float, _pos, "> 0"),
        "gamma12_2pi_mhz": (2.6, float, _pos, "> 0"),
        "gamma_g_per_gamma12": (0.02, float, _nonneg, ">= 0"),
        "branch_a_fraction": (0.5, float, _unit, "in [0, 1]"),
        "i_sat_b_mw_per_cm2": (I_SAT_B_CS, float, _pos, "> 0"),
        "i_sat_a_over_b": (SAT_RATIO_CS, float, _pos, "> 0"),
    },
    "beams": {
        "i_w_mw_per_cm2": (7.0, float, _nonneg, ">= 0"),
        "i_wp_mw_per_cm2": (1.0, float, _nonneg, ">= 0"),
        "i_r_mw_per_cm2": (8.0, float, _nonneg, ">= 0"),
        "theta_mrad": (60.0, float, lambda x: 0 < x < 1000 * math.pi / 2, "in (0, pi/2 rad)"),
        "wavelength_nm": (852.347, float, _pos, "> 0"),
        "rescale_read": (1.0, float, _pos, "> 0"),
        "rescale_write_ratio": (1.0, float, _pos, "> 0"),
    },
    "sequence": {
        "t_write_us": (3.0, float, _pos, "> 0"),
        "t_store_us": (1.0, float, _pos, "> 0"),
        "t_read_us": (20.0, float, _pos, "> 0"),
        "dt_ns": (0.06, float, _pos, "> 0"),
    },
    "cloud": {
        "n_atoms": (1e8, float, _pos, "> 0"),
        "rms_width_um": (1000.0, float, _pos, "> 0"),
    },
    "normalization": {
        "amp_const": (1.0, float, _pos, "> 0"),
        "dipole_scale": (1.0, float, _pos, "> 0"),
    },
    "model": {
        "write_coherence": ("limit", str, lambda s: s in ("limit", "full"), "one of limit, full"),
        "detector_tau_us": (0.0, float, _nonneg, ">= 0 (0 disables the detector model)"),
    },
    "output": {
        "format": ("csv", str, lambda s: s in ("csv", "json", "svg"), "one of csv, json, svg"),
        "path": ("-", str, lambda s: bool(s), "non-empty ('-' for stdout)"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    @classmethod
    def default(cls):
        return cls({sec: {k: spec[0] for k, spec in keys.items()} for sec, keys in SCHEMA.items()})

    @classmethod
    def from_mapping(cls, mapping):
        """Build from {section: {key: raw value}}; unspecified keys take defaults."""
        values = cls.default().values
        for sec, keys in mapping.items():
            if sec not in SCHEMA:
                raise ConfigError(f"unknown section [{sec}]")
            for key, raw in keys.items():
                if key not in SCHEMA[sec]:
                    raise ConfigError(f"unknown key {sec}.{key}")
                _, typ, check, desc = SCHEMA[sec][key]
                try:
                    val = typ(raw) if typ is str else float(raw)
                except (TypeError, ValueError):
                    raise ConfigError(f"{sec}.{key}: cannot parse {raw!r} as {typ.__name__}") from None
                if typ is float and not math.isfinite(val):
                    raise ConfigError(f"{sec}.{key}: must be finite")
                if not check(val):
                    raise ConfigError(f"{sec}.{key} = {val!r} violates constraint {desc}")
                values[sec][key] = val
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def parse(cls, text):
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config syntax: {exc}") from None
        return cls.from_mapping({s: dict(cp.items(s)) for s in cp.sections()})

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def dumps(self):
        out = io.StringIO()
        for sec, keys in SCHEMA.items():
            out.write(f"[{sec}]\n")
            for key in keys:
                val = self.values[sec][key]
                out.write(f"{key} = {repr(val) if isinstance(val, float) else val}\n")
            out.write("\n")
        return out.getvalue()

    def get(self, dotted):
        sec, key = dotted.split(".")
        return self.values[sec][key]

    def validate(self):
        """Build every domain object so cross-field constraints are checked too."""
        try:
            self.atom, self.beams, self.sequence, self.cloud, self.normalization
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def atom(self):
        a = self.values["atom"]
        mhz = 2 * math.pi * 1e6
        g22 = a["gamma22_2pi_mhz"] * mhz
        g12 = a["gamma12_2pi_mhz"] * mhz
        return AtomParams(gamma12=g12, gamma22=g22, gamma_g=a["gamma_g_per_gamma12"] * g12,
                          branch_a=a["branch_a_fraction"] * g22,
                          branch_b=(1 - a["branch_a_fraction"]) * g22,
                          i_sat_a=a["i_sat_a_over_b"] * a["i_sat_b_mw_per_cm2"],
                          i_sat_b=a["i_sat_b_mw_per_cm2"])

    @property
    def beams(self):
        b = self.values["beams"]
        return BeamSet(i_w=b["i_w_mw_per_cm2"], i_wp=b["i_wp_mw_per_cm2"], i_r=b["i_r_mw_per_cm2"],
                       theta=b["theta_mrad"] * 1e-3, wavelength=b["wavelength_nm"] * 1e-9,
                       rescale_read=b["rescale_read"], rescale_write_ratio=b["rescale_write_ratio"])

    @property
    def sequence(self):
        s = self.values["sequence"]
        atom = self.atom
        return TimeSequence(t_write=atom.us_to_internal(s["t_write_us"]),
                            t_store=atom.us_to_internal(s["t_store_us"]),
                            t_read=atom.us_to_internal(s["t_read_us"]),
                            dt=atom.us_to_internal(s["dt_ns"] * 1e-3))

    @property
    def cloud(self):
        c = self.values["cloud"]
        return CloudGeometry.from_beams(self.beams, c["n_atoms"], c["rms_width_um"] * 1e-6)

    @property
    def normalization(self):
        n = self.values["normalization"]
        return SignalNormalization(n["amp_const"], n["dipole_scale"])

    @property
    def detector_tau(self):
        tau = self.values["model"]["detector_tau_us"]
        return self.atom.us_to_internal(tau) if tau > 0 else None

    def scenario(self):
        seq = self.sequence
        return Scenario(atom=self.atom, beams=self.beams, t_store=seq.t_store,
                        norm=self.normalization, dt=seq.dt, t_read=seq.t_read,
                        write_coherence=self.values["model"]["write_coherence"],
                        detector_tau=self.detector_tau)
