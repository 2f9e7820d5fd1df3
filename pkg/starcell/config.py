# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
System configuration: dimensions, powers, hardware quality, geometry and
Monte Carlo budget, loaded from INI files with typed keys.
"""

# Imports
import os
import json
import math
import hashlib
import numbers
import dataclasses
import configparser
from dataclasses import dataclass
from typing import Optional, Tuple, Union
import numpy as np


RIS_MODES = ("star", "cris-split", "none")
PROTOCOLS = ("es", "ms")
PHASES = ("random", "shared", "zero")


def dbm2watt(value):
    """ Convert a power from dBm to Watts.
    """
    return 10 ** ((value - 30) / 10)


def watt2dbm(value):
    """ Convert a power from Watts to dBm.
    """
    if value == 0:
        return -math.inf
    return 10 * math.log10(value) + 30


def grid_shape(n_elements):
    """ Most square (L_h, L_v) grid with L_h * L_v = n_elements, L_h >= L_v.
    """
    if n_elements < 1:
        raise ValueError("The surface needs at least one element.")
    n_rows = int(math.isqrt(n_elements))
    while n_elements % n_rows != 0:
        n_rows -= 1
    return n_elements // n_rows, n_rows


@dataclass
class SystemConfig:
    """ Simulation parameters of one cell-free network.

    Powers are stored in Watts; they are configured in dBm in the INI files.
    Spacings are given in wavelengths, so the element area is in squared
    wavelengths. The cascaded links carry the extra aperture gain
    ``ris_gain_db`` on top of the two path losses. ``tau_p=None`` selects
    ceil(K / 2) * N_u pilot symbols.
    """
    # Dimensions
    M: int = 4
    K: int = 2
    N_ap: int = 2
    N_u: int = 2
    L_h: int = 4
    L_v: int = 2
    tau_c: int = 200
    tau_p: Optional[int] = None

    # Powers (W)
    p_p: float = dbm2watt(20)
    p_u: float = dbm2watt(20)
    sigma2: float = dbm2watt(-91)

    # Hardware quality
    kappa_ap: Union[float, Tuple[float, ...]] = 0.9
    kappa_u: Union[float, Tuple[float, ...]] = 0.95

    # Arrays and surface
    d_user: float = 0.25
    d_h: float = 0.25
    d_v: float = 0.25
    wavelength: float = 0.1578
    r_ap: float = 0.5
    correlated: bool = True
    direct_blocked: bool = False
    ris_mode: str = "star"
    protocol: str = "es"
    amp_t: float = 1 / math.sqrt(2)
    ms_share: float = 0.5
    phases: str = "random"

    # Geometry (m)
    ap_half_width: float = 100.
    user_x_min: float = 400.
    user_x_max: float = 600.
    user_depth: float = 100.
    ris_x: float = 500.
    ris_y: float = 100.
    h_ap: float = 15.
    h_user: float = 1.65
    h_ris: float = 30.

    # Three-slope path loss
    d0: float = 10.
    d1: float = 50.
    pl_const_db: float = 140.7
    shadow_std_db: float = 8.
    ris_gain_db: float = 90.

    # Monte Carlo
    seed: int = 0
    n_setups: int = 1
    n_trials: int = 1000
    n_warmup: int = 2000
    trial_block: int = 256
    n_jobs: int = 1
    cachedir: Optional[str] = None

    def __post_init__(self):
        for name in ("M", "K", "N_ap", "N_u", "L_h", "L_v", "tau_c"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Integral) or value < 1:
                raise ValueError(
                    "'{0}' must be a positive integer, got {1}.".format(
                        name, value))
        if self.tau_p is not None:
            if self.tau_p < self.N_u or self.tau_p % self.N_u != 0:
                raise ValueError(
                    "'tau_p' must be a positive multiple of N_u={0}, got "
                    "{1}.".format(self.N_u, self.tau_p))
        if self.n_pilots > self.tau_c:
            raise ValueError(
                "The {0} pilot symbols exceed the coherence block "
                "tau_c={1}.".format(self.n_pilots, self.tau_c))
        for name in ("p_p", "p_u"):
            if getattr(self, name) < 0:
                raise ValueError("'{0}' must be non negative.".format(name))
        if not self.sigma2 > 0:
            raise ValueError("'sigma2' must be strictly positive.")
        for name in ("kappa_ap", "kappa_u"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Number):
                value = tuple(float(item) for item in value)
                setattr(self, name, value)
            arr = np.atleast_1d(np.asarray(value, dtype=float))
            if np.any(arr < 0) or np.any(arr > 1):
                raise ValueError(
                    "'{0}' values must lie in [0, 1].".format(name))
        for name in ("d_user", "d_h", "d_v", "wavelength"):
            if not getattr(self, name) > 0:
                raise ValueError(
                    "'{0}' must be strictly positive.".format(name))
        if not 0 <= self.r_ap < 1:
            raise ValueError("'r_ap' must lie in [0, 1).")
        if self.ris_mode not in RIS_MODES:
            raise ValueError("'ris_mode' must be one of {0}.".format(
                RIS_MODES))
        if self.ris_mode == "cris-split" and self.L % 2 != 0:
            raise ValueError(
                "The split surface needs an even number of elements, got "
                "L={0}.".format(self.L))
        if self.protocol not in PROTOCOLS:
            raise ValueError("'protocol' must be one of {0}.".format(
                PROTOCOLS))
        if self.phases not in PHASES:
            raise ValueError("'phases' must be one of {0}.".format(PHASES))
        if not 0 <= self.amp_t <= 1:
            raise ValueError("'amp_t' must lie in [0, 1].")
        if not 0 <= self.ms_share <= 1:
            raise ValueError("'ms_share' must lie in [0, 1].")
        if not 0 < self.d0 < self.d1:
            raise ValueError("Path loss breakpoints need 0 < d0 < d1.")
        if self.shadow_std_db < 0:
            raise ValueError("'shadow_std_db' must be non negative.")
        for name in ("n_setups", "n_trials", "trial_block"):
            if getattr(self, name) < 1:
                raise ValueError("'{0}' must be at least 1.".format(name))
        if self.n_warmup < 0:
            raise ValueError("'n_warmup' must be non negative.")

    @property
    def L(self):
        """ Number of surface elements.
        """
        return self.L_h * self.L_v

    @property
    def n_pilots(self):
        """ Pilot length actually used (tau_p).
        """
        if self.tau_p is None:
            return int(math.ceil(self.K / 2)) * self.N_u
        return self.tau_p

    @property
    def prelog(self):
        """ Fraction of the coherence block carrying data.
        """
        return (self.tau_c - self.n_pilots) / self.tau_c

    @property
    def kappa_ap_vec(self):
        """ Receiver hardware quality of each AP, shape (M, ).
        """
        return _expand(self.kappa_ap, self.M, "kappa_ap")

    @property
    def kappa_u_vec(self):
        """ Transmitter hardware quality of each user, shape (K, ).
        """
        return _expand(self.kappa_u, self.K, "kappa_u")

    @property
    def workers(self):
        """ Worker count, overridden by the STARCELL_N_JOBS variable.
        """
        value = os.environ.get("STARCELL_N_JOBS")
        if value is not None:
            return int(value)
        return self.n_jobs

    def replace(self, **kwargs):
        """ Copy of the configuration with some fields changed.
        """
        return dataclasses.replace(self, **kwargs)

    def to_dict(self):
        """ Plain dictionary of the configuration fields.
        """
        data = dataclasses.asdict(self)
        for name in ("kappa_ap", "kappa_u"):
            if isinstance(data[name], tuple):
                data[name] = list(data[name])
        return data

    def digest(self):
        """ SHA-256 of the canonical JSON form of the configuration.
        """
        data = self.to_dict()
        data.pop("n_jobs")
        data.pop("cachedir")
        text = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _expand(value, size, name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.full(size, float(arr[0]))
    if arr.size != size:
        raise ValueError(
            "'{0}' has {1} values, expected 1 or {2}.".format(
                name, arr.size, size))
    return arr


def _to_bool(text):
    text = str(text).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError("Invalid boolean value '{0}'.".format(text))


def _to_kappa(text):
    items = [float(item) for item in str(text).replace(",", " ").split()]
    if len(items) == 1:
        return items[0]
    return tuple(items)


def _to_optional_int(text):
    text = str(text).strip().lower()
    if text in ("", "none", "auto"):
        return None
    return int(text)


def _to_optional_str(text):
    text = str(text).strip()
    return None if text.lower() in ("", "none") else text


# key -> (section, field, converter)
SCHEMA = {
    "M": ("system", "M", int),
    "K": ("system", "K", int),
    "N_ap": ("system", "N_ap", int),
    "N_u": ("system", "N_u", int),
    "L_h": ("system", "L_h", int),
    "L_v": ("system", "L_v", int),
    "tau_c": ("system", "tau_c", int),
    "tau_p": ("system", "tau_p", _to_optional_int),
    "p_p_dbm": ("system", "p_p", lambda text: dbm2watt(float(text))),
    "p_u_dbm": ("system", "p_u", lambda text: dbm2watt(float(text))),
    "sigma2_dbm": ("system", "sigma2", lambda text: dbm2watt(float(text))),
    "kappa_ap": ("hardware", "kappa_ap", _to_kappa),
    "kappa_u": ("hardware", "kappa_u", _to_kappa),
    "d_user": ("geometry", "d_user", float),
    "d_h": ("geometry", "d_h", float),
    "d_v": ("geometry", "d_v", float),
    "wavelength": ("geometry", "wavelength", float),
    "r_ap": ("geometry", "r_ap", float),
    "correlated": ("geometry", "correlated", _to_bool),
    "direct_blocked": ("geometry", "direct_blocked", _to_bool),
    "ris_mode": ("geometry", "ris_mode", str),
    "protocol": ("geometry", "protocol", str),
    "amp_t": ("geometry", "amp_t", float),
    "ms_share": ("geometry", "ms_share", float),
    "phases": ("geometry", "phases", str),
    "ap_half_width": ("geometry", "ap_half_width", float),
    "user_x_min": ("geometry", "user_x_min", float),
    "user_x_max": ("geometry", "user_x_max", float),
    "user_depth": ("geometry", "user_depth", float),
    "ris_x": ("geometry", "ris_x", float),
    "ris_y": ("geometry", "ris_y", float),
    "h_ap": ("geometry", "h_ap", float),
    "h_user": ("geometry", "h_user", float),
    "h_ris": ("geometry", "h_ris", float),
    "d0": ("geometry", "d0", float),
    "d1": ("geometry", "d1", float),
    "pl_const_db": ("geometry", "pl_const_db", float),
    "shadow_std_db": ("geometry", "shadow_std_db", float),
    "ris_gain_db": ("geometry", "ris_gain_db", float),
    "seed": ("mc", "seed", int),
    "n_setups": ("mc", "n_setups", int),
    "n_trials": ("mc", "n_trials", int),
    "n_warmup": ("mc", "n_warmup", int),
    "trial_block": ("mc", "trial_block", int),
    "n_jobs": ("mc", "n_jobs", int),
    "cachedir": ("mc", "cachedir", _to_optional_str),
}
SECTIONS = ("system", "geometry", "hardware", "mc")


def parse_items(items, section=None):
    """ Convert raw key/value strings to typed configuration fields.

    Parameters
    ----------
    items: dict or list of str
        a mapping of keys to strings or 'key=value' strings.
    section: str, default None
        when given, every key must belong to this INI section.

    Returns
    -------
    fields: dict
        SystemConfig keyword arguments.
    """
    if not isinstance(items, dict):
        pairs = {}
        for item in items:
            if "=" not in item:
                raise ValueError(
                    "Override '{0}' is not of the form key=value.".format(
                        item))
            key, value = item.split("=", 1)
            pairs[key.strip()] = value.strip()
        items = pairs
    fields = {}
    for key, value in items.items():
        if key not in SCHEMA:
            raise ValueError("Unknown configuration key '{0}'.".format(key))
        key_section, name, convert = SCHEMA[key]
        if section is not None and key_section != section:
            raise ValueError(
                "Key '{0}' belongs to section [{1}], found in [{2}].".format(
                    key, key_section, section))
        try:
            fields[name] = convert(value)
        except (TypeError, ValueError) as exc:
            raise ValueError(
                "Invalid value '{0}' for key '{1}': {2}".format(
                    value, key, exc))
    return fields


def load_config(path=None, overrides=None):
    """ Load a configuration from an INI file.

    Parameters
    ----------
    path: str, default None
        the INI file with [system], [geometry], [hardware] and [mc]
        sections. None gives the default configuration.
    overrides: dict or list of str, default None
        extra 'key=value' settings applied after the file.

    Returns
    -------
    cfg: SystemConfig
        the validated configuration.
    """
    fields = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ValueError("Configuration file '{0}' not found.".format(
                path))
        parser = configparser.ConfigParser()
        parser.optionxform = str
        parser.read(path)
        for section in parser.sections():
            if section not in SECTIONS:
                raise ValueError(
                    "Unknown configuration section [{0}].".format(section))
            fields.update(parse_items(dict(parser[section]), section))
    if overrides:
        fields.update(parse_items(overrides))
    return SystemConfig(**fields)


def dump_config(cfg, path):
    """ Write a configuration as an INI file readable by load_config.
    """
    data = cfg.to_dict()
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for section in SECTIONS:
        parser[section] = {}
    for key, (section, name, _) in SCHEMA.items():
        value = data[name]
        if key.endswith("_dbm"):
            value = watt2dbm(value)
        if isinstance(value, list):
            value = " ".join(str(item) for item in value)
        parser[section][key] = "none" if value is None else str(value)
    with open(path, "wt") as open_file:
        parser.write(open_file)
