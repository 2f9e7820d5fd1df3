# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Named configuration profiles.

- desk: the closed-form validation configuration (a few minutes).
- figures: desk-scale reproduction of the sweep trends, 10 setups x 400
  trials.
- full: the full network size, hours of computation.
- full-ris: the full network with a 100 element surface and blocked
  direct links.
"""

# Imports
import os
from starcell.config import load_config, dump_config
from starcell.utils import get_logger


# Global parameters
logger = get_logger()
PROFILES = {
    "desk": {
        "M": "4", "K": "2", "N_ap": "2", "N_u": "2", "L_h": "4", "L_v": "2",
        "tau_c": "200", "p_p_dbm": "20", "p_u_dbm": "20",
        "sigma2_dbm": "-91", "kappa_ap": "0.9", "kappa_u": "0.95",
        "n_setups": "1", "n_trials": "100000"
    },
    "figures": {
        "M": "10", "K": "6", "N_ap": "2", "N_u": "2", "L_h": "4",
        "L_v": "4", "n_setups": "10", "n_trials": "400", "n_warmup": "2000"
    },
    "full": {
        "M": "20", "K": "10", "N_ap": "4", "N_u": "4", "L_h": "4",
        "L_v": "4", "n_setups": "50", "n_trials": "1000",
        "n_warmup": "2000"
    },
    "full-ris": {
        "M": "20", "K": "10", "N_ap": "4", "N_u": "4", "L_h": "10",
        "L_v": "10", "direct_blocked": "true", "n_setups": "50",
        "n_trials": "1000", "n_warmup": "2000"
    }
}


def load_profile(name, overrides=None):
    """ Configuration of a named profile.

    Parameters
    ----------
    name: str
        the profile name.
    overrides: dict or list of str, default None
        extra 'key=value' settings.

    Returns
    -------
    cfg: SystemConfig
        the configuration.
    """
    if name not in PROFILES:
        raise ValueError("Unknown profile '{0}', choose one of {1}.".format(
            name, sorted(PROFILES)))
    return load_config(overrides=_merge(PROFILES[name], overrides or {}))


def _merge(items, overrides):
    merged = dict(items)
    if isinstance(overrides, dict):
        merged.update(overrides)
        return merged
    for item in overrides:
        if "=" not in item:
            raise ValueError(
                "Override '{0}' is not of the form key=value.".format(item))
        key, value = item.split("=", 1)
        merged[key.strip()] = value.strip()
    return merged


def emit_profiles(outdir):
    """ Write every profile as an INI file.

    Returns
    -------
    paths: list of str
        the written files.
    """
    if not os.path.isdir(outdir):
        raise ValueError("Output directory '{0}' does not exist.".format(
            outdir))
    paths = []
    for name in sorted(PROFILES):
        path = os.path.join(outdir, "{0}.ini".format(name))
        dump_config(load_profile(name), path)
        paths.append(path)
        logger.info("profile '{0}' written in {1}".format(name, path))
    return paths
