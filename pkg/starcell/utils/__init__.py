# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Common utilities: logging, Hermitian linear algebra and random streams.
"""

# Imports
import logging
import warnings
import numpy as np
from .linalg import (
    psd_sqrtm, clip_psd, hermitian_part, hermitian_solve, log2det_eye_plus,
    sub_block, vec, unvec, block_diag_stack)
from .random import (
    STREAMS, trial_generator, trial_generators, setup_generator,
    complex_normal, complex_normals)

# Global parameters
LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL
}
FORMATTER = logging.Formatter(
    "[%(asctime)s] {%(pathname)s:%(lineno)d} %(levelname)s - %(message)s",
    "%Y-%m-%d %H:%M:%S")


def get_logger():
    """ Setup the logger.

    Returns
    -------
    logger: logging.Logger
        return a logger.
    """
    return logging.getLogger("starcell")


def setup_logging(level="info", logfile=None):
    """ Setup the logging.

    Parameters
    ----------
    level: str, default 'info'
        the logging level name.
    logfile: str, default None
        the log file.
    """
    if level not in LEVELS:
        raise ValueError("Unknown logging level.")
    level = LEVELS[level]
    logger = get_logger()
    for owner in (logging.root, logger):
        for handler in list(owner.handlers):
            owner.removeHandler(handler)
    logger.setLevel(level)
    handlers = [logging.StreamHandler()]
    if logfile is not None:
        handlers.append(logging.FileHandler(logfile, mode="a"))
    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(FORMATTER)
        logger.addHandler(handler)
    if level != logging.DEBUG:
        warnings.simplefilter("ignore", DeprecationWarning)


def debug_msg(name, array):
    """ Format a debug message.

    Parameters
    ----------
    name: str
        the array name in the displayed message.
    array: array
        a numpy array.

    Returns
    -------
    msg: str
        the formated debug message.
    """
    array = np.asarray(array)
    return "  {3}: {0} - {1} - {2:.3e}".format(
        array.shape, array.dtype, float(np.linalg.norm(array)), name)
