# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################


# Module current version
version_major = 0
version_minor = 1
version_micro = 0

# Expected by setup.py: string of form "X.Y.Z"
__version__ = "{0}.{1}.{2}".format(version_major, version_minor, version_micro)

# Expected by setup.py: the status of the project
CLASSIFIERS = ["Development Status :: 3 - Alpha",
               "Environment :: Console",
               "Operating System :: OS Independent",
               "Programming Language :: Python",
               "Topic :: Scientific/Engineering",
               "Topic :: Scientific/Engineering :: Information Analysis"]

# Project descriptions
description = """
Spectral efficiency of STAR-RIS assisted cell-free massive MIMO.
"""
SUMMARY = """
.. container:: summary-carousel

    `starcell` is a numpy toolbox to evaluate the uplink spectral efficiency
    of STAR-RIS assisted cell-free massive MIMO with multi-antenna users and
    transceiver hardware impairments that provides:

    * correlated Rayleigh and cascaded STAR-RIS channel sampling.
    * impaired pilot observations and MMSE channel estimation.
    * local/centralized combining with LSFD or MF decoding.
    * Monte Carlo and closed-form spectral efficiency.
    * reproducible parameter sweeps from the command line.
"""
long_description = (
    "Uplink spectral efficiency of STAR-RIS assisted cell-free massive MIMO "
    "with multi-antenna users and hardware impairments.\n")

# Main setup parameters
NAME = "starcell"
ORGANISATION = "CEA"
MAINTAINER = "starcell developers"
MAINTAINER_EMAIL = "starcell@example.org"
DESCRIPTION = description
LONG_DESCRIPTION = long_description
URL = "https://github.com/starcell/starcell"
DOWNLOAD_URL = "https://github.com/starcell/starcell"
LICENSE = "CeCILL-B"
CLASSIFIERS = CLASSIFIERS
AUTHOR = """
starcell developers
"""
AUTHOR_EMAIL = "starcell@example.org"
PLATFORMS = "OS Independent"
ISRELEASE = True
VERSION = __version__
PROVIDES = ["starcell"]
REQUIRES = [
    "numpy>=1.17.1",
    "scipy>=1.4.0",
    "pandas>=1.0.0",
    "joblib>=0.14.1"
]
