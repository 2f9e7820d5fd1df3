# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Experiment orchestration: operating points, sweeps, validation and result
files.
"""

from .runner import (
    Evaluation, DEFAULT_EVALUATIONS, SweepSpec, ResultRow, PointResult,
    prepare_setup, evaluate_setup, run_point, run_sweep, validate)
from .results import emit, read_rows
from .profiles import PROFILES, load_profile, emit_profiles
