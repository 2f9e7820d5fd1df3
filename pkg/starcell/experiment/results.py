# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Result emission: CSV table, JSON manifest and gnuplot curve files.
"""

# Imports
import os
import json
import pandas as pd
from starcell.info import __version__
from starcell.utils import get_logger


# Global parameters
logger = get_logger()
COLUMNS = ["sweep_param", "sweep_value", "level", "combiner", "decoder",
           "user", "se_mean", "se_stderr", "n_setups", "n_trials"]


def rows_to_frame(rows):
    """ Result rows as a DataFrame with the canonical column order.
    """
    frame = pd.DataFrame([row._asdict() for row in rows], columns=COLUMNS)
    frame["sweep_param"] = frame["sweep_param"].fillna("none")
    frame["sweep_value"] = frame["sweep_value"].astype(object).where(
        frame["sweep_value"].notna(), "none")
    return frame


def read_rows(path):
    """ Load a result table written by emit.
    """
    return pd.read_csv(path, dtype={"user": str, "sweep_value": str},
                       keep_default_na=False)


def curve_name(level, combiner, decoder, user):
    """ File stem of one curve.
    """
    return "L{0}_{1}_{2}_{3}".format(level, combiner, decoder, user)


def emit(rows, path, cfg=None, wall_time=None, curves=False):
    """ Write the result rows.

    Parameters
    ----------
    rows: list of ResultRow
        the rows to write.
    path: str
        the CSV destination; the manifest is written next to it with a
        '.json' extension.
    cfg: SystemConfig, default None
        the configuration recorded in the manifest.
    wall_time: float, default None
        the run time in seconds recorded in the manifest.
    curves: bool, default False
        also write one two-column '.dat' file per (level, combiner,
        decoder, user) curve in a '<stem>_curves' directory.

    Returns
    -------
    outputs: list of str
        the written files.
    """
    if len(rows) == 0:
        raise ValueError("No result rows to emit.")
    dirname = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(dirname) or not os.access(dirname, os.W_OK):
        raise ValueError("Cannot write in '{0}'.".format(dirname))
    frame = rows_to_frame(rows)
    frame.to_csv(path, index=False)
    outputs = [path]

    stem = os.path.splitext(path)[0]
    manifest = {
        "version": __version__,
        "n_rows": len(frame),
        "wall_time": wall_time,
        "sweep_param": str(frame["sweep_param"].iloc[0])
    }
    if cfg is not None:
        manifest.update({"config": cfg.to_dict(), "digest": cfg.digest(),
                         "seed": cfg.seed})
    manifest_file = stem + ".json"
    with open(manifest_file, "wt") as open_file:
        json.dump(manifest, open_file, indent=4, sort_keys=True)
    outputs.append(manifest_file)

    if curves:
        curve_dir = stem + "_curves"
        if not os.path.isdir(curve_dir):
            os.mkdir(curve_dir)
        keys = ["level", "combiner", "decoder", "user"]
        for key, group in frame.groupby(keys, sort=False):
            curve_file = os.path.join(curve_dir, curve_name(*key) + ".dat")
            with open(curve_file, "wt") as open_file:
                open_file.write("# {0} se_mean\n".format(
                    group["sweep_param"].iloc[0]))
                group[["sweep_value", "se_mean"]].to_csv(
                    open_file, sep=" ", header=False, index=False)
            outputs.append(curve_file)
    logger.info("{0} rows written in {1}".format(len(frame), path))
    return outputs
