# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Sphinx configuration of the starcell API reference.

The module pages are generated by pysphinxdoc before the build.
"""

# Imports
import os
import sys
import datetime
import subprocess
import pysphinxdoc


installdir = os.path.abspath(os.path.join("..", ".."))
env = dict(os.environ)
env["PYTHONPATH"] = os.pathsep.join(
    item for item in (env.get("PYTHONPATH"), installdir) if item)
subprocess.check_call(
    ["sphinxdoc", "-v", "2", "-p", installdir, "-n", "starcell", "-o", "..",
     "-i", "starcell"], env=env)
sys.path.insert(0, installdir)
from starcell.info import __version__  # noqa: E402

sphinx_dirname = os.path.dirname(pysphinxdoc.__file__)
sys.path.insert(0, os.path.join(sphinx_dirname, "sphinxext"))


def setup(app):
    """ Document the constructors.
    """
    app.connect("autodoc-skip-member",
                lambda app, what, name, obj, skip, options: (
                    False if name == "__init__" else skip))


# General
extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.imgmath",
    "sphinx.ext.viewcode",
    "numpy_ext.numpydoc"]
numpydoc_show_class_members = False
autosummary_generate = True
autodoc_default_options = {"members": True, "undoc-members": True}
templates_path = [
    os.path.join(sphinx_dirname, "templates"),
    os.path.join("generated", "_templates")]
exclude_patterns = templates_path[:]
source_suffix = ".rst"
master_doc = "index"
project = "starcell"
copyright = "{0}, starcell developers".format(datetime.date.today().year)
version = release = __version__
pygments_style = "sphinx"

# HTML output
html_theme = "azmind"
html_theme_path = [os.path.join(sphinx_dirname, "themes")]
html_theme_options = {"collapsiblesidebar": True}
html_title = html_short_title = "starcell"
html_static_path = ["_static"]
html_use_modindex = False
html_use_index = False
html_show_sourcelink = False
htmlhelp_basename = "starcell"
