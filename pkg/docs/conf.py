#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Periscope documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.
import os
import re
import sys

sys.path.insert(0, os.path.abspath(".."))

needs_sphinx = "1.5"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.todo",
    "sphinx.ext.coverage",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx_copybutton",
]

autosummary_generate = True
autosummary_imported_members = False

mathjax_path = "https://cdnjs.cloudflare.com/ajax/libs/mathjax/2.7.5/MathJax.js?config=TeX-MML-AM_CHTML"

templates_path = ["_templates"]

source_suffix = ".rst"

master_doc = "index"

project = "Periscope"
copyright = "2022, Xanadu Quantum Technologies Inc"
author = "Xanadu Inc."

import periscope

release = periscope.version()

version = re.match(r"^(\d+\.\d+)", release).expand(r"\1")

language = None

today_fmt = "%Y-%m-%d"

exclude_patterns = ["_build"]

add_function_parentheses = True

add_module_names = False

show_authors = True

pygments_style = "sphinx"

todo_include_todos = True

html_static_path = []

html_sidebars = {
    "**": [
        "searchbox.html",
        "globaltoc.html",
    ]
}

htmlhelp_basename = "Periscopedoc"
