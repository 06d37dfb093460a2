# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html
# -- Project information -----------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#project-information
from datetime import date

year = date.today().year
project = "hessenv"
copyright = f"{year}, hessenv developers"
author = "hessenv developers"

# -- General configuration ---------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#general-configuration

extensions = [
    "myst_parser",
    "sphinx.ext.napoleon",
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx.ext.autosectionlabel",
    "sphinx_click",
]

templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

# Prefix each section label with the name of the document it is in, followed by a colon.
autosectionlabel_prefix_document = True

autodoc_typehints_format = "short"
autodoc_class_signature = "separated"
napoleon_attr_annotations = False

nitpicky = True
nitpick_ignore = [
    ("py:class", "collections.abc.Callable"),
    ("py:class", "collections.abc.Sequence"),
    ("py:class", "pathlib.Path"),
    ("py:class", "numpy.ndarray"),
    ("py:class", "numpy.random.Generator"),
    ("py:class", "scipy.sparse.linalg.LinearOperator"),
]

# -- Options for HTML output -------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#options-for-html-output

html_theme = "sphinx_book_theme"
html_title = "hessenv"

html_theme_options = {
    "path_to_docs": "docs",
}

show_navbar_depth = 2
