# -*- coding: utf-8 -*-
#
# covsamp documentation build configuration file.
#
# Only the values that differ from the Sphinx defaults are set here.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

from covsamp import __version__  # noqa: E402

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.napoleon', 'sphinx.ext.mathjax']
autodoc_member_order = 'bysource'
napoleon_google_docstring = False

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'covsamp'
version = '.'.join(__version__.split('.')[:2])
release = __version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'covsampdoc'

# -- Options for LaTeX and manual page output ----------------------------------

latex_documents = [
    ('index', 'covsamp.tex', u'covsamp Documentation', u'covsamp developers', 'manual'),
]

man_pages = [
    ('index', 'covsamp', u'covsamp Documentation', [u'covsamp developers'], 1)
]
