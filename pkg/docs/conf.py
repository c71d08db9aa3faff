# -*- coding: utf-8 -*-
#
# divdistill documentation build configuration file, created by
# sphinx-quickstart.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os

import sphinx

# Make the package importable from the repository root
ROOT_DIR = os.path.abspath(os.path.join(__file__, '..', '..'))
sys.path.insert(0, ROOT_DIR)

import divdistill

sphinxver = sphinx.version_info

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon' if sphinxver >= (1, 3) else 'sphinxcontrib.napoleon',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'divdistill'
copyright = '2026, divdistill contributors'

# The short X.Y version and the full version
version = '.'.join(divdistill.__version__.split('.')[:2])
release = divdistill.__version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

htmlhelp_basename = 'divdistilldoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {
}

latex_documents = [
  ('index', 'divdistill.tex', 'divdistill Documentation',
   'divdistill contributors', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('index', 'divdistill', 'divdistill Documentation',
     ['divdistill contributors'], 1)
]
