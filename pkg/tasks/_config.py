"""
Config and definitions specific to divdistill.
"""

import os.path as op

from . import ROOT_DIR, THIS_DIR  # noqa

NAME = 'divdistill'
DOC_DIR = op.join(ROOT_DIR, 'docs')
DOC_BUILD_DIR = op.join(DOC_DIR, '_build')
BENCH_DIR = op.join(ROOT_DIR, 'bench')
