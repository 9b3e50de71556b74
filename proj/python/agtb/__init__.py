"""Treebank experiment toolkit bindings."""

from agtb._core import *  # noqa: F401,F403
from agtb._core import __doc__  # noqa: F401
