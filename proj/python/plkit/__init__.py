"""Python bindings for the plkit decoding and pseudo-labelling toolkit."""

from ._plkit import *  # noqa: F401,F403
from ._plkit import __doc__  # noqa: F401
