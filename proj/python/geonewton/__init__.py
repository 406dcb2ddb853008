"""Retraction-based Riemannian Newton method on embedded manifolds."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
