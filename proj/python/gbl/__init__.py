"""Graph backup for tabular value learning."""

from ._gbl import *  # noqa: F401,F403
from ._gbl import __doc__  # noqa: F401
