"""Turn-level group policy optimization on a toy tool-use environment.

The heavy lifting lives in the compiled extension; this package re-exports it.
"""

from ._gtpo import *  # noqa: F401,F403
from ._gtpo import TOKENS, VOCAB_SIZE  # noqa: F401
