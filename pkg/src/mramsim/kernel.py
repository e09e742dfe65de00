"""Backend selection for the chain solver.

The compiled extension is used when it imports; set ``MRAMSIM_PURE_PYTHON=1``
to force the interpreted fallback.
"""
import os

from . import _pykernel
from ._pykernel import CURRENT_LIMIT, OK, RESTART_LIMIT, SINGULAR  # noqa: F401

BACKEND = "python"
solve_chain = _pykernel.solve_chain

if not os.environ.get("MRAMSIM_PURE_PYTHON"):
    try:
        from ._kernel import solve_chain  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

python_solve_chain = _pykernel.solve_chain
