"""Selects the simulation kernel at import time.

The compiled ``_core`` extension is used when it has been built; otherwise,
or when ``SMA_SIM_PURE_PYTHON=1``, the pure-Python reference runs instead.
"""

import os

from . import _core_py

if os.environ.get("SMA_SIM_PURE_PYTHON") == "1":
    run_plant = _core_py.run_plant
    BACKEND = "python"
else:
    try:
        from ._core import run_plant
        BACKEND = "compiled"
    except ImportError:
        run_plant = _core_py.run_plant
        BACKEND = "python"

__all__ = ["run_plant", "BACKEND"]
