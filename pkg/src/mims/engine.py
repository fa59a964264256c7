"""Picks the compiled kernel when it is available.

Set ``MIMS_PURE_PYTHON=1`` to force the interpreted kernel (handy for debugging and
for checking that both builds agree). :func:`load_pure` always returns the
interpreted module, even when the compiled one is importable.
"""

from __future__ import annotations

import importlib
import importlib.util
import os
import sys
from pathlib import Path

_SRC = Path(__file__).with_name("_engine.py")


def load_pure():
    name = "mims._engine_py"
    mod = sys.modules.get(name)
    if mod is None:
        spec = importlib.util.spec_from_file_location(name, _SRC)
        mod = importlib.util.module_from_spec(spec)
        sys.modules[name] = mod
        spec.loader.exec_module(mod)
    return mod


def load_compiled():
    """The compiled kernel, or None if the extension was not built."""
    try:
        mod = importlib.import_module("mims._engine")
    except ImportError:
        return None
    return mod if _is_compiled(mod) else None


def _is_compiled(mod) -> bool:
    f = getattr(mod, "__file__", "") or ""
    return not f.endswith(".py")


def select():
    if os.environ.get("MIMS_PURE_PYTHON", "").strip() not in ("", "0"):
        return load_pure()
    return load_compiled() or load_pure()


kernel = select()
COMPILED = _is_compiled(kernel)
Engine = kernel.Engine
IntHeap = kernel.IntHeap
SimulationError = kernel.SimulationError
