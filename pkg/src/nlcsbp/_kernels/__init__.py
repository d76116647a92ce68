"""Backend selection for the hot simulation kernels.

The compiled extension (``nlcsbp._kernels._core``, built from ``_core.pyx``)
is preferred when importable; otherwise the numpy fallback is used.  Both
expose the same functions and the same counter-based RNG discipline, so
switching backends does not change which random numbers a path consumes.

Set ``NLCSBP_BACKEND=python`` (or ``cython``) to force a backend.
"""

import importlib
import os

from . import fallback

_PUBLIC = [
    "philox4x64",
    "bits_to_uniform",
    "uniform_words",
    "stable_increment_std",
    "stable_passage_batch",
    "cpp_passage_batch",
    "smd_exit_batch",
    "stable_eta_batch",
    "cpp_eta_batch",
    "JUMP_LOGTAIL",
    "JUMP_TABLE",
]

_forced = os.environ.get("NLCSBP_BACKEND", "auto").lower()

_compiled = None
if _forced in ("auto", "cython"):
    try:
        _compiled = importlib.import_module("nlcsbp._kernels._core")
    except ImportError:
        _compiled = None
    if _forced == "cython" and _compiled is None:
        raise ImportError(
            "NLCSBP_BACKEND=cython but the compiled core is not built; "
            "run `python setup.py build_ext --inplace` or reinstall."
        )

_impl = _compiled if _compiled is not None else fallback

BACKEND = _impl.BACKEND_NAME
HAVE_COMPILED = _compiled is not None

for _name in _PUBLIC:
    globals()[_name] = getattr(_impl, _name)

__all__ = _PUBLIC + ["BACKEND", "HAVE_COMPILED", "fallback", "get_backend_module"]


def get_backend_module(name):
    """Return a specific backend module by name ('python' or 'cython')."""
    if name == "python":
        return fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled core not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
