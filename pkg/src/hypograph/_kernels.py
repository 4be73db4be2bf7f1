"""Kernel backend selection: compiled extension if importable, else the reference.

Set ``HYPOGRAPH_PURE_PYTHON=1`` to force the reference implementation.
"""
import os

if os.environ.get("HYPOGRAPH_PURE_PYTHON", "") not in ("", "0"):
    from hypograph._pykernels import canonical_search, split_stats

    BACKEND = "python"
else:
    try:
        from hypograph._ckernels import canonical_search, split_stats
    except ImportError:
        from hypograph._pykernels import canonical_search, split_stats

        BACKEND = "python"
    else:
        BACKEND = "cython"

__all__ = ["BACKEND", "canonical_search", "split_stats"]
