"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the
pure-numpy implementation takes over with the same call signatures.  Set
``LIMBFIT_PURE=1`` in the environment to force the fallback (useful for
benchmarking and for debugging backend differences).
"""

import os

from . import _pure

if os.environ.get("LIMBFIT_PURE", "0") == "1":
    _impl = _pure
else:
    try:
        from . import _corex as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND_NAME

occluded_batch = _impl.occluded_batch
brute_occluded = _impl.brute_occluded
radial_max = _impl.radial_max
segment_distances = _impl.segment_distances

# single-ray query and basis construction stay in numpy; they are not hot
ray_blocked = _pure.ray_blocked
dir_basis = _pure.dir_basis


def backends():
    """All importable backends, for cross-checking and benchmarks."""
    mods = {"pure": _pure}
    try:
        from . import _corex

        mods["compiled"] = _corex
    except ImportError:
        pass
    return mods
