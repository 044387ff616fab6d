"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the pure-Python
versions are. Set ``HEXCOLLAB_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from hexcollab import _pykernels

try:
    if os.environ.get("HEXCOLLAB_PURE", "") not in ("", "0"):
        raise ImportError("pure-Python kernels forced by HEXCOLLAB_PURE")
    from hexcollab import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

bfs_pose = _impl.bfs_pose
has_valid_triple = _impl.has_valid_triple

MF, MB, RL, RR = _pykernels.MF, _pykernels.MB, _pykernels.RL, _pykernels.RR
