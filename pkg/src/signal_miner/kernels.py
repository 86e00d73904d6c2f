"""Select the text-kernel backend at import time.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
pure-Python ``_pykernels`` module takes over. Setting ``SIGNAL_MINER_PURE=1``
forces the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("SIGNAL_MINER_PURE", "") not in ("", "0"):
    from signal_miner import _pykernels as _impl
else:
    try:
        from signal_miner import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from signal_miner import _pykernels as _impl

BACKEND = "cython" if _impl.__name__.endswith("_ckernels") else "python"

normalize = _impl.normalize
token_spans = _impl.token_spans
find_mentions = _impl.find_mentions
find_keywords = _impl.find_keywords
class_counts = _impl.class_counts
proximity_counts = _impl.proximity_counts

__all__ = [
    "BACKEND",
    "normalize",
    "token_spans",
    "find_mentions",
    "find_keywords",
    "class_counts",
    "proximity_counts",
]
