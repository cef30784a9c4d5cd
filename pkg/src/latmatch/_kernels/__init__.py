"""Kernel backend selection.

The compiled extension (`_core`, built from Cython) is preferred when
available; otherwise the pure numpy implementation is used. Set
LATMATCH_KERNELS=py to force the fallback, LATMATCH_KERNELS=c to
require the extension (raises if it is missing).
"""

import os

from . import pure

_requested = os.environ.get("LATMATCH_KERNELS", "").lower()

if _requested in ("py", "pure", "python"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested in ("c", "compiled"):
            raise
        _impl = pure
        BACKEND = "pure"

relu_fw = _impl.relu_fw
relu_bw = _impl.relu_bw
sigmoid_fw = _impl.sigmoid_fw
sigmoid_bw = _impl.sigmoid_bw
tanh_fw = _impl.tanh_fw
tanh_bw = _impl.tanh_bw
exp_fw = _impl.exp_fw
exp_bw = _impl.exp_bw
log_fw = _impl.log_fw
log_bw = _impl.log_bw
softmax_rows_fw = _impl.softmax_rows_fw
softmax_rows_bw = _impl.softmax_rows_bw
layer_norm_rows_fw = _impl.layer_norm_rows_fw
layer_norm_rows_bw = _impl.layer_norm_rows_bw


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'pure'."""
    return BACKEND
