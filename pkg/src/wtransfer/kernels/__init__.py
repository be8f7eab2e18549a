"""Backend selection for the scan kernel.

The compiled extension is used when it imports; set WTRANSFER_PURE=1 to
force the numpy implementation.
"""

import os

from . import _pure

decode = _pure.decode

if os.environ.get("WTRANSFER_PURE"):
    _fast = None
else:
    try:
        from . import _fast
    except ImportError:
        _fast = None

if _fast is not None:
    eval_block = _fast.eval_block
    BACKEND = "cython"
else:
    eval_block = _pure.eval_block
    BACKEND = "numpy"

BACKENDS = {"numpy": _pure.eval_block}
if _fast is not None:
    BACKENDS["cython"] = _fast.eval_block


def get_backend(name=None):
    if name is None:
        return eval_block
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available (have {sorted(BACKENDS)})") from None
