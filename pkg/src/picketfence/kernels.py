"""Backend selection for the hot QR sweep.

The compiled Cython kernel is used when it was built; otherwise, or when
``PICKETFENCE_NO_EXT=1`` is set, the numpy fallback is used.  ``BACKEND``
names the active one.
"""
import os


class SingularFactorError(ArithmeticError):
    """A factor left the running product rank deficient (some R_ii == 0)."""

    def __init__(self, index):
        super().__init__(f"singular factor at sweep index {index}")
        self.index = index


from . import _fallback  # noqa: E402

try:
    if os.environ.get("PICKETFENCE_NO_EXT") == "1":
        raise ImportError("compiled kernel disabled by PICKETFENCE_NO_EXT")
    from . import _kernels as _compiled  # noqa: E402
except ImportError:
    _compiled = None

if _compiled is not None:
    qr_sweep = _compiled.qr_sweep
    BACKEND = "cython"
else:
    qr_sweep = _fallback.qr_sweep
    BACKEND = "python"

python_qr_sweep = _fallback.qr_sweep
compiled_qr_sweep = _compiled.qr_sweep if _compiled is not None else None
