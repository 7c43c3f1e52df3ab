"""Kernel backend selection.

The compiled extension is used when it imports; set
``DIFFINJECT_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _fallback

python_kernels = _fallback

try:
    from . import _kernels as compiled_kernels
except ImportError:  # not built
    compiled_kernels = None

if os.environ.get("DIFFINJECT_BACKEND", "").lower() == "python" or compiled_kernels is None:
    kernels = _fallback
    BACKEND = "python"
else:
    kernels = compiled_kernels
    BACKEND = "compiled"
