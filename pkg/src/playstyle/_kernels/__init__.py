"""Hot inner loops, compiled when possible.

The Cython extension ``_ckernels`` is used if it imports; otherwise the
numpy/Python versions in ``_pykernels`` are used. Set
``PLAYSTYLE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python_kernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and not os.environ.get("PLAYSTYLE_PURE_PYTHON"):
    _impl = compiled_kernels
else:
    _impl = python_kernels

BACKEND = _impl.NAME

nearest_centroid = _impl.nearest_centroid
dpmeans_sweep = _impl.dpmeans_sweep
sga_epochs = _impl.sga_epochs
smo = _impl.smo


def available_backends():
    """Kernel modules that can be loaded in this environment, keyed by name."""
    out = {python_kernels.NAME: python_kernels}
    if compiled_kernels is not None:
        out[compiled_kernels.NAME] = compiled_kernels
    return out
