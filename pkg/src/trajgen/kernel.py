"""Loss-and-gradient kernel, compiled when available.

The backend is chosen once at import: the Cython extension ``_ckernel`` if it
was built, otherwise the numpy implementation.  Set ``TRAJGEN_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _kernel_py

try:
    if os.environ.get("TRAJGEN_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _ckernel
except ImportError:
    _ckernel = None

BACKENDS = {"python": _kernel_py.loss_and_grad}
if _ckernel is not None:
    BACKENDS["native"] = _ckernel.loss_and_grad

BACKEND = "native" if _ckernel is not None else "python"


def loss_and_grad(packed, lo, hi, z, goal_points, goal_vecs, p_start, p_end, weights, backend=None):
    """Composite loss of logits ``z`` and its gradient.

    Returns ``(loss, terms, grad, theta, positions, directions)`` where
    ``terms`` holds L0..L6 and ``grad`` has the shape of ``z``.
    """
    fn = BACKENDS[backend or BACKEND]
    return fn(packed, lo, hi, z, goal_points, goal_vecs, p_start, p_end, weights)
