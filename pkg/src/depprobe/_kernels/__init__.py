"""Numeric kernel backend selection.

The hot per-sentence loops (all-pairs distances, loss gradients) exist
twice: a compiled Cython extension and a numpy fallback. The compiled
backend is used when importable; set ``DEPPROBE_KERNELS=py`` or ``=c`` to
force one (``c`` raises if the extension is missing). Both backends share
one contract, tested for agreement in the test suite.
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_FORCED = os.environ.get("DEPPROBE_KERNELS", "").strip().lower()
if _FORCED not in ("", "c", "py"):
    raise RuntimeError(f"DEPPROBE_KERNELS must be 'c' or 'py', got {_FORCED!r}")
if _FORCED == "c" and _ckernels is None:
    raise RuntimeError("DEPPROBE_KERNELS=c but the compiled extension is not available")

if _FORCED == "py" or _ckernels is None:
    _active = _pykernels
else:
    _active = _ckernels

BACKEND = _active.BACKEND

distance_matrix = _active.distance_matrix
structural_loss_grad = _active.structural_loss_grad
softmax_xent_loss_grad = _active.softmax_xent_loss_grad
depth_loss_grad = _active.depth_loss_grad


def available_backends() -> dict:
    """Importable backend modules keyed by name; used by tests and benchmarks."""
    backends = {"numpy": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    return backends
