"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
numpy implementation in ``_pykernels`` takes over.  Setting the environment
variable ``WQFINSLER_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

try:
    if os.environ.get("WQFINSLER_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _ckernels as _impl
except ImportError:
    _impl = _pykernels

BACKEND = _impl.BACKEND
BACKENDS = {"python": _pykernels}
if _impl is not _pykernels:
    BACKENDS["cython"] = _impl


def pack(cfg):
    """Flatten a MetricConfig into the constructor arguments of a kernel Metric."""
    n = cfg.dimension
    sig0, sig_l, sig_H = cfg.base.parts
    _, pot_l, pot_H = cfg.one_form.parts(n)
    return (
        n,
        sig0,
        sig_l,
        sig_H.ravel(),
        pot_l,
        pot_H.ravel(),
        cfg.phi.kernel_kind,
        list(cfg.phi.kernel_coeffs) or [0.0],
        cfg.phi.b0,
    )


def build_metric(cfg, backend=None):
    module = _impl if backend is None else BACKENDS[backend]
    return module.Metric(*pack(cfg))
