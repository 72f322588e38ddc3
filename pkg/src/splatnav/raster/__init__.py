"""Kernel selection: compiled Cython blender when built, numpy fallback otherwise.

Set SPLATNAV_KERNEL=python or SPLATNAV_KERNEL=cython to force one; forcing
the compiled kernel when it is not built raises ImportError.
"""

import os

from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:
    _kernels_cy = None

_KERNELS = {"python": _kernels_py}
if _kernels_cy is not None:
    _KERNELS["cython"] = _kernels_cy


def available_kernels():
    """Mapping of kernel name -> module, always containing 'python'."""
    return dict(_KERNELS)


def get_kernel(name=None):
    """Resolve a kernel module by name, env override, or best available."""
    if name is None:
        name = os.environ.get("SPLATNAV_KERNEL", "").strip().lower() or None
    if name is None:
        return _KERNELS.get("cython", _kernels_py)
    if name not in _KERNELS:
        if name == "cython":
            raise ImportError("compiled kernel requested but splatnav.raster._kernels_cy is not built")
        raise ValueError(f"unknown kernel {name!r}; available: {sorted(_KERNELS)}")
    return _KERNELS[name]


def active_kernel_name():
    return get_kernel().KERNEL_NAME
