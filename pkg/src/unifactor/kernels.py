"""Kernel backend selection.

The compiled extension ``_ckernels`` is used when importable; otherwise, or
when the environment variable ``UNIFACTOR_PURE_PYTHON=1`` is set, the numpy
implementation in ``_pykernels`` is used. Both expose the same functions.
"""
import importlib
import os

from unifactor import _pykernels

_NAMES = (
    "apply_left",
    "apply_right",
    "env_matrix",
    "jacobi_svd",
    "polar_update",
    "rz_update",
    "sweep",
)


def available_backends():
    """Names of the backends that can be loaded in this environment."""
    names = ["python"]
    try:
        importlib.import_module("unifactor._ckernels")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def load_backend(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("unifactor._ckernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    if os.environ.get("UNIFACTOR_PURE_PYTHON") == "1":
        return "python"
    return available_backends()[0]


BACKEND = _select()
_impl = load_backend(BACKEND)

apply_left = _impl.apply_left
apply_right = _impl.apply_right
env_matrix = _impl.env_matrix
jacobi_svd = _impl.jacobi_svd
polar_update = _impl.polar_update
rz_update = _impl.rz_update
sweep = _impl.sweep

gate_offsets = _pykernels.gate_offsets
SVDConvergenceError = _pykernels.SVDConvergenceError
KIND_FIXED = _pykernels.KIND_FIXED
KIND_UNITARY = _pykernels.KIND_UNITARY
KIND_RZ = _pykernels.KIND_RZ
