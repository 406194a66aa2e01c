"""Backend switch for the hot kernels.

``VISBITMASK_BACKEND=numpy`` (or a missing numba install) routes every render
through the vectorized numpy kernels; the default is the numba kernels.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")

_env = os.environ.get("VISBITMASK_BACKEND", "numba").strip().lower()
if _env not in BACKENDS:
    raise ImportError(f"VISBITMASK_BACKEND must be one of {BACKENDS}, got {_env!r}")
DEFAULT_BACKEND = _env if HAVE_NUMBA else "numpy"


def njit(*args, **kwargs):
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda func: func
    return numba.njit(*args, **kwargs)


def resolve_backend(backend=None):
    name = DEFAULT_BACKEND if backend is None else backend.lower()
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise ValueError("numba backend requested but numba is not installed")
    return name
