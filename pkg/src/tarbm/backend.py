"""Selects the kernel backend: compiled Cython core or pure numpy.

The compiled extension is preferred when importable; set
``TARBM_BACKEND=python`` (or ``cython``) to force a choice. Model code
calls :func:`gibbs_chain` / :func:`ae_grad` here so the active backend
can also be swapped at runtime (used by the parity tests and the
backend benchmark).
"""

from __future__ import annotations

import os

from . import kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built; numpy fallback
    _compiled = None

_BACKENDS = {"python": kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def _default_backend() -> str:
    name = os.environ.get("TARBM_BACKEND", "").strip().lower()
    if name:
        if name not in _BACKENDS:
            raise RuntimeError(
                f"TARBM_BACKEND={name!r} not available; have {available_backends()}")
        return name
    return "cython" if _compiled is not None else "python"


_active = _BACKENDS[_default_backend()]


def active_backend() -> str:
    return _active.BACKEND_NAME


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise RuntimeError(f"unknown backend {name!r}; have {available_backends()}")
    _active = _BACKENDS[name]


def gibbs_chain(w, b_v, b_h, v0, extra_logit, k, u_h, u_v, gaussian_visible):
    return _active.gibbs_chain(w, b_v, b_h, v0, extra_logit, int(k), u_h, u_v,
                               bool(gaussian_visible))


def ae_grad(w, b_v, b_h, delayed, vs, gaussian_visible):
    return _active.ae_grad(w, b_v, b_h, delayed, vs, bool(gaussian_visible))
