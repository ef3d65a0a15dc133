# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython twin of tarbm.kernels_py; see that module for the contract.

Loops are written with a fixed summation order (innermost index last)
so results are deterministic for a given input. Uniform variates are
supplied by the caller, so the sampling decisions match the python
backend exactly; float results agree to rounding error.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

BACKEND_NAME = "cython"


cdef inline double _sigm(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef void _hidden_probs(const double[:, ::1] v, const double[:, ::1] w, const double[::1] b_h,
                        const double[:, ::1] extra, bint has_extra,
                        double[:, ::1] out) nogil:
    cdef Py_ssize_t B = v.shape[0], V = v.shape[1], H = w.shape[1]
    cdef Py_ssize_t b, i, j
    cdef double z
    for b in range(B):
        for j in range(H):
            z = b_h[j]
            if has_extra:
                z += extra[b, j]
            for i in range(V):
                z += v[b, i] * w[i, j]
            out[b, j] = _sigm(z)


def gibbs_chain(object w_in, object b_v_in, object b_h_in, object v0_in,
                object extra_in, int k, object u_h_in, object u_v_in,
                bint gaussian_visible):
    cdef const double[:, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[::1] b_h = np.ascontiguousarray(b_h_in, dtype=np.float64)
    cdef const double[:, ::1] v0 = np.ascontiguousarray(v0_in, dtype=np.float64)
    cdef Py_ssize_t B = v0.shape[0], V = v0.shape[1], H = w.shape[1]

    # visible bias may be shared (V,) or per-row (B, V)
    bv_arr = np.ascontiguousarray(
        np.broadcast_to(np.asarray(b_v_in, dtype=np.float64), (B, V)))
    cdef const double[:, ::1] b_v = bv_arr

    cdef bint has_extra = extra_in is not None
    extra_arr = (np.ascontiguousarray(extra_in, dtype=np.float64)
                 if has_extra else np.zeros((1, 1)))
    cdef const double[:, ::1] extra = extra_arr

    cdef const double[:, :, ::1] u_h = np.ascontiguousarray(u_h_in, dtype=np.float64)
    cdef bint has_uv = u_v_in is not None
    uv_arr = (np.ascontiguousarray(u_v_in, dtype=np.float64)
              if has_uv else np.zeros((1, 1, 1)))
    cdef const double[:, :, ::1] u_v = uv_arr
    if not gaussian_visible and not has_uv:
        raise ValueError("binary visibles require visible uniforms")

    h0p_arr = np.empty((B, H))
    hp_arr = np.empty((B, H))
    v_arr = np.empty((B, V))
    h_arr = np.empty((B, H))
    cdef double[:, ::1] h0p = h0p_arr, hp = hp_arr, v = v_arr, h = h_arr

    cdef Py_ssize_t b, i, j, step
    cdef double mean
    with nogil:
        _hidden_probs(v0, w, b_h, extra, has_extra, h0p)
        for b in range(B):
            for j in range(H):
                h[b, j] = 1.0 if u_h[0, b, j] < h0p[b, j] else 0.0
        for step in range(k):
            for b in range(B):
                for i in range(V):
                    mean = b_v[b, i]
                    for j in range(H):
                        mean += h[b, j] * w[i, j]
                    if gaussian_visible:
                        v[b, i] = mean
                    else:
                        v[b, i] = 1.0 if u_v[step, b, i] < _sigm(mean) else 0.0
            _hidden_probs(v, w, b_h, extra, has_extra, hp)
            if step + 1 < k:
                for b in range(B):
                    for j in range(H):
                        h[b, j] = 1.0 if u_h[step + 1, b, j] < hp[b, j] else 0.0
    return h0p_arr, v_arr, hp_arr


def ae_grad(object w_in, object b_v_in, object b_h_in, object delayed_in,
            object vs_in, bint gaussian_visible):
    cdef const double[:, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[::1] b_v = np.ascontiguousarray(b_v_in, dtype=np.float64)
    cdef const double[::1] b_h = np.ascontiguousarray(b_h_in, dtype=np.float64)
    cdef const double[:, :, ::1] delayed = np.ascontiguousarray(delayed_in, dtype=np.float64)
    cdef const double[:, :, ::1] vs = np.ascontiguousarray(vs_in, dtype=np.float64)
    cdef Py_ssize_t d = vs.shape[0] - 1
    cdef Py_ssize_t B = vs.shape[1], V = vs.shape[2], H = w.shape[1]

    hs_arr = np.empty((d, B, H))
    h0_arr = np.empty((B, H))
    vhat_arr = np.empty((B, V))
    dv_arr = np.empty((B, V))
    dz_arr = np.empty((B, H))
    grad_arr = np.zeros((H, H))
    cdef double[:, :, ::1] hs = hs_arr
    cdef double[:, ::1] h0 = h0_arr, vhat = vhat_arr, dv = dv_arr, dz = dz_arr
    cdef double[:, ::1] grad = grad_arr

    cdef Py_ssize_t lag, b, i, j, a
    cdef double z, err = 0.0, diff, pre
    with nogil:
        for lag in range(1, d + 1):
            for b in range(B):
                for j in range(H):
                    z = b_h[j]
                    for i in range(V):
                        z += vs[lag, b, i] * w[i, j]
                    hs[lag - 1, b, j] = _sigm(z)
        for b in range(B):
            for j in range(H):
                z = b_h[j]
                for lag in range(d):
                    for a in range(H):
                        z += delayed[lag, j, a] * hs[lag, b, a]
                h0[b, j] = _sigm(z)
        for b in range(B):
            for i in range(V):
                pre = b_v[i]
                for j in range(H):
                    pre += h0[b, j] * w[i, j]
                vhat[b, i] = pre if gaussian_visible else _sigm(pre)
                diff = vhat[b, i] - vs[0, b, i]
                err += diff * diff
                dv[b, i] = 2.0 * diff
                if not gaussian_visible:
                    dv[b, i] *= vhat[b, i] * (1.0 - vhat[b, i])
        for b in range(B):
            for j in range(H):
                z = 0.0
                for i in range(V):
                    z += dv[b, i] * w[i, j]
                dz[b, j] = z * h0[b, j] * (1.0 - h0[b, j])
        for j in range(H):
            for a in range(H):
                z = 0.0
                for b in range(B):
                    z += dz[b, j] * hs[d - 1, b, a]
                grad[j, a] = z
    return grad_arr, err
