# Compiled kernels for the autodiff engine. Semantics must match
# pure.py wherever floating point allows; the test suite asserts
# parity on random inputs.

import numpy as np

from libc.math cimport exp, log, sqrt, tanh


cdef inline double _sigmoid(double v) noexcept:
    cdef double e
    if v >= 0.0:
        e = exp(-v)
        return 1.0 / (1.0 + e)
    e = exp(v)
    return e / (1.0 + e)


def relu_fw(x):
    shape = np.shape(x)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = xv[i] if xv[i] > 0.0 else 0.0
    return out.reshape(shape)


def relu_bw(x, gy):
    shape = np.shape(x)
    x = np.ascontiguousarray(x, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] gv = gy.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = gv[i] if xv[i] > 0.0 else 0.0
    return out.reshape(shape)


def sigmoid_fw(x):
    shape = np.shape(x)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = _sigmoid(xv[i])
    return out.reshape(shape)


def sigmoid_bw(y, gy):
    shape = np.shape(y)
    y = np.ascontiguousarray(y, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.empty_like(y)
    cdef double[::1] yv = y.ravel()
    cdef double[::1] gv = gy.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = yv.shape[0]
    for i in range(n):
        ov[i] = gv[i] * yv[i] * (1.0 - yv[i])
    return out.reshape(shape)


def tanh_fw(x):
    shape = np.shape(x)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = tanh(xv[i])
    return out.reshape(shape)


def tanh_bw(y, gy):
    shape = np.shape(y)
    y = np.ascontiguousarray(y, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.empty_like(y)
    cdef double[::1] yv = y.ravel()
    cdef double[::1] gv = gy.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = yv.shape[0]
    for i in range(n):
        ov[i] = gv[i] * (1.0 - yv[i] * yv[i])
    return out.reshape(shape)


def exp_fw(x):
    shape = np.shape(x)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = exp(xv[i])
    return out.reshape(shape)


def exp_bw(y, gy):
    shape = np.shape(y)
    y = np.ascontiguousarray(y, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.empty_like(y)
    cdef double[::1] yv = y.ravel()
    cdef double[::1] gv = gy.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = yv.shape[0]
    for i in range(n):
        ov[i] = gv[i] * yv[i]
    return out.reshape(shape)


def log_fw(x):
    shape = np.shape(x)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = log(xv[i])
    return out.reshape(shape)


def log_bw(x, gy):
    shape = np.shape(x)
    x = np.ascontiguousarray(x, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] gv = gy.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = gv[i] / xv[i]
    return out.reshape(shape)


def softmax_rows_fw(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, n = xv.shape[0], d = xv.shape[1]
    cdef double m, s
    for i in range(n):
        m = xv[i, 0]
        for j in range(1, d):
            if xv[i, j] > m:
                m = xv[i, j]
        s = 0.0
        for j in range(d):
            ov[i, j] = exp(xv[i, j] - m)
            s += ov[i, j]
        for j in range(d):
            ov[i, j] /= s
    return out


def softmax_rows_bw(y, gy):
    y = np.ascontiguousarray(y, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.empty_like(y)
    cdef double[:, ::1] yv = y
    cdef double[:, ::1] gv = gy
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, n = yv.shape[0], d = yv.shape[1]
    cdef double dot
    for i in range(n):
        dot = 0.0
        for j in range(d):
            dot += yv[i, j] * gv[i, j]
        for j in range(d):
            ov[i, j] = yv[i, j] * (gv[i, j] - dot)
    return out


def layer_norm_rows_fw(x, double eps):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    inv_std = np.empty((x.shape[0], 1), dtype=np.float64)
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] ov = out
    cdef double[:, ::1] sv = inv_std
    cdef Py_ssize_t i, j, n = xv.shape[0], d = xv.shape[1]
    cdef double mean, var, c
    for i in range(n):
        mean = 0.0
        for j in range(d):
            mean += xv[i, j]
        mean /= d
        var = 0.0
        for j in range(d):
            c = xv[i, j] - mean
            var += c * c
        var /= d
        sv[i, 0] = 1.0 / sqrt(var + eps)
        for j in range(d):
            ov[i, j] = (xv[i, j] - mean) * sv[i, 0]
    return out, inv_std


def layer_norm_rows_bw(y, inv_std, gy):
    y = np.ascontiguousarray(y, dtype=np.float64)
    inv_std = np.ascontiguousarray(inv_std, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.empty_like(y)
    cdef double[:, ::1] yv = y
    cdef double[:, ::1] sv = inv_std
    cdef double[:, ::1] gv = gy
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, n = yv.shape[0], d = yv.shape[1]
    cdef double gmean, proj
    for i in range(n):
        gmean = 0.0
        proj = 0.0
        for j in range(d):
            gmean += gv[i, j]
            proj += gv[i, j] * yv[i, j]
        gmean /= d
        proj /= d
        for j in range(d):
            ov[i, j] = sv[i, 0] * (gv[i, j] - gmean - yv[i, j] * proj)
    return out
