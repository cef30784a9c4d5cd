"""Pure numpy implementations of the hot numerical kernels.

These mirror `_core.pyx` exactly; the package selects one backend at
import time. All inputs are float64 arrays; 2-D kernels expect
C-contiguous arrays and operate on rows.
"""

import numpy as np


def relu_fw(x):
    return np.maximum(x, 0.0)


def relu_bw(x, gy):
    return np.where(x > 0.0, gy, 0.0)


def sigmoid_fw(x):
    # Split by sign to avoid overflow in exp.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_bw(y, gy):
    return gy * y * (1.0 - y)


def tanh_fw(x):
    return np.tanh(x)


def tanh_bw(y, gy):
    return gy * (1.0 - y * y)


def exp_fw(x):
    return np.exp(x)


def exp_bw(y, gy):
    return gy * y


def log_fw(x):
    return np.log(x)


def log_bw(x, gy):
    return gy / x


def softmax_rows_fw(x):
    """Row-wise softmax of a 2-D array, with max subtraction."""
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_bw(y, gy):
    dot = (y * gy).sum(axis=1, keepdims=True)
    return y * (gy - dot)


def layer_norm_rows_fw(x, eps):
    """Row-wise normalization to zero mean / unit variance.

    Returns (y, inv_std) where inv_std is per-row, needed by the
    backward pass.
    """
    mean = x.mean(axis=1, keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    return centered * inv_std, inv_std


def layer_norm_rows_bw(y, inv_std, gy):
    gy_mean = gy.mean(axis=1, keepdims=True)
    proj = (gy * y).mean(axis=1, keepdims=True)
    return inv_std * (gy - gy_mean - y * proj)
