"""Numpy fallback for the per-event hot-path kernels.

Same contract as the compiled extension `_kernels`: each call sweeps the
synaptic targets of one stimulus in the deterministic (feature, yk, xk)
order, applies saturating integrate-and-fire updates in place, and writes
the spiking neuron addresses into `spike_out` in that order.  All targets
of one call are distinct neurons, so the vectorized form is exact.

Returns (spike_count, update_count); updates are the live, non-zero weight
lookups that reached a neuron.
"""

from __future__ import annotations

import numpy as np

I16_MIN = -32768
I16_MAX = 32767


def _axis_offsets(p: int, k: int, stride: int, out_n: int) -> np.ndarray:
    """Kernel offsets on one axis satisfying the sweep congruence
    (p - offset) mod stride == 0 with the output coordinate in range."""
    r = p % stride
    lo = p - (out_n - 1) * stride
    if lo > r:
        lo = r + ((lo - r + stride - 1) // stride) * stride
    else:
        lo = r
    hi = min(k - 1, p)
    if lo > hi:
        return np.empty(0, dtype=np.int64)
    return np.arange(lo, hi + 1, stride, dtype=np.int64)


def _fire(v: np.ndarray, idx: np.ndarray, wv: np.ndarray, theta: int, strict: int,
          reset_mode: int, reset_value: int, lower_bound: int,
          spike_out: np.ndarray) -> tuple[int, int]:
    acc = v[idx].astype(np.int32) + wv
    np.clip(acc, I16_MIN, I16_MAX, out=acc)
    spiking = (acc > theta) if strict else (acc >= theta)
    if reset_mode == 0:
        acc[spiking] -= theta
    else:
        acc[spiking] = reset_value
    np.maximum(acc, lower_bound, out=acc)
    v[idx] = acc.astype(np.int16)
    n_sp = int(np.count_nonzero(spiking))
    if n_sp:
        spike_out[:n_sp] = idx[spiking]
    return n_sp, int(idx.size)


def conv_event(weights: np.ndarray, kkill: np.ndarray, v: np.ndarray, nkill: np.ndarray,
               c: int, xp: int, yp: int,
               stride_x: int, stride_y: int, out_w: int, out_h: int,
               theta: int, strict: int, reset_mode: int, reset_value: int,
               lower_bound: int, spike_out: np.ndarray) -> tuple[int, int]:
    f_max = weights.shape[1]
    kh, kw = weights.shape[2], weights.shape[3]
    xks = _axis_offsets(xp, kw, stride_x, out_w)
    yks = _axis_offsets(yp, kh, stride_y, out_h)
    if xks.size == 0 or yks.size == 0:
        return 0, 0
    xos = (xp - xks) // stride_x
    yos = (yp - yks) // stride_y

    # Blocks flatten in C order: feature-major, then yk, then xk.
    w_flat = weights[c][:, yks[:, None], xks[None, :]].ravel()
    kk_flat = kkill[c][:, yks[:, None], xks[None, :]].ravel()
    fs = np.arange(f_max, dtype=np.int64)
    n_flat = ((fs[:, None, None] * out_h + yos[None, :, None]) * out_w
              + xos[None, None, :]).ravel()

    live = (w_flat != 0) & (kk_flat == 0) & (nkill[n_flat] == 0)
    idx = n_flat[live]
    if idx.size == 0:
        return 0, 0
    return _fire(v, idx, w_flat[live].astype(np.int32), theta, strict,
                 reset_mode, reset_value, lower_bound, spike_out)


def fc_event(weights: np.ndarray, kkill: np.ndarray, v: np.ndarray, nkill: np.ndarray,
             i: int, theta: int, strict: int, reset_mode: int, reset_value: int,
             lower_bound: int, spike_out: np.ndarray) -> tuple[int, int]:
    row = weights[i]
    live = (row != 0) & (kkill[i] == 0) & (nkill == 0)
    idx = np.nonzero(live)[0]
    if idx.size == 0:
        return 0, 0
    return _fire(v, idx, row[idx].astype(np.int32), theta, strict,
                 reset_mode, reset_value, lower_bound, spike_out)


def leak_sweep(bias: np.ndarray, bkill: np.ndarray, v: np.ndarray, nkill: np.ndarray,
               plane: int, theta: int, strict: int, reset_mode: int, reset_value: int,
               lower_bound: int, spike_out: np.ndarray) -> tuple[int, int]:
    b_per = np.repeat(bias.astype(np.int32), plane)
    live = (b_per != 0) & (np.repeat(bkill, plane) == 0) & (nkill == 0)
    idx = np.nonzero(live)[0]
    if idx.size == 0:
        return 0, 0
    return _fire(v, idx, b_per[idx], theta, strict,
                 reset_mode, reset_value, lower_bound, spike_out)
