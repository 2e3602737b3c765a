# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot-path kernels; exact mirror of _kernels_py.

One call sweeps the synaptic targets of one stimulus in (feature, yk, xk)
order and applies saturating integrate-and-fire updates in place.  All
divisions below run on non-negative operands, so cdivision is safe.
"""

from libc.stdint cimport int8_t, int16_t, int32_t, uint8_t


cdef inline int _axis_lo(int p, int stride, int out_n) noexcept:
    cdef int r = p % stride
    cdef int lo = p - (out_n - 1) * stride
    if lo > r:
        return r + ((lo - r + stride - 1) / stride) * stride
    return r


cdef inline int _fire_one(int16_t[::1] v, int n, int w, int theta, bint strict,
                          int reset_mode, int reset_value, int lower_bound) noexcept:
    """Apply one update; returns 1 if the neuron spiked."""
    cdef int acc = v[n] + w
    cdef bint spiked
    if acc > 32767:
        acc = 32767
    elif acc < -32768:
        acc = -32768
    if strict:
        spiked = acc > theta
    else:
        spiked = acc >= theta
    if spiked:
        if reset_mode == 0:
            acc -= theta
        else:
            acc = reset_value
    if acc < lower_bound:
        acc = lower_bound
    v[n] = <int16_t>acc
    return spiked


def conv_event(const int8_t[:, :, :, ::1] weights,
               const uint8_t[:, :, :, ::1] kkill,
               int16_t[::1] v,
               const uint8_t[::1] nkill,
               int c, int xp, int yp,
               int stride_x, int stride_y, int out_w, int out_h,
               int theta, bint strict, int reset_mode, int reset_value,
               int lower_bound,
               int32_t[::1] spike_out):
    cdef int f_max = <int> weights.shape[1]
    cdef int kh = <int> weights.shape[2]
    cdef int kw = <int> weights.shape[3]
    cdef int xk_lo = _axis_lo(xp, stride_x, out_w)
    cdef int yk_lo = _axis_lo(yp, stride_y, out_h)
    cdef int xk_hi = xp if xp < kw - 1 else kw - 1
    cdef int yk_hi = yp if yp < kh - 1 else kh - 1
    cdef int n_sp = 0, n_up = 0
    cdef int f, yk, xk, yo, base, n, w
    if xk_lo > xk_hi or yk_lo > yk_hi:
        return 0, 0
    for f in range(f_max):
        for yk in range(yk_lo, yk_hi + 1, stride_y):
            yo = (yp - yk) / stride_y
            base = (f * out_h + yo) * out_w
            for xk in range(xk_lo, xk_hi + 1, stride_x):
                w = weights[c, f, yk, xk]
                if w == 0 or kkill[c, f, yk, xk]:
                    continue
                n = base + (xp - xk) / stride_x
                if nkill[n]:
                    continue
                n_up += 1
                if _fire_one(v, n, w, theta, strict, reset_mode, reset_value,
                             lower_bound):
                    spike_out[n_sp] = n
                    n_sp += 1
    return n_sp, n_up


def fc_event(const int8_t[:, ::1] weights,
             const uint8_t[:, ::1] kkill,
             int16_t[::1] v,
             const uint8_t[::1] nkill,
             int i, int theta, bint strict, int reset_mode, int reset_value,
             int lower_bound,
             int32_t[::1] spike_out):
    cdef int f_max = <int> weights.shape[1]
    cdef int n_sp = 0, n_up = 0
    cdef int j, w
    for j in range(f_max):
        w = weights[i, j]
        if w == 0 or kkill[i, j] or nkill[j]:
            continue
        n_up += 1
        if _fire_one(v, j, w, theta, strict, reset_mode, reset_value, lower_bound):
            spike_out[n_sp] = j
            n_sp += 1
    return n_sp, n_up


def leak_sweep(const int16_t[::1] bias,
               const uint8_t[::1] bkill,
               int16_t[::1] v,
               const uint8_t[::1] nkill,
               int plane, int theta, bint strict, int reset_mode, int reset_value,
               int lower_bound,
               int32_t[::1] spike_out):
    cdef int total = <int> v.shape[0]
    cdef int n_sp = 0, n_up = 0
    cdef int n, f, b
    for n in range(total):
        f = n / plane
        b = bias[f]
        if b == 0 or bkill[f] or nkill[n]:
            continue
        n_up += 1
        if _fire_one(v, n, b, theta, strict, reset_mode, reset_value, lower_bound):
            spike_out[n_sp] = n
            n_sp += 1
    return n_sp, n_up
