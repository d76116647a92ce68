# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch engines: per-path C loops mirroring fallback.py.

Same RNG discipline as the fallback (one philox4x64 block per event, lanes
0 and 1), so a given (seed, stream) produces the same path in both backends
up to floating-point rounding of the transforms.
"""

import numpy as np

from ..errors import HorizonError

BACKEND_NAME = "cython"

JUMP_LOGTAIL = 1
JUMP_TABLE = 2

cdef int _C_JUMP_LOGTAIL = 1

cdef extern from *:
    """
    static inline unsigned long long nlcsbp_mulhi64(unsigned long long a,
                                                    unsigned long long b) {
        return (unsigned long long)(((__uint128_t)a * (__uint128_t)b) >> 64);
    }
    """
    unsigned long long nlcsbp_mulhi64(unsigned long long a, unsigned long long b) nogil

from libc.math cimport exp, log, sin, pow, fmin, fmax, M_PI, e as M_E

ctypedef unsigned long long u64

cdef u64 _PM0 = 0xD2E7470EE14C6C93ULL
cdef u64 _PM1 = 0xCA5A826395121157ULL
cdef u64 _PW0 = 0x9E3779B97F4A7C15ULL
cdef u64 _PW1 = 0xBB67AE8584CAA73BULL


cdef inline void _philox_block(u64 seed, u64 stream, u64 block, u64* out) noexcept nogil:
    cdef u64 c0 = block, c1 = 0, c2 = 0, c3 = 0
    cdef u64 k0 = seed, k1 = stream
    cdef u64 hi0, lo0, hi1, lo1, t0, t2
    cdef int r
    for r in range(10):
        if r:
            k0 += _PW0
            k1 += _PW1
        hi0 = nlcsbp_mulhi64(_PM0, c0)
        lo0 = _PM0 * c0
        hi1 = nlcsbp_mulhi64(_PM1, c2)
        lo1 = _PM1 * c2
        t0 = hi1 ^ c1 ^ k0
        t2 = hi0 ^ c3 ^ k1
        c0 = t0
        c1 = lo1
        c2 = t2
        c3 = lo0
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline double _to_uniform(u64 w) noexcept nogil:
    return (<double>(w >> 11) + 0.5) * (1.0 / 9007199254740992.0)


cdef inline void _step_pair(u64 seed, u64 stream, u64 block, double* u1, double* u2) noexcept nogil:
    cdef u64 out[4]
    _philox_block(seed, stream, block, out)
    u1[0] = _to_uniform(out[0])
    u2[0] = _to_uniform(out[1])


cdef inline double _kanter(double alpha, double u, double w) noexcept nogil:
    cdef double v = M_PI * u
    cdef double la = (log(sin((1.0 - alpha) * v))
                      + alpha / (1.0 - alpha) * log(sin(alpha * v))
                      - 1.0 / (1.0 - alpha) * log(sin(v)))
    return exp((1.0 - alpha) / alpha * (la - log(w)))


cdef inline double _interp_loglog(double x, double[::1] lx, double[::1] ly) noexcept nogil:
    # linear interpolation of (lx, ly) at log(x), clamped at the table ends
    cdef double q = log(x)
    cdef Py_ssize_t n = lx.shape[0]
    cdef Py_ssize_t lo = 0, hi = n - 1, mid
    if q <= lx[0]:
        return exp(ly[0])
    if q >= lx[n - 1]:
        return exp(ly[n - 1])
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if lx[mid] <= q:
            lo = mid
        else:
            hi = mid
    cdef double f = (q - lx[lo]) / (lx[hi] - lx[lo])
    return exp(ly[lo] + f * (ly[hi] - ly[lo]))


cdef inline double _jump_size(int kind, double p0, double[::1] logu,
                              double[::1] logz, double u) noexcept nogil:
    if kind == _C_JUMP_LOGTAIL:
        return exp(fmin(pow(u, -1.0 / p0), 700.0)) - M_E
    return _interp_loglog(u, logu, logz)


def philox4x64(seed, streams, blocks):
    """Vector philox4x64-10; same contract as the fallback version."""
    s_arr, b_arr = np.broadcast_arrays(np.asarray(streams, np.uint64),
                                       np.asarray(blocks, np.uint64))
    s_arr = s_arr.reshape(-1).astype(np.uint64, copy=True)
    b_arr = b_arr.reshape(-1).astype(np.uint64, copy=True)
    cdef u64[::1] sv = s_arr
    cdef u64[::1] bv = b_arr
    cdef Py_ssize_t n = sv.shape[0]
    out = np.empty((n, 4), np.uint64)
    cdef u64[:, ::1] ov = out
    cdef u64 sd = <u64>np.uint64(seed)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _philox_block(sd, sv[i], bv[i], &ov[i, 0])
    return out


def bits_to_uniform(bits):
    bits = np.ascontiguousarray(bits, np.uint64)
    shape = bits.shape
    cdef u64[::1] bv = bits.reshape(-1)
    out = np.empty(bv.shape[0], np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(bv.shape[0]):
            ov[i] = _to_uniform(bv[i])
    return out.reshape(shape)


def uniform_words(seed, stream, word_lo, n):
    lo_block = int(word_lo) >> 2
    hi_block = (int(word_lo) + int(n) - 1) >> 2
    blocks = np.arange(lo_block, hi_block + 1, dtype=np.uint64)
    words = philox4x64(seed, np.uint64(stream), blocks).ravel()
    off = int(word_lo) - (lo_block << 2)
    return bits_to_uniform(words[off:off + int(n)])


def stable_increment_std(alpha, u, w):
    u = np.ascontiguousarray(u, np.float64)
    w = np.ascontiguousarray(w, np.float64)
    cdef double[::1] uv = u.reshape(-1)
    cdef double[::1] wv = w.reshape(-1)
    out = np.empty(uv.shape[0], np.float64)
    cdef double[::1] ov = out
    cdef double al = alpha
    cdef Py_ssize_t i
    with nogil:
        for i in range(uv.shape[0]):
            ov[i] = _kanter(al, uv[i], wv[i])
    return out.reshape(u.shape)


def stable_passage_batch(seed, stream_base, n, alpha, c0, drift, x0, level,
                         theta, floor_frac, max_steps):
    cdef Py_ssize_t nn = n
    tau = np.zeros(nn)
    pre = np.full(nn, float(x0))
    post = np.full(nn, float(x0))
    steps = np.zeros(nn, np.int64)
    cdef double[::1] tauv = tau
    cdef double[::1] prev = pre
    cdef double[::1] postv = post
    cdef long long[::1] stepsv = steps
    cdef u64 sd = <u64>np.uint64(seed)
    cdef u64 sb = <u64>np.uint64(stream_base)
    cdef double al = alpha, c0_ = c0, dr = drift, x0_ = x0, lv = level
    cdef double th = theta, ff = floor_frac
    cdef long long cap = max_steps
    cdef Py_ssize_t i
    cdef double v, t, gap, s_t, dt, inc, pv, u1, u2
    cdef long long k
    cdef int overflow = 0
    with nogil:
        for i in range(nn):
            v = x0_
            t = 0.0
            k = 0
            while v < lv:
                if k >= cap:
                    overflow = 1
                    break
                _step_pair(sd, sb + <u64>i, <u64>k, &u1, &u2)
                gap = lv - v
                s_t = fmax(fmin(th * gap, th * lv), ff * lv)
                dt = pow(s_t, al) / c0_
                inc = s_t * _kanter(al, u1, -log(u2))
                pv = v - dr * dt
                v = pv + inc
                t += dt
                k += 1
                if v > lv:
                    tauv[i] = t
                    prev[i] = pv
                    postv[i] = v
                    break
            stepsv[i] = k
            if overflow:
                break
    if overflow:
        raise HorizonError(f"path simulation exceeded {max_steps} steps")
    return tau, pre, post, steps


def cpp_passage_batch(seed, stream_base, n, rate, jump_kind, jump_params,
                      jump_logu, jump_logz, x0, level, max_steps):
    cdef Py_ssize_t nn = n
    tau = np.zeros(nn)
    pre = np.full(nn, float(x0))
    post = np.full(nn, float(x0))
    steps = np.zeros(nn, np.int64)
    cdef double[::1] tauv = tau
    cdef double[::1] prev = pre
    cdef double[::1] postv = post
    cdef long long[::1] stepsv = steps
    lu = np.ascontiguousarray(jump_logu, np.float64)
    lz = np.ascontiguousarray(jump_logz, np.float64)
    cdef double[::1] luv = lu
    cdef double[::1] lzv = lz
    cdef double p0 = jump_params[0] if len(jump_params) else 0.0
    cdef int kind = jump_kind
    cdef u64 sd = <u64>np.uint64(seed)
    cdef u64 sb = <u64>np.uint64(stream_base)
    cdef double rt = rate, x0_ = x0, lv = level
    cdef long long cap = max_steps
    cdef Py_ssize_t i
    cdef double v, t, nv, u1, u2
    cdef long long k
    cdef int overflow = 0
    with nogil:
        for i in range(nn):
            v = x0_
            t = 0.0
            k = 0
            while v < lv:
                if k >= cap:
                    overflow = 1
                    break
                _step_pair(sd, sb + <u64>i, <u64>k, &u1, &u2)
                t += -log(u1) / rt
                nv = v + _jump_size(kind, p0, luv, lzv, u2)
                k += 1
                if nv > lv:
                    tauv[i] = t
                    prev[i] = v
                    postv[i] = nv
                    v = nv
                    break
                v = nv
            stepsv[i] = k
            if overflow:
                break
    if overflow:
        raise HorizonError(f"path simulation exceeded {max_steps} steps")
    return tau, pre, post, steps


def smd_exit_batch(seed, stream_base, n, alpha, c0, c, x0, a, x_esc,
                   theta, dt_floor, max_steps):
    cdef Py_ssize_t nn = n
    crossed = np.zeros(nn, np.uint8)
    tau = np.full(nn, np.nan)
    steps = np.zeros(nn, np.int64)
    cdef unsigned char[::1] crv = crossed
    cdef double[::1] tauv = tau
    cdef long long[::1] stepsv = steps
    cdef u64 sd = <u64>np.uint64(seed)
    cdef u64 sb = <u64>np.uint64(stream_base)
    cdef double al = alpha, c0_ = c0, c_ = c, x0_ = x0, a_ = a, xe = x_esc
    cdef double th = theta, fl = dt_floor
    cdef long long cap = max_steps
    cdef Py_ssize_t i
    cdef double v, t, dt, inc, u1, u2
    cdef long long k
    cdef int overflow = 0
    with nogil:
        for i in range(nn):
            v = x0_
            t = 0.0
            k = 0
            while v < xe:
                if k >= cap:
                    overflow = 1
                    break
                _step_pair(sd, sb + <u64>i, <u64>k, &u1, &u2)
                dt = fmax(th * (v - a_) / c_, fl)
                inc = pow(c0_ * dt, 1.0 / al) * _kanter(al, u1, -log(u2))
                k += 1
                if v - c_ * dt <= a_:
                    crv[i] = 1
                    tauv[i] = t + (v - a_) / c_
                    break
                v = v - c_ * dt + inc
                t += dt
            stepsv[i] = k
            if overflow:
                break
    if overflow:
        raise HorizonError(f"path simulation exceeded {max_steps} steps")
    return crossed, tau, steps


def stable_eta_batch(seed, stream_base, n, alpha, c0, kappa, beta, x0, q_step,
                     c1, margin, tail_tol, phi_cap, t_grid, add_mean_residual,
                     max_steps):
    cdef Py_ssize_t nn = n
    t_grid = np.ascontiguousarray(t_grid, np.float64)
    cdef double[::1] tg = t_grid
    cdef Py_ssize_t nt = tg.shape[0]
    eta = np.zeros(nn)
    vend = np.zeros(nn)
    steps = np.zeros(nn, np.int64)
    budget = np.zeros(nn, np.uint8)
    X = np.full((nn, nt), np.nan)
    cdef double[::1] etav = eta
    cdef double[::1] vendv = vend
    cdef long long[::1] stepsv = steps
    cdef unsigned char[::1] budv = budget
    cdef double[:, ::1] Xv = X
    cdef u64 sd = <u64>np.uint64(seed)
    cdef u64 sb = <u64>np.uint64(stream_base)
    cdef double al = alpha, c0_ = c0, kp = kappa, be = beta, x0_ = x0
    cdef double q = q_step, c1_ = c1, mg = margin, tol = tail_tol, capphi = phi_cap
    cdef long long cap = max_steps
    cdef int addres = 1 if add_mean_residual else 0
    cdef double denom = kp * c0_ * (be - al)
    cdef Py_ssize_t i, j
    cdef double v, ee, s_t, dt, inc, nv, ch, pv, u1, u2, est, target
    cdef long long k, nsteps
    with nogil:
        for i in range(nn):
            # pass 1: accumulate until the stopping rule fires
            v = x0_
            ee = 0.0
            k = 0
            while True:
                _step_pair(sd, sb + <u64>i, <u64>k, &u1, &u2)
                s_t = q * v
                dt = pow(s_t, al) / c0_
                inc = s_t * _kanter(al, u1, -log(u2))
                nv = v + inc
                ee += dt * 0.5 * (pow(v, -be) + pow(nv, -be)) / kp
                v = nv
                k += 1
                pv = pow(v, al - be) / denom
                if mg * c1_ * pv <= tol * ee and pv <= capphi:
                    break
                if k >= cap:
                    budv[i] = 1
                    break
            etav[i] = ee
            vendv[i] = v
            stepsv[i] = k
            nsteps = k
            if nt == 0:
                continue
            est = ee + (c1_ * pow(v, al - be) / denom if addres else 0.0)
            # pass 2: replay and read off lookback values
            v = x0_
            ee = 0.0
            for k in range(nsteps):
                _step_pair(sd, sb + <u64>i, <u64>k, &u1, &u2)
                s_t = q * v
                dt = pow(s_t, al) / c0_
                inc = s_t * _kanter(al, u1, -log(u2))
                nv = v + inc
                ch = dt * 0.5 * (pow(v, -be) + pow(nv, -be)) / kp
                for j in range(nt):
                    target = est - tg[j]
                    if ee < target and ee + ch >= target:
                        Xv[i, j] = v
                ee += ch
                v = nv
            for j in range(nt):
                if Xv[i, j] != Xv[i, j]:
                    Xv[i, j] = x0_
    return eta, vend, steps, budget, X


def cpp_eta_batch(seed, stream_base, n, rate, jump_kind, jump_params,
                  jump_logu, jump_logz, kappa, beta, x0, phi_logx, phi_logv,
                  c1, margin, tail_tol, phi_cap, t_grid, add_mean_residual,
                  max_events):
    cdef Py_ssize_t nn = n
    t_grid = np.ascontiguousarray(t_grid, np.float64)
    cdef double[::1] tg = t_grid
    cdef Py_ssize_t nt = tg.shape[0]
    eta = np.zeros(nn)
    vend = np.zeros(nn)
    steps = np.zeros(nn, np.int64)
    budget = np.zeros(nn, np.uint8)
    X = np.full((nn, nt), np.nan)
    cdef double[::1] etav = eta
    cdef double[::1] vendv = vend
    cdef long long[::1] stepsv = steps
    cdef unsigned char[::1] budv = budget
    cdef double[:, ::1] Xv = X
    lu = np.ascontiguousarray(jump_logu, np.float64)
    lz = np.ascontiguousarray(jump_logz, np.float64)
    px = np.ascontiguousarray(phi_logx, np.float64)
    pp = np.ascontiguousarray(phi_logv, np.float64)
    cdef double[::1] luv = lu
    cdef double[::1] lzv = lz
    cdef double[::1] pxv = px
    cdef double[::1] ppv = pp
    cdef double p0 = jump_params[0] if len(jump_params) else 0.0
    cdef int kind = jump_kind
    cdef u64 sd = <u64>np.uint64(seed)
    cdef u64 sb = <u64>np.uint64(stream_base)
    cdef double rt = rate, kp = kappa, be = beta, x0_ = x0
    cdef double c1_ = c1, mg = margin, tol = tail_tol, capphi = phi_cap
    cdef long long cap = max_events
    cdef int addres = 1 if add_mean_residual else 0
    cdef Py_ssize_t i, j
    cdef double v, ee, dt, nv, ch, pv, u1, u2, est, target
    cdef long long k, nsteps
    with nogil:
        for i in range(nn):
            v = x0_
            ee = 0.0
            k = 0
            while True:
                _step_pair(sd, sb + <u64>i, <u64>k, &u1, &u2)
                dt = -log(u1) / rt
                ee += dt / (kp * pow(v, be))
                v = v + _jump_size(kind, p0, luv, lzv, u2)
                k += 1
                pv = _interp_loglog(v, pxv, ppv)
                if mg * c1_ * pv <= tol * ee and pv <= capphi:
                    break
                if k >= cap:
                    budv[i] = 1
                    break
            etav[i] = ee
            vendv[i] = v
            stepsv[i] = k
            nsteps = k
            if nt == 0:
                continue
            est = ee + (c1_ * _interp_loglog(v, pxv, ppv) if addres else 0.0)
            v = x0_
            ee = 0.0
            for k in range(nsteps):
                _step_pair(sd, sb + <u64>i, <u64>k, &u1, &u2)
                dt = -log(u1) / rt
                ch = dt / (kp * pow(v, be))
                for j in range(nt):
                    target = est - tg[j]
                    if ee < target and ee + ch >= target:
                        Xv[i, j] = v
                ee += ch
                v = v + _jump_size(kind, p0, luv, lzv, u2)
            for j in range(nt):
                if Xv[i, j] != Xv[i, j]:
                    Xv[i, j] = x0_
    return eta, vend, steps, budget, X
