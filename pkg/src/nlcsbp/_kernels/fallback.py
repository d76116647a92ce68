"""Pure-numpy batch engines: the fallback backend.

Vectorizes path simulation in lockstep across paths. Each path owns one
counter-based stream (key = (seed, stream_id)) and consumes exactly one
philox block per event, so results are independent of lockstep scheduling,
chunking and worker count, and agree path-for-path with the compiled core.
"""

import numpy as np

BACKEND_NAME = "python"

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_SH11 = np.uint64(11)
_INV53 = 2.0 ** -53

JUMP_LOGTAIL = 1
JUMP_TABLE = 2


def _mulhilo(a, b):
    # 64x64 -> (hi, lo) via 32-bit limbs; all ops wrap mod 2^64
    lo = a * b
    a_lo = a & _LO32
    a_hi = a >> _SH32
    b_lo = b & _LO32
    b_hi = b >> _SH32
    t = a_lo * b_lo
    w = a_hi * b_lo + (t >> _SH32)
    y = (w & _LO32) + a_lo * b_hi
    hi = a_hi * b_hi + (w >> _SH32) + (y >> _SH32)
    return hi, lo


def philox4x64(seed, streams, blocks):
    """philox4x64-10 keyed by (seed, stream); returns (n, 4) uint64 words.

    ``streams`` and ``blocks`` broadcast against each other; the 128-bit
    block counter is (blocks, 0) so 2^64 events per path are addressable.
    """
    streams = np.asarray(streams, np.uint64)
    blocks = np.asarray(blocks, np.uint64)
    streams, blocks = np.broadcast_arrays(streams, blocks)
    n = streams.shape[0] if streams.ndim else 1
    c0 = blocks.reshape(n).astype(np.uint64, copy=True)
    c1 = np.zeros(n, np.uint64)
    c2 = np.zeros(n, np.uint64)
    c3 = np.zeros(n, np.uint64)
    k0 = np.full(n, np.uint64(seed), np.uint64)
    k1 = streams.reshape(n).astype(np.uint64, copy=True)
    for r in range(10):
        if r:
            k0 += _W0
            k1 += _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3], axis=1)


def bits_to_uniform(bits):
    """uint64 -> double in the open interval (0, 1)."""
    return ((bits >> _SH11).astype(np.float64) + 0.5) * _INV53


def uniform_words(seed, stream, word_lo, n):
    """n sequential word-indexed uniforms for one stream, starting at word_lo."""
    lo_block = word_lo >> 2
    hi_block = (word_lo + n - 1) >> 2
    blocks = np.arange(lo_block, hi_block + 1, dtype=np.uint64)
    words = philox4x64(seed, np.uint64(stream), blocks).ravel()
    off = word_lo - (lo_block << 2)
    return bits_to_uniform(words[off:off + n])


def stable_increment_std(alpha, u, w):
    """Kanter transform: E[exp(-s Z)] = exp(-s^alpha), u in (0,1), w ~ Exp(1)."""
    v = np.pi * u
    la = (np.log(np.sin((1.0 - alpha) * v))
          + alpha / (1.0 - alpha) * np.log(np.sin(alpha * v))
          - 1.0 / (1.0 - alpha) * np.log(np.sin(v)))
    return np.exp((1.0 - alpha) / alpha * (la - np.log(w)))


def _step_uniforms(seed, stream_base, path_idx, blk):
    bl = philox4x64(seed, np.uint64(stream_base) + path_idx.astype(np.uint64), blk)
    return bits_to_uniform(bl[:, 0]), bits_to_uniform(bl[:, 1])


def _jump_sizes(kind, params, logu, logz, u):
    if kind == JUMP_LOGTAIL:
        r = params[0]
        return np.exp(np.minimum(u ** (-1.0 / r), 700.0)) - np.e
    # monotone log-log quantile table; np.interp clamps at the table ends
    return np.exp(np.interp(np.log(u), logu, logz))


def stable_passage_batch(seed, stream_base, n, alpha, c0, drift, x0, level,
                         theta, floor_frac, max_steps):
    """First passage of x0 + stable subordinator - drift*t over ``level``.

    Step scale (c0*dt)^(1/alpha) tracks theta*gap, floored at floor_frac*level
    so the cell holding the crossing stays small relative to the level.
    Returns (tau, pre, post, steps).
    """
    idx_all = np.arange(n)
    v = np.full(n, float(x0))
    t = np.zeros(n)
    blk = np.zeros(n, np.uint64)
    tau = np.zeros(n)
    pre = np.full(n, float(x0))
    post = np.full(n, float(x0))
    steps = np.zeros(n, np.int64)
    active = v < level
    it = 0
    while active.any():
        it += 1
        if it > max_steps:
            raise _horizon(it)
        idx = idx_all[active]
        u1, u2 = _step_uniforms(seed, stream_base, idx, blk[idx])
        gap = level - v[idx]
        s_t = np.maximum(np.minimum(theta * gap, theta * level), floor_frac * level)
        dt = (s_t ** alpha) / c0
        inc = s_t * stable_increment_std(alpha, u1, -np.log(u2))
        pre_v = v[idx] - drift * dt
        nv = pre_v + inc
        t[idx] += dt
        v[idx] = nv
        blk[idx] += np.uint64(1)
        steps[idx] += 1
        crossed = nv > level
        ci = idx[crossed]
        tau[ci] = t[ci]
        pre[ci] = pre_v[crossed]
        post[ci] = nv[crossed]
        active[ci] = False
    return tau, pre, post, steps


def cpp_passage_batch(seed, stream_base, n, rate, jump_kind, jump_params,
                      jump_logu, jump_logz, x0, level, max_steps):
    """First passage over ``level`` for a compound-Poisson subordinator.

    Events are exact: Exp(rate) waiting times, quantile-inverted jumps.
    Returns (tau, pre, post, steps).
    """
    idx_all = np.arange(n)
    v = np.full(n, float(x0))
    t = np.zeros(n)
    blk = np.zeros(n, np.uint64)
    tau = np.zeros(n)
    pre = np.full(n, float(x0))
    post = np.full(n, float(x0))
    steps = np.zeros(n, np.int64)
    active = v < level
    it = 0
    while active.any():
        it += 1
        if it > max_steps:
            raise _horizon(it)
        idx = idx_all[active]
        u1, u2 = _step_uniforms(seed, stream_base, idx, blk[idx])
        t[idx] += -np.log(u1) / rate
        jump = _jump_sizes(jump_kind, jump_params, jump_logu, jump_logz, u2)
        nv = v[idx] + jump
        crossed = nv > level
        ci = idx[crossed]
        tau[ci] = t[ci]
        pre[ci] = v[ci]
        post[ci] = nv[crossed]
        v[idx] = nv
        blk[idx] += np.uint64(1)
        steps[idx] += 1
        active[ci] = False
    return tau, pre, post, steps


def smd_exit_batch(seed, stream_base, n, alpha, c0, c, x0, a, x_esc,
                   theta, dt_floor, max_steps):
    """Down-crossing of level ``a`` for the stable-minus-drift process.

    Crossings happen on the continuous drift segments and are located there;
    a path that reaches x_esc is declared escaped (never crossing).
    Returns (crossed uint8, tau, steps).
    """
    idx_all = np.arange(n)
    v = np.full(n, float(x0))
    t = np.zeros(n)
    blk = np.zeros(n, np.uint64)
    crossed = np.zeros(n, np.uint8)
    tau = np.full(n, np.nan)
    steps = np.zeros(n, np.int64)
    active = v < x_esc
    it = 0
    while active.any():
        it += 1
        if it > max_steps:
            raise _horizon(it)
        idx = idx_all[active]
        u1, u2 = _step_uniforms(seed, stream_base, idx, blk[idx])
        dt = np.maximum(theta * (v[idx] - a) / c, dt_floor)
        inc = (c0 * dt) ** (1.0 / alpha) * stable_increment_std(alpha, u1, -np.log(u2))
        hit = v[idx] - c * dt <= a
        hi = idx[hit]
        crossed[hi] = 1
        tau[hi] = t[hi] + (v[hi] - a) / c
        active[hi] = False
        ri = idx[~hit]
        v[ri] = v[ri] - c * dt[~hit] + inc[~hit]
        t[ri] += dt[~hit]
        blk[idx] += np.uint64(1)
        steps[idx] += 1
        esc = v[ri] >= x_esc
        active[ri[esc]] = False
    return crossed, tau, steps


def _phi_stable(v, alpha, c0, kappa, beta):
    return v ** (alpha - beta) / (kappa * c0 * (beta - alpha))


def _phi_table(v, logx, logv):
    return np.exp(np.interp(np.log(v), logx, logv))


def stable_eta_batch(seed, stream_base, n, alpha, c0, kappa, beta, x0, q_step,
                     c1, margin, tail_tol, phi_cap, t_grid, add_mean_residual,
                     max_steps):
    """Perpetual integral of 1/R along a stable subordinator path.

    Pass 1 accumulates trapezoid charges dt*(R(v)^-1 + R(v')^-1)/2 on a
    value-geometric grid until margin*c1*phi(v) <= tail_tol*eta and
    phi(v) <= phi_cap.  Pass 2 replays the same stream to read off the path
    value where eta crosses each lookback target (no storage).
    Returns (eta, vend, steps, budget uint8, X[n, len(t_grid)]).
    """
    t_grid = np.asarray(t_grid, float)

    def phi(v):
        return _phi_stable(v, alpha, c0, kappa, beta)

    def run(nsteps=None, targets=None):
        idx_all = np.arange(n)
        v = np.full(n, float(x0))
        eta = np.zeros(n)
        blk = np.zeros(n, np.uint64)
        steps = np.zeros(n, np.int64)
        budget = np.zeros(n, np.uint8)
        X = np.full((n, t_grid.size), np.nan)
        replay = nsteps is not None
        active = np.ones(n, bool)
        while active.any():
            idx = idx_all[active]
            u1, u2 = _step_uniforms(seed, stream_base, idx, blk[idx])
            s_t = q_step * v[idx]
            dt = (s_t ** alpha) / c0
            inc = s_t * stable_increment_std(alpha, u1, -np.log(u2))
            nv = v[idx] + inc
            neweta = eta[idx] + dt * 0.5 * (v[idx] ** -beta + nv ** -beta) / kappa
            if replay:
                for j in range(t_grid.size):
                    cr = (eta[idx] < targets[idx, j]) & (neweta >= targets[idx, j])
                    X[idx[cr], j] = v[idx][cr]
            eta[idx] = neweta
            v[idx] = nv
            blk[idx] += np.uint64(1)
            steps[idx] += 1
            if replay:
                active[idx] = steps[idx] < nsteps[idx]
            else:
                pv = phi(nv)
                done = (margin * c1 * pv <= tail_tol * neweta) & (pv <= phi_cap)
                over = steps[idx] >= max_steps
                budget[idx[over & ~done]] = 1
                active[idx[done | over]] = False
        return eta, v, steps, budget, X

    eta, vend, nsteps, budget, _ = run()
    if t_grid.size == 0:
        return eta, vend, nsteps, budget, np.empty((n, 0))
    eta_est = eta + (c1 * phi(vend) if add_mean_residual else 0.0)
    targets = eta_est[:, None] - t_grid[None, :]
    _, _, _, _, X = run(nsteps, targets)
    X[np.isnan(X)] = x0
    return eta, vend, nsteps, budget, X


def cpp_eta_batch(seed, stream_base, n, rate, jump_kind, jump_params,
                  jump_logu, jump_logz, kappa, beta, x0, phi_logx, phi_logv,
                  c1, margin, tail_tol, phi_cap, t_grid, add_mean_residual,
                  max_events):
    """Perpetual integral of 1/R along a compound-Poisson subordinator path.

    Charges dt/R(v) are exact (the value is constant between jumps); phi is
    supplied as a log-log table.  Same two-pass scheme as stable_eta_batch.
    """
    t_grid = np.asarray(t_grid, float)

    def phi(v):
        return _phi_table(v, phi_logx, phi_logv)

    def run(nsteps=None, targets=None):
        idx_all = np.arange(n)
        v = np.full(n, float(x0))
        eta = np.zeros(n)
        blk = np.zeros(n, np.uint64)
        steps = np.zeros(n, np.int64)
        budget = np.zeros(n, np.uint8)
        X = np.full((n, t_grid.size), np.nan)
        replay = nsteps is not None
        active = np.ones(n, bool)
        while active.any():
            idx = idx_all[active]
            u1, u2 = _step_uniforms(seed, stream_base, idx, blk[idx])
            dt = -np.log(u1) / rate
            neweta = eta[idx] + dt / (kappa * v[idx] ** beta)
            if replay:
                for j in range(t_grid.size):
                    cr = (eta[idx] < targets[idx, j]) & (neweta >= targets[idx, j])
                    X[idx[cr], j] = v[idx][cr]
            nv = v[idx] + _jump_sizes(jump_kind, jump_params, jump_logu, jump_logz, u2)
            eta[idx] = neweta
            v[idx] = nv
            blk[idx] += np.uint64(1)
            steps[idx] += 1
            if replay:
                active[idx] = steps[idx] < nsteps[idx]
            else:
                pv = phi(nv)
                done = (margin * c1 * pv <= tail_tol * neweta) & (pv <= phi_cap)
                over = steps[idx] >= max_events
                budget[idx[over & ~done]] = 1
                active[idx[done | over]] = False
        return eta, v, steps, budget, X

    eta, vend, nsteps, budget, _ = run()
    if t_grid.size == 0:
        return eta, vend, nsteps, budget, np.empty((n, 0))
    eta_est = eta + (c1 * phi(vend) if add_mean_residual else 0.0)
    targets = eta_est[:, None] - t_grid[None, :]
    _, _, _, _, X = run(nsteps, targets)
    X[np.isnan(X)] = x0
    return eta, vend, nsteps, budget, X


def _horizon(it):
    from ..errors import HorizonError
    return HorizonError(f"path simulation exceeded {it - 1} steps")
