"""Compiled trial loops.

Every kernel draws standard normals from a tuple of ``numpy.random.Generator``
objects, one per sensor, in the fixed order sensor 0..K-1 within each step. The
increment of sensor ``i`` is ``sign * (drift[i] + scale[i] * z)``; ``sign`` is
+1 under H1 and -1 under H0, so a trial replayed under the other hypothesis is
its exact mirror image. The pure-Python path in :mod:`dsprt.simkernel` replays
the same arithmetic step for step.
"""
import numpy as np
from numba import njit

# per-sensor output columns of dsprt_trial
S_EMITS = 0          # m_T: emissions at or before T
S_ONES = 1           # bits equal to 1 among them
S_ABS_ETA = 2        # sum of |overshoot| over those emissions
S_LAST_EMIT = 3      # step index of the last emission (sum of periods)
S_FIRST_ABS_ETA = 4  # |overshoot| of the first cycle
S_FIRST_BIT = 5
S_FIRST_PERIOD = 6
S_PEND_ABS_ETA = 7   # cycle in progress at T, completed after T
S_PEND_BIT = 8
S_PEND_PERIOD = 9
S_U = 10             # exact local statistic at T
S_APPLIED = 11       # messages actually applied by the fusion center
N_SENSOR_COLS = 12


@njit(cache=True, nogil=True)
def _complete_cycle(rng, sign, drift, scale, lo, hi, accum, since, cap):
    # finish the excursion in progress; returns (|eta|, bit, period) or bit -1
    a = accum
    n = since
    while n < cap:
        z = rng.standard_normal()
        a += sign * (drift + scale * z)
        n += 1
        if a >= hi:
            return a - hi, 1, n
        if a <= -lo:
            return -(a + lo), 0, n
    return 0.0, -1, n


@njit(cache=True, nogil=True)
def dsprt_trial(rngs, sign, drift, scale, lo, hi, w_lo, w_hi, a_t, b_t,
                max_steps, complete_pending, track):
    """Run one D-SPRT trial.

    Returns (decision, steps, u, u_tilde, max|u - u_tilde|, max|ell|, per_sensor)
    with decision -1 when ``max_steps`` is reached first.
    """
    K = lo.shape[0]
    out = np.zeros((K, N_SENSOR_COLS))
    accum = np.zeros(K)
    since = np.zeros(K, np.int64)
    bits = np.empty(K, np.int64)
    u = 0.0
    ut = 0.0
    max_dev = 0.0
    max_inc = 0.0
    decision = -1
    step = 0
    while step < max_steps:
        step += 1
        for i in range(K):
            z = rngs[i].standard_normal()
            inc = sign * (drift[i] + scale[i] * z)
            u += inc
            out[i, S_U] += inc
            if track:
                ai = abs(inc)
                if ai > max_inc:
                    max_inc = ai
            a = accum[i] + inc
            since[i] += 1
            if a >= hi[i]:
                bits[i] = 1
                eta = a - hi[i]
            elif a <= -lo[i]:
                bits[i] = 0
                eta = -(a + lo[i])
            else:
                accum[i] = a
                bits[i] = -1
                continue
            if out[i, S_EMITS] == 0:
                out[i, S_FIRST_ABS_ETA] = eta
                out[i, S_FIRST_BIT] = bits[i]
                out[i, S_FIRST_PERIOD] = since[i]
            out[i, S_EMITS] += 1
            out[i, S_ONES] += bits[i]
            out[i, S_ABS_ETA] += eta
            out[i, S_LAST_EMIT] = step
            accum[i] = 0.0
            since[i] = 0
        for i in range(K):
            if bits[i] < 0:
                continue
            if bits[i] == 1:
                ut += w_hi[i]
            else:
                ut -= w_lo[i]
            out[i, S_APPLIED] += 1
            if ut >= b_t:
                decision = 1
                break
            if ut <= -a_t:
                decision = 0
                break
        if track:
            d = abs(u - ut)
            if d > max_dev:
                max_dev = d
        if decision >= 0:
            break
    if complete_pending and decision >= 0:
        for i in range(K):
            eta, bit, period = _complete_cycle(rngs[i], sign, drift[i], scale[i], lo[i],
                                               hi[i], accum[i], since[i], max_steps)
            out[i, S_PEND_ABS_ETA] = eta
            out[i, S_PEND_BIT] = bit
            out[i, S_PEND_PERIOD] = period
            if out[i, S_EMITS] == 0:
                out[i, S_FIRST_ABS_ETA] = eta
                out[i, S_FIRST_BIT] = bit
                out[i, S_FIRST_PERIOD] = period
    return decision, step, u, ut, max_dev, max_inc, out


@njit(cache=True, nogil=True)
def sprt_trial(rngs, sign, drift, scale, a, b, max_steps):
    """Centralized SPRT on the summed increments; returns (decision, steps, u)."""
    K = drift.shape[0]
    u = 0.0
    step = 0
    while step < max_steps:
        step += 1
        for i in range(K):
            z = rngs[i].standard_normal()
            u += sign * (drift[i] + scale[i] * z)
        if u >= b:
            return 1, step, u
        if u <= -a:
            return 0, step, u
    return -1, step, u


@njit(cache=True, nogil=True)
def exit_cycles(rng, sign, drift, scale, lo, hi, n, cap):
    """``n`` independent single-cycle local SPRTs.

    Returns bits (-1 if ``cap`` steps pass without exit), signed overshoots
    and periods in steps.
    """
    bits = np.empty(n, np.int8)
    eta = np.empty(n)
    period = np.empty(n, np.int64)
    for k in range(n):
        a = 0.0
        m = 0
        bits[k] = -1
        eta[k] = 0.0
        while m < cap:
            z = rng.standard_normal()
            a += sign * (drift + scale * z)
            m += 1
            if a >= hi:
                bits[k] = 1
                eta[k] = a - hi
                break
            if a <= -lo:
                bits[k] = 0
                eta[k] = a + lo
                break
        period[k] = m
    return bits, eta, period
