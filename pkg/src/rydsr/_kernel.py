"""Compiled inner loops: collective-rate solve and the adaptive integrator.

Everything here works on plain floats and arrays so numba can compile it.
Failures are reported through integer status codes; the Python wrappers in
:mod:`rydsr.dynamics` turn them into exceptions.
"""

import math

import numpy as np
from numba import njit

EXP_CAP = 700.0
HUGE = 1e300
LOG_HUGE = math.log(HUGE)
RESIDUAL_TOL = 1e-10
NEWTON_WIDTH = 1e3
SERIES_WIDTH = 1e-6
SERIES_RADIUS = 0.25

OK = 0
ERR_POSITIVE_AT_ZERO = 1
ERR_NO_BRACKET = 2
ERR_NAN = 3
ERR_STALLED = 4
ERR_STEP_UNDERFLOW = 5
ERR_MAX_STEPS = 6


@njit(cache=True)
def dicke_I(zeta, rho):
    xi = complex(zeta, rho)
    if abs(xi) < SERIES_RADIUS:
        # sum_k xi^k / (k! (k + 2))
        total = 0.0 + 0.0j
        term = 1.0 + 0.0j
        for k in range(30):
            c = term / (k + 2)
            total += c
            if abs(c) < 1e-17 * abs(total):
                break
            term *= xi / (k + 1)
        return abs(total) ** 2
    if 2.0 * zeta > EXP_CAP:
        log_val = 2.0 * (zeta + math.log(abs(xi - 1.0)) - 2.0 * math.log(abs(xi)))
        if log_val > LOG_HUGE:
            return HUGE
        return math.exp(log_val)
    val = (np.exp(xi) * (xi - 1.0) + 1.0) / (xi * xi)
    return min(abs(val) ** 2, HUGE)


@njit(cache=True)
def rate_terms(G, rho_ee, rho_egge, gamma, C, rho):
    """Return ``(f(G), Gammabar, zeta, I)`` clamped to ±1e300."""
    q = gamma / (G + 0.5 * gamma)
    x = 2.0 * rho_ee - 1.0
    cr_q = C * rho * q
    zeta = 0.5 * cr_q * x
    z = cr_q * x
    # rho/x (e^z - 1) = rho cr_q (e^z - 1)/z, series near z = 0
    if abs(z) < SERIES_WIDTH:
        t1 = gamma * rho_ee * cr_q * (1.0 + z / 2.0 + z * z / 6.0)
    elif z > EXP_CAP:
        t1 = HUGE
    else:
        t1 = gamma * rho_ee * cr_q * (math.expm1(z) / z)
    I_val = dicke_I(zeta, rho)
    common = gamma * q * I_val
    t2 = 0.0
    if rho_egge != 0.0:
        t2 = 2.0 * C * C * rho**4 * common * rho_egge
    Gb = 3.0 * C * rho * common * rho_ee + t2
    f = t1 + t2
    if f > HUGE:
        f = HUGE
    elif f < -HUGE:
        f = -HUGE
    return f, Gb, zeta, I_val


@njit(cache=True)
def residual(G, rho_ee, rho_egge, gamma, C, rho):
    return G - rate_terms(G, rho_ee, rho_egge, gamma, C, rho)[0]


@njit(cache=True)
def solve_gamma(rho_ee, rho_egge, gamma, C, rho, hint):
    """Self-consistent Gamma by bracketing then damped Newton.

    ``hint <= 0`` means no warm start.  Returns ``(G, residual, status)``.
    """
    tol = RESIDUAL_TOL * gamma
    r0 = residual(0.0, rho_ee, rho_egge, gamma, C, rho)
    if math.isnan(r0):
        return 0.0, r0, ERR_NAN
    if r0 >= -tol:
        if r0 > tol:
            return 0.0, r0, ERR_POSITIVE_AT_ZERO
        return 0.0, r0, OK

    lo = 0.0
    r_lo = r0
    hi = 0.0
    r_hi = 0.0
    have = False
    if hint > 0.0:
        a = hint * (1.0 - 1e-3)
        b = hint * (1.0 + 1e-3) + tol
        ra = residual(a, rho_ee, rho_egge, gamma, C, rho)
        rb = residual(b, rho_ee, rho_egge, gamma, C, rho)
        if ra < 0.0 and rb > 0.0:
            lo, r_lo, hi, r_hi = a, ra, b, rb
            have = True
    if not have:
        # smallest Gamma with zeta below 1e-3, then widen until the residual is positive
        hi = max(gamma, 500.0 * C * rho * gamma * abs(2.0 * rho_ee - 1.0) - 0.5 * gamma)
        r_hi = residual(hi, rho_ee, rho_egge, gamma, C, rho)
        expansions = 0
        while r_hi <= 0.0:
            lo = hi
            r_lo = r_hi
            hi *= 4.0
            r_hi = residual(hi, rho_ee, rho_egge, gamma, C, rho)
            expansions += 1
            if expansions > 200 or math.isnan(r_hi):
                return hi, r_hi, ERR_NO_BRACKET

    while hi - lo > NEWTON_WIDTH * gamma:
        mid = 0.5 * (lo + hi)
        r_mid = residual(mid, rho_ee, rho_egge, gamma, C, rho)
        if r_mid < 0.0:
            lo = mid
            r_lo = r_mid
        else:
            hi = mid
            r_hi = r_mid

    G = lo - r_lo * (hi - lo) / (r_hi - r_lo)
    if not (lo < G < hi):
        G = 0.5 * (lo + hi)
    r = residual(G, rho_ee, rho_egge, gamma, C, rho)
    for _ in range(200):
        if abs(r) <= tol:
            return G, r, OK
        if r < 0.0:
            lo = G
            r_lo = r
        else:
            hi = G
            r_hi = r
        dG = 1e-7 * max(G, gamma)
        slope = (residual(G + dG, rho_ee, rho_egge, gamma, C, rho) - r) / dG
        G_new = -1.0
        r_new = 0.0
        if slope > 0.0:
            step = -r / slope
            damping = 1.0
            while damping > 1e-3:
                trial = G + damping * step
                if lo < trial < hi:
                    r_trial = residual(trial, rho_ee, rho_egge, gamma, C, rho)
                    if abs(r_trial) < abs(r):
                        G_new = trial
                        r_new = r_trial
                        break
                damping *= 0.5
        if G_new < 0.0:
            G_new = 0.5 * (lo + hi)
            r_new = residual(G_new, rho_ee, rho_egge, gamma, C, rho)
        done = G_new == G or hi - lo <= 4.0 * (np.nextafter(hi, np.inf) - hi)
        G = G_new
        r = r_new
        if done:
            break
    if abs(r) <= tol:
        return G, r, OK
    # root pinned to a few ulp: the residual is rounding noise of f
    if hi - lo <= 4.0 * (np.nextafter(hi, np.inf) - hi) and r_lo < 0.0 < r_hi:
        return G, r, OK
    return G, r, ERR_STALLED


@njit(cache=True)
def derivatives(y, gamma, C, rho, single_atom, hint, out):
    """Fill ``out`` with d/dt of (rho_ee, m, rho_egge, emitted); return (G, Gb, zeta, I, status)."""
    ree = y[0]
    m = y[1]
    rg = 0.0 if single_atom else y[2]
    G, res, status = solve_gamma(ree, rg, gamma, C, rho, hint)
    f, Gb, zeta, I_val = rate_terms(G, ree, rg, gamma, C, rho)
    k = 2.0 * G + gamma
    d_ree = -k * ree + G
    out[0] = d_ree
    out[1] = -2.0 * k * m - 2.0 * gamma * (2.0 * ree - 1.0) + 8.0 * Gb * rg
    out[2] = 0.0 if single_atom else -k * rg + Gb * m
    out[3] = -d_ree
    return G, Gb, zeta, I_val, status


# Dormand-Prince 5(4) tableau
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0


@njit(cache=True)
def integrate(y0, t0, t_end, gamma, C, rho, rtol, atol, phase1_cap, stop_population,
              single_atom, max_steps):
    """Adaptive Dormand-Prince integration recording every accepted step.

    Until ``rho_ee`` first drops below 1/2 the step is limited to
    ``phase1_cap``.  Returns ``(t, Y, rates, n, status, t_fail)`` where
    ``rates[:, :]`` holds (Gamma, Gammabar, zeta, I) at each sample and
    ``status`` is 0 (reached t_end), 10 (population stop) or an error code.
    """
    cap = 4096
    T = np.empty(cap)
    Y = np.empty((cap, 4))
    R = np.empty((cap, 4))
    y = y0.copy()
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    k5 = np.empty(4)
    k6 = np.empty(4)
    k7 = np.empty(4)
    tmp = np.empty(4)
    y_new = np.empty(4)

    G, Gb, z, Iv, st = derivatives(y, gamma, C, rho, single_atom, -1.0, k1)
    if st != OK:
        return T[:0], Y[:0], R[:0], 0, st, t0
    T[0] = t0
    Y[0, :] = y
    R[0, 0] = G
    R[0, 1] = Gb
    R[0, 2] = z
    R[0, 3] = Iv
    n = 1
    hint = G

    t = t0
    capped = True
    h = min(phase1_cap, 0.01 * (t_end - t0))
    steps = 0
    status = 0
    while t < t_end:
        steps += 1
        if steps > max_steps:
            return T[:n], Y[:n], R[:n], n, ERR_MAX_STEPS, t
        if capped and h > phase1_cap:
            h = phase1_cap
        if t + h > t_end:
            h = t_end - t
        if h <= 1e-14 * max(abs(t), 1.0 / gamma):
            return T[:n], Y[:n], R[:n], n, ERR_STEP_UNDERFLOW, t

        for i in range(4):
            tmp[i] = y[i] + h * A21 * k1[i]
        _, _, _, _, st = derivatives(tmp, gamma, C, rho, single_atom, hint, k2)
        if st == OK:
            for i in range(4):
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            _, _, _, _, st = derivatives(tmp, gamma, C, rho, single_atom, hint, k3)
        if st == OK:
            for i in range(4):
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            _, _, _, _, st = derivatives(tmp, gamma, C, rho, single_atom, hint, k4)
        if st == OK:
            for i in range(4):
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            _, _, _, _, st = derivatives(tmp, gamma, C, rho, single_atom, hint, k5)
        if st == OK:
            for i in range(4):
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                                     + A65 * k5[i])
            _, _, _, _, st = derivatives(tmp, gamma, C, rho, single_atom, hint, k6)
        if st == OK:
            for i in range(4):
                y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i]
                                       + B6 * k6[i])
            G, Gb, z, Iv, st = derivatives(y_new, gamma, C, rho, single_atom, hint, k7)
        if st != OK:
            # a trial stage left the physical region; retry smaller
            h *= 0.25
            continue

        err = 0.0
        for i in range(4):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / 4.0)
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue

        t += h
        for i in range(4):
            y[i] = y_new[i]
            k1[i] = k7[i]
        hint = G
        if n == cap:
            cap *= 2
            T2 = np.empty(cap)
            Y2 = np.empty((cap, 4))
            R2 = np.empty((cap, 4))
            T2[:n] = T[:n]
            Y2[:n] = Y[:n]
            R2[:n] = R[:n]
            T, Y, R = T2, Y2, R2
        T[n] = t
        Y[n, :] = y
        R[n, 0] = G
        R[n, 1] = Gb
        R[n, 2] = z
        R[n, 3] = Iv
        n += 1
        if y[0] < stop_population:
            status = 10
            break
        if capped and y[0] < 0.5:
            capped = False
        factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        h *= factor
    return T[:n], Y[:n], R[:n], n, status, t
