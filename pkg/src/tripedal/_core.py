"""Jitted kernels: dynamics right-hand side and adaptive RK45 driver.

The public, documented entry points live in :mod:`tripedal.dynamics`; this
module holds the scalar hot-path versions compiled with numba.  The
regularized friction makes the ODE stiff whenever a contact creeps below
the slip threshold, so the integrator has to survive step sizes around
``eps / g`` — a compiled loop keeps full gait-map sweeps in seconds.

Parameter vector layout used by every kernel (``p``, float64[16]):

==  =============================================
 0  body mass M (kg)
 1  rotational inertia J (kg m^2)
 2  hinge radius R (m)
 3  limb length l (m)
 4  friction coefficient mu
 5  weight M*g (N)
 6  creep velocity eps (m/s)
 7   amplitude a_1 (rad)
 8   amplitude a_2 (rad)
 9   amplitude a_3 (rad)
10  phase psi_1 (rad)
11  phase psi_2 (rad)
12  phase psi_3 (rad)
13  2*pi*f (rad/s)
14  drag force x (N)
15  drag force y (N)
==  =============================================

State vector: ``y = [x, y, vx, vy, xi, xi_dot]``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# status codes shared with the wrappers
OK = 0
STEP_UNDERFLOW = 1
DEGENERATE_CONTACTS = 2

MIN_STEP = 1e-12  # s; below this the step size is considered underflowed

_TWO_THIRDS_PI = 2.0 * math.pi / 3.0


@njit(cache=True, nogil=True)
def _rhs(t, y, p, dy):
    """Evaluate the state derivative in place; returns a status code."""
    x = y[0]
    yy = y[1]
    vx = y[2]
    vy = y[3]
    xi = y[4]
    xidot = y[5]

    R = p[2]
    l = p[3]
    mu = p[4]
    weight = p[5]
    eps = p[6]
    w = p[13]

    dx1 = 0.0
    dx2 = 0.0
    dx3 = 0.0
    dy1 = 0.0
    dy2 = 0.0
    dy3 = 0.0
    cvx1 = 0.0
    cvx2 = 0.0
    cvx3 = 0.0
    cvy1 = 0.0
    cvy2 = 0.0
    cvy3 = 0.0

    for i in range(3):
        base = xi + _TWO_THIRDS_PI * i
        arg = w * t + p[10 + i]
        phi = p[7 + i] * math.sin(arg)
        phidot = p[7 + i] * w * math.cos(arg)
        cb = math.cos(base)
        sb = math.sin(base)
        ca = math.cos(base + phi)
        sa = math.sin(base + phi)
        # contact offset from COM and contact velocity
        ox = R * cb + l * ca
        oy = R * sb + l * sa
        cvx = vx - R * xidot * sb - l * (xidot + phidot) * sa
        cvy = vy + R * xidot * cb + l * (xidot + phidot) * ca
        if i == 0:
            dx1 = ox
            dy1 = oy
            cvx1 = cvx
            cvy1 = cvy
        elif i == 1:
            dx2 = ox
            dy2 = oy
            cvx2 = cvx
            cvy2 = cvy
        else:
            dx3 = ox
            dy3 = oy
            cvx3 = cvx
            cvy3 = cvy

    # normal forces from [1 1 1; dx row; dy row] N = [Mg; 0; 0] (Cramer)
    det = (dx2 * dy3 - dx3 * dy2) - (dx1 * dy3 - dx3 * dy1) + (dx1 * dy2 - dx2 * dy1)
    span = R + l
    if abs(det) < 1e-12 * span * span:
        return DEGENERATE_CONTACTS
    n1 = weight * (dx2 * dy3 - dx3 * dy2) / det
    n2 = weight * (dx3 * dy1 - dx1 * dy3) / det
    n3 = weight * (dx1 * dy2 - dx2 * dy1) / det

    # regularized Coulomb friction: -mu*N*v/max(|v|, eps)
    fx = 0.0
    fy = 0.0
    tz = 0.0

    s1 = math.hypot(cvx1, cvy1)
    c1 = -mu * n1 / (s1 if s1 >= eps else eps)
    f1x = c1 * cvx1
    f1y = c1 * cvy1
    fx += f1x
    fy += f1y
    tz += dx1 * f1y - dy1 * f1x

    s2 = math.hypot(cvx2, cvy2)
    c2 = -mu * n2 / (s2 if s2 >= eps else eps)
    f2x = c2 * cvx2
    f2y = c2 * cvy2
    fx += f2x
    fy += f2y
    tz += dx2 * f2y - dy2 * f2x

    s3 = math.hypot(cvx3, cvy3)
    c3 = -mu * n3 / (s3 if s3 >= eps else eps)
    f3x = c3 * cvx3
    f3y = c3 * cvy3
    fx += f3x
    fy += f3y
    tz += dx3 * f3y - dy3 * f3x

    dy[0] = vx
    dy[1] = vy
    dy[2] = (fx + p[14]) / p[0]
    dy[3] = (fy + p[15]) / p[0]
    dy[4] = xidot
    dy[5] = tz / p[1]
    return OK


# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31 = 3.0 / 40.0
_A32 = 9.0 / 40.0
_A41 = 44.0 / 45.0
_A42 = -56.0 / 15.0
_A43 = 32.0 / 9.0
_A51 = 19372.0 / 6561.0
_A52 = -25360.0 / 2187.0
_A53 = 64448.0 / 6561.0
_A54 = -212.0 / 729.0
_A61 = 9017.0 / 3168.0
_A62 = -355.0 / 33.0
_A63 = 46732.0 / 5247.0
_A64 = 49.0 / 176.0
_A65 = -5103.0 / 18656.0
_B1 = 35.0 / 384.0
_B3 = 500.0 / 1113.0
_B4 = 125.0 / 192.0
_B5 = -2187.0 / 6784.0
_B6 = 11.0 / 84.0
# 5th-order minus embedded 4th-order weights (error estimate)
_E1 = 71.0 / 57600.0
_E3 = -71.0 / 16695.0
_E4 = 71.0 / 1920.0
_E5 = -17253.0 / 339200.0
_E6 = 22.0 / 525.0
_E7 = -1.0 / 40.0

_C2 = 1.0 / 5.0
_C3 = 3.0 / 10.0
_C4 = 4.0 / 5.0
_C5 = 8.0 / 9.0


@njit(cache=True, nogil=True)
def _integrate_core(y0, t0, t_end, p, rtol, atol, t_out, y_out):
    """Adaptive Dormand-Prince 5(4) sweep from t0 to t_end.

    Fills ``y_out`` with cubic-Hermite dense samples at ``t_out`` (which
    must start at t0, be increasing and end at t_end).  Returns
    ``(status, n_accepted, n_rejected)``.
    """
    n = y0.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    ystage = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)

    t = t0
    n_out = t_out.shape[0]
    out_idx = 0
    if n_out > 0:
        for j in range(n):
            y_out[0, j] = y[j]
        out_idx = 1

    status = _rhs(t, y, p, k1)
    if status != OK:
        return status, 0, 0

    h = t_end - t0
    if h > 1e-3:
        h = 1e-3
    n_accepted = 0
    n_rejected = 0

    while t < t_end - 1e-14 * (1.0 + abs(t)):
        if h < MIN_STEP:
            return STEP_UNDERFLOW, n_accepted, n_rejected
        if t + h > t_end:
            h = t_end - t

        for j in range(n):
            ystage[j] = y[j] + h * _A21 * k1[j]
        status = _rhs(t + _C2 * h, ystage, p, k2)
        if status != OK:
            return status, n_accepted, n_rejected

        for j in range(n):
            ystage[j] = y[j] + h * (_A31 * k1[j] + _A32 * k2[j])
        status = _rhs(t + _C3 * h, ystage, p, k3)
        if status != OK:
            return status, n_accepted, n_rejected

        for j in range(n):
            ystage[j] = y[j] + h * (_A41 * k1[j] + _A42 * k2[j] + _A43 * k3[j])
        status = _rhs(t + _C4 * h, ystage, p, k4)
        if status != OK:
            return status, n_accepted, n_rejected

        for j in range(n):
            ystage[j] = y[j] + h * (
                _A51 * k1[j] + _A52 * k2[j] + _A53 * k3[j] + _A54 * k4[j]
            )
        status = _rhs(t + _C5 * h, ystage, p, k5)
        if status != OK:
            return status, n_accepted, n_rejected

        for j in range(n):
            ystage[j] = y[j] + h * (
                _A61 * k1[j] + _A62 * k2[j] + _A63 * k3[j] + _A64 * k4[j] + _A65 * k5[j]
            )
        status = _rhs(t + h, ystage, p, k6)
        if status != OK:
            return status, n_accepted, n_rejected

        for j in range(n):
            ynew[j] = y[j] + h * (
                _B1 * k1[j] + _B3 * k3[j] + _B4 * k4[j] + _B5 * k5[j] + _B6 * k6[j]
            )
        status = _rhs(t + h, ynew, p, k7)
        if status != OK:
            return status, n_accepted, n_rejected

        # scaled RMS error of the embedded pair
        err = 0.0
        bad = False
        for j in range(n):
            ej = h * (
                _E1 * k1[j] + _E3 * k3[j] + _E4 * k4[j] + _E5 * k5[j]
                + _E6 * k6[j] + _E7 * k7[j]
            )
            sc = atol + rtol * max(abs(y[j]), abs(ynew[j]))
            r = ej / sc
            err += r * r
            if not math.isfinite(ej):
                bad = True
        err = math.sqrt(err / n)

        if bad:
            h *= 0.1
            n_rejected += 1
            continue

        if err <= 1.0:
            t_new = t + h
            # dense output on (t, t_new] via cubic Hermite
            while out_idx < n_out and t_out[out_idx] <= t_new + 1e-12:
                theta = (t_out[out_idx] - t) / h
                if theta < 0.0:
                    theta = 0.0
                elif theta > 1.0:
                    theta = 1.0
                t2 = theta * theta
                t3 = t2 * theta
                h00 = 2.0 * t3 - 3.0 * t2 + 1.0
                h10 = t3 - 2.0 * t2 + theta
                h01 = -2.0 * t3 + 3.0 * t2
                h11 = t3 - t2
                for j in range(n):
                    y_out[out_idx, j] = (
                        h00 * y[j] + h10 * h * k1[j]
                        + h01 * ynew[j] + h11 * h * k7[j]
                    )
                out_idx += 1
            for j in range(n):
                y[j] = ynew[j]
                k1[j] = k7[j]  # FSAL
            t = t_new
            n_accepted += 1
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h *= factor
        else:
            n_rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)

    # flush any trailing samples (t_end hit within round-off)
    while out_idx < n_out:
        for j in range(n):
            y_out[out_idx, j] = y[j]
        out_idx += 1

    return OK, n_accepted, n_rejected


def pack_params(params, gait, wind_force) -> np.ndarray:
    """Assemble the kernel parameter vector from domain objects.

    ``wind_force`` is the constant world-frame drag force (fx, fy) in N.
    """
    p = np.empty(16)
    p[0] = params.body_mass
    p[1] = params.rot_inertia
    p[2] = params.hinge_radius
    p[3] = params.limb_length
    p[4] = params.friction_mu
    p[5] = params.body_mass * params.gravity
    p[6] = params.creep_velocity
    amps = gait.amplitudes_rad()
    p[7] = amps[0]
    p[8] = amps[1]
    p[9] = amps[2]
    p[10] = gait.phases[0]
    p[11] = gait.phases[1]
    p[12] = gait.phases[2]
    p[13] = 2.0 * math.pi * gait.frequency
    p[14] = wind_force[0]
    p[15] = wind_force[1]
    return p
