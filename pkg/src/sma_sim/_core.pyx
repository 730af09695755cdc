# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernel; mirrors ``_core_py.run_plant`` operation for operation."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, M_PI

cnp.import_array()


cdef inline double _clip01(double s) noexcept nogil:
    if s < 0.0:
        return 0.0
    if s > 1.0:
        return 1.0
    return s


cdef inline double _heat_prog(double T, double As, double Af) noexcept nogil:
    cdef double s = _clip01((T - As) / (Af - As))
    return 0.5 * (1.0 - cos(M_PI * s))


cdef inline double _cool_prog(double T, double Ms, double Mf) noexcept nogil:
    cdef double s = _clip01((Ms - T) / (Ms - Mf))
    return 0.5 * (1.0 - cos(M_PI * s))


def run_plant(volts, double dt, double resistance, double heat_capacity, double conductance,
              double T_amb, bint two_node, double gap, double wall, double chamber_capacity,
              double Tw, double Tc, double Mf, double Ms, double As, double Af,
              double xi, int branch, double xi_b, double T_b, double T_ref, double deadband,
              double stroke, double bias):
    cdef const double[::1] vv = np.ascontiguousarray(volts, dtype=np.float64)
    cdef Py_ssize_t n = vv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] power = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tw_out = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tc_out = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xi_out = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] disp_out = np.empty(n)
    cdef double[::1] pw = power
    cdef double[::1] two = tw_out
    cdef double[::1] tco = tc_out
    cdef double[::1] xio = xi_out
    cdef double[::1] dso = disp_out

    cdef double cw = 0.0, cc = 0.0, i00 = 0.0, i01 = 0.0, i10 = 0.0, i11 = 0.0
    cdef double m00, m01, m10, m11, det, wall_amb = 0.0, decay = 0.0
    cdef double v, p, d, target, g_b, r0, r1, t_ss
    cdef int trend
    cdef Py_ssize_t k

    if two_node:
        cw = heat_capacity / dt
        cc = chamber_capacity / dt
        m00 = cw + gap
        m01 = -gap
        m10 = -gap
        m11 = cc + gap + wall
        det = m00 * m11 - m01 * m10
        i00 = m11 / det
        i01 = -m01 / det
        i10 = -m10 / det
        i11 = m00 / det
        wall_amb = wall * T_amb
    else:
        decay = exp(-dt * conductance / heat_capacity)

    with nogil:
        for k in range(n):
            v = vv[k]
            p = v * v / resistance
            pw[k] = p
            two[k] = Tw
            tco[k] = Tc

            if T_ref != T_ref:
                T_ref = Tw
            else:
                d = Tw - T_ref
                if d > deadband:
                    trend = 1
                elif d < -deadband:
                    trend = 2
                else:
                    trend = 0
                if trend != 0:
                    if trend != branch:
                        branch = trend
                        xi_b = xi
                        T_b = T_ref
                    T_ref = Tw
                if branch == 1:
                    if Tw >= Af:
                        target = 0.0
                    else:
                        g_b = _heat_prog(T_b, As, Af)
                        if g_b < 1.0:
                            target = xi_b * (1.0 - _heat_prog(Tw, As, Af)) / (1.0 - g_b)
                        else:
                            target = 0.0
                    if target < xi:
                        xi = target
                elif branch == 2:
                    if Tw <= Mf:
                        target = 1.0
                    else:
                        g_b = _cool_prog(T_b, Ms, Mf)
                        if g_b < 1.0:
                            target = xi_b + (1.0 - xi_b) * (_cool_prog(Tw, Ms, Mf) - g_b) / (1.0 - g_b)
                        else:
                            target = 1.0
                    if target > xi:
                        xi = target
                xi = _clip01(xi)
            xio[k] = xi
            dso[k] = bias + stroke * (1.0 - xi)

            if two_node:
                r0 = cw * Tw + p
                r1 = cc * Tc + wall_amb
                Tw = i00 * r0 + i01 * r1
                Tc = i10 * r0 + i11 * r1
            else:
                t_ss = T_amb + p / conductance
                Tw = t_ss + (Tw - t_ss) * decay

    return power, tw_out, tc_out, xi_out, disp_out, (Tw, Tc, xi, branch, xi_b, T_b, T_ref)
