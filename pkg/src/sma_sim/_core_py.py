"""Pure-Python simulation kernel; reference for the compiled ``_core`` module.

Both kernels must stay operation-for-operation identical so that their traces
agree to the last bit on the same platform.
"""

import math

import numpy as np


def _heat_prog(T, As, Af):
    s = (T - As) / (Af - As)
    s = min(max(s, 0.0), 1.0)
    return 0.5 * (1.0 - math.cos(math.pi * s))


def _cool_prog(T, Ms, Mf):
    s = (Ms - T) / (Ms - Mf)
    s = min(max(s, 0.0), 1.0)
    return 0.5 * (1.0 - math.cos(math.pi * s))


def run_plant(volts, dt, resistance, heat_capacity, conductance, T_amb,
              two_node, gap, wall, chamber_capacity, Tw, Tc,
              Mf, Ms, As, Af, xi, branch, xi_b, T_b, T_ref, deadband,
              stroke, bias):
    """Simulate drive -> power -> temperature -> phase -> displacement.

    Columns hold the state at each sample instant (before that sample's
    power is applied). ``T_ref`` is NaN when no trend reference exists yet;
    ``branch`` uses 0 idle, 1 heating, 2 cooling. Returns the five columns and
    the final state tuple ``(Tw, Tc, xi, branch, xi_b, T_b, T_ref)``.
    """
    volts = np.ascontiguousarray(volts, dtype=np.float64)
    n = volts.shape[0]
    power = np.empty(n)
    tw_out = np.empty(n)
    tc_out = np.empty(n)
    xi_out = np.empty(n)
    disp_out = np.empty(n)

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
        decay = 0.0
    else:
        decay = math.exp(-dt * conductance / heat_capacity)

    for k in range(n):
        v = volts[k]
        p = v * v / resistance
        power[k] = p
        tw_out[k] = Tw
        tc_out[k] = Tc

        # phase kinetics on the current wire temperature
        if T_ref != T_ref:
            T_ref = Tw
        else:
            d = Tw - T_ref
            trend = 1 if d > deadband else (2 if d < -deadband else 0)
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
                    target = xi_b * (1.0 - _heat_prog(Tw, As, Af)) / (1.0 - g_b) if g_b < 1.0 else 0.0
                xi = min(xi, target)
            elif branch == 2:
                if Tw <= Mf:
                    target = 1.0
                else:
                    g_b = _cool_prog(T_b, Ms, Mf)
                    target = xi_b + (1.0 - xi_b) * (_cool_prog(Tw, Ms, Mf) - g_b) / (1.0 - g_b) if g_b < 1.0 else 1.0
                xi = max(xi, target)
            xi = min(max(xi, 0.0), 1.0)
        xi_out[k] = xi
        disp_out[k] = bias + stroke * (1.0 - xi)

        # thermal step over [t_k, t_k + dt)
        if two_node:
            r0 = cw * Tw + p
            r1 = cc * Tc + wall_amb
            Tw = i00 * r0 + i01 * r1
            Tc = i10 * r0 + i11 * r1
        else:
            t_ss = T_amb + p / conductance
            Tw = t_ss + (Tw - t_ss) * decay

    return power, tw_out, tc_out, xi_out, disp_out, (Tw, Tc, xi, branch, xi_b, T_b, T_ref)
