"""Compiled vs pure-Python simulation kernel on a 32 s, 1 kHz PWM drive.

Run: python3 benchmarks/bench_core.py [--repeat N]
"""

import argparse
import math
import timeit

import numpy as np

from sma_sim import _core_py
from sma_sim.kinetics import TREND_DEADBAND_C, KineticsSpec
from sma_sim.presets import DEFAULT_CHAMBER, H_AIR_W_M2K
from sma_sim.signals import PwmSpec, generate_pwm
from sma_sim.thermal import WireSpec

try:
    from sma_sim import _core
except ImportError:
    _core = None


def kernel_args(two_node: bool):
    wire, kin = WireSpec(), KineticsSpec()
    volts = generate_pwm(PwmSpec(1.0, 0.07, 2.7)).samples
    ch = DEFAULT_CHAMBER
    return (
        volts, 1e-3, wire.resistance_ohm, wire.heat_capacity_J_K, H_AIR_W_M2K * wire.surface_area_m2, 23.0,
        two_node, ch.gap_conductance_W_K, ch.wall_conductance_W_K, ch.chamber_heat_capacity_J_K,
        23.0, 23.0, kin.M_f_C, kin.M_s_C, kin.A_s_C, kin.A_f_C,
        1.0, 0, 1.0, -math.inf, math.nan, TREND_DEADBAND_C, 2.4e-3, 0.0,
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _core_py.run_plant)]
    if _core is not None:
        backends.append(("compiled", _core.run_plant))
    else:
        print("compiled kernel not built; only the Python fallback is timed")
    print(f"{'case':<12}{'backend':<10}{'best ms':>10}{'speedup':>10}")
    for case, two_node in (("single-node", False), ("two-node", True)):
        a = kernel_args(two_node)
        ref = None
        times = {}
        for name, fn in backends:
            number = 1 if name == "python" else 20
            t = min(timeit.repeat(lambda: fn(*a), number=number, repeat=args.repeat)) / number
            times[name] = t
            out = fn(*a)
            if ref is None:
                ref = out
            else:
                same = all(np.array_equal(x, y) for x, y in zip(ref[:5], out[:5]))
                print(f"{'':<12}parity with python: {'bit-identical' if same else 'DIFFERENT'}")
        for name in times:
            print(f"{case:<12}{name:<10}{times[name] * 1e3:>10.3f}{times['python'] / times[name]:>9.1f}x")


if __name__ == "__main__":
    main()
