#!/usr/bin/env python3
"""Convergence-order study for the repeated-cycle product.

Prints the deviation of the n-cycle product from the effective
exponential along an n-doubling ladder, then the residual after
subtracting the first-order correction, with fitted log-log orders.
Demonstrates that the correction removes the leading 1/n term.
"""

from resetctrl import bloch_density, build_oscillator_qubit, qubit_qubit_model, sin_squared
from resetctrl.analysis import chernoff_deviation, default_probes, fit_order, omega1_super
from resetctrl.generators import phi1_super, phi2_super


def main():
    gen = build_oscillator_qubit(qubit_qubit_model(1.0, 1.0, (1.0, 0.0, 0.0), sin_squared(2.0)))
    rho_a = bloch_density((0.6, 0.0, 0.5))
    t = 1.0
    ns = [16, 32, 64, 128, 256, 512]
    probes = default_probes(2)

    devs = [chernoff_deviation(gen, rho_a, t, n, probes=probes) for n in ns]
    omega1 = omega1_super(phi1_super(gen, rho_a), phi2_super(gen, rho_a), t)
    resids = [
        chernoff_deviation(gen, rho_a, t, n, probes=probes, first_order_correction=omega1)
        for n in ns
    ]

    print(f"{'n':>6} {'deviation':>14} {'after correction':>18}")
    for n, d, r in zip(ns, devs, resids):
        print(f"{n:>6} {d:>14.6e} {r:>18.6e}")
    print(f"fitted order, raw:       {fit_order(ns, devs).fitted_order:+.3f}")
    print(f"fitted order, corrected: {fit_order(ns, resids).fitted_order:+.3f}")


if __name__ == "__main__":
    main()
