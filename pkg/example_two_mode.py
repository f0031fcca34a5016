#!/usr/bin/env python
"""
Example script demonstrating the uniformize library on the two-mode model.
It evolves the Hartree equation, compares eps-solutions against it and
checks the spectral gap of H^(n) against the Hartree frequency.
"""
import numpy as np

from uniformize import (
    TimeGrid,
    build_two_mode,
    convergence_study,
    gap_study,
    hartree_evolve,
)


def main():
    g = 1.0
    spec = build_two_mode(g)
    phi = np.array([0.6, 0.8j]) / np.sqrt(2.0)
    grid = TimeGrid(0.0, 1.0, 0.01, store_every=25)

    print(f"Evolving the Hartree equation for g={g}...")
    trajectory = hartree_evolve(spec, phi, grid)
    for t, state, gamma in zip(trajectory.times, trajectory.states, trajectory.gammas):
        print(f"  t={t:.2f}  |psi_0|^2={abs(state[0]) ** 2:.6f}  gamma={gamma:.10f}")
    print(f"Max norm drift: {trajectory.max_norm_drift():.2e}")

    print("\nComparing eps-solutions with the Hartree solution...")
    study = convergence_study(spec, phi, [0.2, 0.1, 0.05], grid, n_max=40, threads=3)
    final_t = max(row[2] for row in study.rows)
    for eps, n_max, t, error, tail in study.rows:
        if t == final_t:
            print(f"  eps={eps:<5g} error={error:.3e}  tail={tail:.1e}")
    print(f"Monotone: {study.monotone}, orders: {[round(v, 2) for v in study.orders]}")

    print("\nSpectral gaps at eps = nu/n against omega = -1 + g nu...")
    for n, eps, _, _, gap, omega, diff in gap_study(spec, 1.0, [2, 4, 8]):
        print(f"  n={n}  gap={gap:.10f}  omega={omega:.10f}  diff={diff:.1e}")


if __name__ == "__main__":
    main()
