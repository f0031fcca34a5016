#!/usr/bin/env python
"""
Example script demonstrating spectral gaps and solitons on a Bose-Hubbard ring.
It locates the Hartree ground state of an attractive ring, compares it with
the gap of the n-particle Hamiltonian and checks the uniform soliton.
"""
import numpy as np

from uniformize import (
    SolitonProblem,
    TimeGrid,
    build_lattice_hartree,
    gap_study,
    generalized_soliton_check,
    hartree_fixed_point,
)
from uniformize.uniformization import on_site_kernel


def main():
    L = 4

    # Weak attraction: the ground state is the uniform one
    g = -1.0
    spec = build_lattice_hartree(L, 1.0, on_site_kernel(L, g))
    print(f"Ring of L={L} sites, g={g}")
    phi, omega = hartree_fixed_point(spec, 1.0)
    print(f"Hartree ground state |phi|^2 per site: {np.round(np.abs(phi) ** 2, 4)}")
    print(f"Hartree frequency omega = {omega:.8f}")
    for n, eps, lam_n, lam_n1, gap, _, diff in gap_study(spec, 1.0, [2, 4, 6], threads=3):
        print(f"  n={n}  eps={eps:.3f}  gap={gap:.8f}  |gap - omega|={diff:.2e}")

    print("\nUniform state as a soliton...")
    report = generalized_soliton_check(SolitonProblem(spec, [], [1.0]), TimeGrid(0.0, 2.0, 0.01))
    print(f"  multiplier {report.multipliers[0]:.8f} (finite differences {report.fd_multipliers[0]:.8f})")
    print(f"  extremality residual {report.residual:.2e}, orbit deviation {report.max_deviation:.2e}")

    # Strong attraction: the ground state localizes on one site
    g = -8.0
    spec = build_lattice_hartree(L, 1.0, on_site_kernel(L, g))
    seed = np.zeros(L, dtype=complex)
    seed[0] = 1.0
    phi, omega = hartree_fixed_point(spec, 1.0, seed)
    print(f"\nRing with g={g}: |phi|^2 per site {np.round(np.abs(phi) ** 2, 4)}, omega = {omega:.6f}")


if __name__ == "__main__":
    main()
