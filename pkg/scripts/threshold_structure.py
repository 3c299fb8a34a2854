"""Saturation thresholds for the default game on the 5-cycle.

Evaluates the bound C and the thresholds A_x, A_y at the reference design
constants (h = 0.44, delta = 0.001, gamma1 = 0.9992) and, for comparison,
at the constants the tuner picks on its own.
"""

import numpy as np

from nesh.game import DEFAULT_X0, constants, default_game, solve_ne
from nesh.topology import Topology, build_matrices
from nesh.tuner import bound_c, required_r, synthesize, thresholds


def evaluate(h, delta, gamma1, rho, theta0, c_x0, c_xstar, l):
    nrm = build_matrices(Topology.preset("cycle", 5), h).norms
    c, _, _ = bound_c(h, gamma1, theta0, rho, nrm["S"], nrm["A0"], c_x0, c_xstar, 5)
    args = (c, gamma1, delta, l, h, nrm["G"], nrm["A0"], nrm["S"], 5)
    return nrm, c, thresholds(*args), required_r(*args)


def main() -> None:
    game = default_game()
    l = constants(game).lipschitz_l
    c_x0 = float(np.max(np.abs(DEFAULT_X0)))
    c_xstar = float(np.max(np.abs(solve_ne(game))))

    rows = [("reference", 0.44, 0.001, 0.9992, 0.9991, 2 * 0.9992 * c_x0)]
    tuned = synthesize(game, Topology.preset("cycle", 5), c_x0=c_x0)
    rows.append(("tuned", tuned.h, tuned.delta, tuned.gamma1, tuned.rho_hbar, tuned.theta0))

    print(f"l = {l:.4f}, C_x0 = {c_x0}, C_x* = {c_xstar:.4f}")
    for name, h, delta, gamma1, rho, theta0 in rows:
        nrm, c, (a_x, a_y), (r_x, r_y) = evaluate(h, delta, gamma1, rho, theta0,
                                                  c_x0, c_xstar, l)
        print(f"\n[{name}] h={h} delta={delta:.4g} gamma1={gamma1:.6f} rho(Hbar)={rho:.6f}")
        print(f"  ||H||={nrm['H']:.4f} ||G||={nrm['G']:.4f} ||S||={nrm['S']:.4f} "
              f"||A0||={nrm['A0']:.4f}")
        print(f"  C = {c:.1f}")
        print(f"  A_x = {a_x:.1f}  A_y = {a_y:.1f}  A_y/A_x = {a_y / a_x:.1f}")
        print(f"  minimal R_x = {r_x}, R_y = {r_y}")


if __name__ == "__main__":
    main()
