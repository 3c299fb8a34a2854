"""Design-constant synthesis: gain h, step size delta, zoom factor, level counts.

Pipeline: ``h = safety * h_max`` makes the estimation matrix contractive;
``delta`` minimises the spectral radius of the 2x2 comparison matrix
``Hbar``; ``gamma1`` sits a margin above that radius; the bound ``C`` on the
scaled errors at successful instants then fixes the quantizer level counts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .game import GameSpec, constants, solve_ne
from .topology import Topology, build_matrices, h_max


class TunerError(ValueError):
    pass


@dataclass(frozen=True)
class DesignParams:
    h: float
    delta: float
    gamma1: float
    theta0: float
    r_x: int
    r_y: int
    c_bound: float | None = None
    c_gamma: float | None = None
    gamma_decay: float | None = None
    rho_hbar: float | None = None
    norm_h: float | None = None

    def __post_init__(self):
        if not (self.h > 0 and self.delta > 0 and self.theta0 > 0):
            raise TunerError("h, delta and theta0 must be positive")
        if not 0 < self.gamma1 < 1:
            raise TunerError("gamma1 must lie in (0, 1)")
        if self.rho_hbar is not None and not self.rho_hbar < self.gamma1:
            raise TunerError("gamma1 must exceed rho(Hbar)")
        if int(self.r_x) < 1 or int(self.r_y) < 1:
            raise TunerError("level counts must be positive integers")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def hbar(norm_h: float, delta: float, l: float, mu: float, n: int) -> np.ndarray:
    disc = 1 - 2 * delta * mu + (delta * l) ** 2
    if disc < 0:
        raise TunerError("1 - 2 delta mu + (delta l)^2 is negative")
    off = delta * l * n
    return np.array([[norm_h + delta * l * math.sqrt(n), off],
                     [off, math.sqrt(disc)]])


def sym2_spectral_radius(m) -> float:
    """Spectral radius of a symmetric 2x2 matrix from its trace and determinant."""
    a, b, c = float(m[0][0]), float(m[0][1]), float(m[1][1])
    mid = 0.5 * (a + c)
    rad = math.hypot(0.5 * (a - c), b)
    return max(abs(mid + rad), abs(mid - rad))


def rho_hbar(norm_h: float, delta: float, l: float, mu: float, n: int) -> float:
    return sym2_spectral_radius(hbar(norm_h, delta, l, mu, n))


def b_margin(delta: float, norm_h: float, l: float, mu: float, n: int) -> float:
    """det(I - Hbar) in the factored form used for the feasibility test."""
    root = math.sqrt(max(1 - 2 * mu * delta + (l * delta) ** 2, 0.0))
    return (1 - norm_h - l * math.sqrt(n) * delta) * (1 - root) - (n * l * delta) ** 2


def delta_limits(norm_h: float, l: float, mu: float, n: int,
                 variant: str = "l") -> tuple[float, float]:
    """Upper limits on delta from the two Gershgorin-type conditions.

    ``variant="mu"`` uses mu in the second denominator, as printed in the
    source derivation; the default uses l, which is what the Hbar entry
    ``||H|| + delta l sqrt(N) < 1`` actually requires.
    """
    scale = l if variant == "l" else mu
    return 2 * mu / l ** 2, (1 - norm_h) / (scale * math.sqrt(n))


def delta_feasible(delta: float, norm_h: float, l: float, mu: float, n: int,
                   variant: str = "l") -> bool:
    if not delta > 0:
        return False
    lim_a, lim_b = delta_limits(norm_h, l, mu, n, variant)
    return delta < lim_a and delta < lim_b and b_margin(delta, norm_h, l, mu, n) > 0


def select_delta(norm_h: float, l: float, mu: float, n: int, grid_size: int = 400) -> float:
    """Feasible delta minimising rho(Hbar): log grid, then golden-section refinement."""
    if not norm_h < 1:
        raise TunerError(f"||H|| = {norm_h} must be below 1")
    upper = min(delta_limits(norm_h, l, mu, n))
    grid = np.geomspace(upper * 1e-9, upper, grid_size, endpoint=False)
    feas = [d for d in grid if delta_feasible(d, norm_h, l, mu, n)]
    if not feas:
        raise TunerError("no feasible delta found on the search grid")
    rhos = [rho_hbar(norm_h, d, l, mu, n) for d in feas]
    i = int(np.argmin(rhos))
    best, best_rho = feas[i], rhos[i]
    if 0 < i < len(feas) - 1:

        def objective(d):
            if not delta_feasible(d, norm_h, l, mu, n):
                return math.inf
            return rho_hbar(norm_h, d, l, mu, n)

        res = minimize_scalar(objective, bracket=(feas[i - 1], feas[i], feas[i + 1]),
                              method="golden", tol=1e-12)
        if res.fun < best_rho and delta_feasible(res.x, norm_h, l, mu, n):
            best = float(res.x)
    return float(best)


def bound_c(h: float, gamma1: float, theta0: float, rho: float,
            norm_s: float, norm_a0: float, c_x0: float, c_xstar: float,
            n: int) -> tuple[float, float, float]:
    """Bound on the scaled error norm at successful instants.

    Hbar is symmetric, so ``||(Hbar/gamma1)^k|| = (rho/gamma1)^k`` exactly and
    the tight choice ``C_gamma = 1``, ``gamma = rho/gamma1`` is used.
    Returns ``(C, C_gamma, gamma)``.
    """
    if not rho < gamma1 < 1:
        raise TunerError(f"need rho(Hbar) < gamma1 < 1, got rho={rho}, gamma1={gamma1}")
    c_gamma = 1.0
    gamma = rho / gamma1
    c_bar = max(gamma * c_gamma, 1.0)
    initial = c_bar / theta0 * math.sqrt(n ** 2 * c_x0 ** 2 + n * (c_xstar + c_x0) ** 2)
    steady = c_gamma * h * n * (norm_s + norm_a0) / (2 * gamma1 ** 2 * (1 - gamma))
    return float(max(initial, steady)), c_gamma, float(gamma)


def _min_levels(threshold: float) -> int:
    r = max(1, math.ceil(threshold - 0.5))
    while (2 * r + 1) / 2 < threshold:
        r += 1
    while r > 1 and (2 * (r - 1) + 1) / 2 >= threshold:
        r -= 1
    return r


def thresholds(c: float, gamma1: float, delta: float, l: float, h: float,
               norm_g: float, norm_a0: float, norm_s: float, n: int) -> tuple[float, float]:
    """Right-hand sides that (2R+1)/2 must reach for the x and y channels."""
    a_x = n / (2 * gamma1) + (1 + math.sqrt(n)) * delta * l * c
    a_y = n * norm_g / (2 * gamma1) + h * norm_a0 * n / (2 * gamma1) + h * norm_s * c
    return a_x, a_y


def required_r(c: float, gamma1: float, delta: float, l: float, h: float,
               norm_g: float, norm_a0: float, norm_s: float, n: int) -> tuple[int, int]:
    a_x, a_y = thresholds(c, gamma1, delta, l, h, norm_g, norm_a0, norm_s, n)
    return _min_levels(a_x), _min_levels(a_y)


def synthesize(game: GameSpec, topo: Topology, theta0: float | None = None,
               c_x0: float = 0.0, c_xstar: float | None = None,
               gamma1_margin: float = 0.1, safety_factor: float = 0.99,
               h: float | None = None, delta: float | None = None,
               gamma1: float | None = None) -> DesignParams:
    """Chain every design stage into a complete parameter set.

    ``theta0=None`` picks ``2 gamma1 c_x0`` (or 1 when ``c_x0 = 0``), the
    smallest value for which the initial quantization error already fits the
    ``1/(2 gamma1)`` envelope the no-saturation argument starts from; a smaller
    explicit ``theta0`` is rejected for the same reason.
    """
    if not 0 < gamma1_margin < 1:
        raise TunerError("gamma1_margin must lie in (0, 1)")
    if game.n_players != topo.n:
        raise TunerError(f"game has {game.n_players} players but graph has {topo.n} nodes")
    n = game.n_players
    gc = constants(game)
    l, mu = gc.lipschitz_l, gc.monotonicity_mu
    if c_xstar is None:
        c_xstar = float(np.max(np.abs(solve_ne(game))))
    if h is None:
        h = safety_factor * h_max(topo)
    mats = build_matrices(topo, h)
    nh = mats.norms["H"]
    if not nh < 1:
        raise TunerError(f"||H|| = {nh:.6f} >= 1 for h = {h}")
    if delta is None:
        delta = select_delta(nh, l, mu, n)
    elif not delta_feasible(delta, nh, l, mu, n):
        raise TunerError(f"delta = {delta} is infeasible")
    rho = rho_hbar(nh, delta, l, mu, n)
    if not rho < 1:
        raise TunerError(f"rho(Hbar) = {rho} >= 1")
    if gamma1 is None:
        gamma1 = rho + gamma1_margin * (1 - rho)
    theta_min = 2 * gamma1 * c_x0
    if theta0 is None:
        theta0 = theta_min if c_x0 > 0 else 1.0
    elif theta0 < theta_min:
        raise TunerError(f"theta0 = {theta0} < 2 gamma1 C_x0 = {theta_min}: the initial "
                         "quantization error would already exceed the envelope")
    c, c_gamma, gamma = bound_c(h, gamma1, theta0, rho, mats.norms["S"], mats.norms["A0"],
                                c_x0, c_xstar, n)
    r_x, r_y = required_r(c, gamma1, delta, l, h, mats.norms["G"], mats.norms["A0"],
                          mats.norms["S"], n)
    return DesignParams(h=float(h), delta=float(delta), gamma1=float(gamma1),
                        theta0=float(theta0), r_x=r_x, r_y=r_y, c_bound=c,
                        c_gamma=c_gamma, gamma_decay=gamma, rho_hbar=rho, norm_h=float(nh))
