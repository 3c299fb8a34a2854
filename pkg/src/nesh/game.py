"""Quadratic aggregative games: pseudogradient, Nash equilibrium, constants.

Player ``i`` minimises

    f_i(x) = rho_i (x_i - xd_i)^2 + (p0 * sum_j x_j + q0) x_i

so the pseudogradient is affine, ``P(x) = M x + c`` with
``M = 2 diag(rho) + p0 (I + 1 1^T)`` and ``c = q0 1 - 2 rho * xd``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GameError(ValueError):
    """Raised when a game violates the strong-monotonicity requirement."""


@dataclass(frozen=True)
class GameConstants:
    lipschitz_l: float
    monotonicity_mu: float

    def __post_init__(self):
        if not (self.lipschitz_l > 0 and self.monotonicity_mu > 0):
            raise GameError(f"game constants must be positive, got {self}")


@dataclass(frozen=True, eq=False)
class GameSpec:
    rho: np.ndarray
    x_desired: np.ndarray
    p0: float
    q0: float
    matrix: np.ndarray = field(init=False, repr=False)
    offset: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float).copy()
        xd = np.asarray(self.x_desired, dtype=float).copy()
        if rho.ndim != 1 or rho.shape != xd.shape:
            raise GameError("rho and x_desired must be vectors of equal length")
        if rho.size < 2:
            raise GameError("a game needs at least two players")
        if np.any(rho <= 0):
            raise GameError("all rho_i must be positive")
        n = rho.size
        m = 2.0 * np.diag(rho) + float(self.p0) * (np.eye(n) + np.ones((n, n)))
        c = float(self.q0) * np.ones(n) - 2.0 * rho * xd
        sym = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(sym)[0] <= 0:
            raise GameError("pseudogradient matrix is not positive definite "
                            "(strong monotonicity fails)")
        for arr in (rho, xd, m, c):
            arr.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "x_desired", xd)
        object.__setattr__(self, "p0", float(self.p0))
        object.__setattr__(self, "q0", float(self.q0))
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", c)

    @property
    def n_players(self) -> int:
        return self.rho.size

    def payoff(self, x) -> np.ndarray:
        """All players' costs at profile ``x``."""
        x = _profile(self, x)
        return self.rho * (x - self.x_desired) ** 2 + (self.p0 * x.sum() + self.q0) * x

    def to_dict(self) -> dict:
        return {"rho": self.rho.tolist(), "x_desired": self.x_desired.tolist(),
                "p0": self.p0, "q0": self.q0}


def default_game() -> GameSpec:
    """Five-player HVAC energy game.

    Identical comfort weights, evenly spaced set points and ``p0 = 0.1``;
    its equilibrium is x* = [2.0147, 6.7766, 11.5385, 16.3004, 21.0623].
    """
    return GameSpec(rho=[1.0] * 5, x_desired=[5.0, 10.0, 15.0, 20.0, 25.0],
                    p0=0.1, q0=0.0)


DEFAULT_X0 = (10.0, 2.0, 18.0, 6.0, 14.0)


def _profile(game: GameSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (game.n_players,):
        raise ValueError(f"expected an action profile of length {game.n_players}, "
                         f"got shape {x.shape}")
    return x


def _row_dot(m: np.ndarray, est: np.ndarray) -> np.ndarray:
    # shared by the full-information and mixed paths so they agree bit for bit
    return (m * est).sum(axis=1)


def pseudogradient(game: GameSpec, x) -> np.ndarray:
    x = _profile(game, x)
    n = game.n_players
    return _row_dot(game.matrix, np.broadcast_to(x, (n, n))) + game.offset


def _estimates(game: GameSpec, estimates) -> np.ndarray:
    est = np.asarray(estimates, dtype=float)
    n = game.n_players
    if est.shape != (n, n):
        raise ValueError(f"estimates must be {n}x{n}, got shape {est.shape}")
    return est


def mixed_pseudogradient(game: GameSpec, x, estimates) -> np.ndarray:
    """Each player's partial derivative at its own action and its estimates of the rest.

    Row ``i`` of ``estimates`` is player ``i``'s estimate vector; its diagonal
    entry is ignored in favour of ``x[i]``.
    """
    x = _profile(game, x)
    est = _estimates(game, estimates).copy()
    idx = np.arange(game.n_players)
    est[idx, idx] = x
    return _row_dot(game.matrix, est) + game.offset


def mixed_linear_part(game: GameSpec, dx, d_estimates) -> np.ndarray:
    """Mixed pseudogradient without the constant term.

    Evaluated on deviations from the Nash equilibrium this is exactly the
    mixed pseudogradient, because ``P(x*) = 0`` and ``P`` is affine.
    """
    est = np.array(d_estimates, dtype=float)
    idx = np.arange(game.n_players)
    est[idx, idx] = dx
    return _row_dot(game.matrix, est)


def solve_ne(game: GameSpec) -> np.ndarray:
    return np.linalg.solve(game.matrix, -game.offset)


def constants(game: GameSpec) -> GameConstants:
    m = game.matrix
    mu = float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])
    lip = float(np.max(np.linalg.norm(m, axis=1)))
    return GameConstants(lipschitz_l=lip, monotonicity_mu=mu)
