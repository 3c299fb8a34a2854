"""Communication graph and the protocol matrices built from it."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class TopologyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Topology:
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise TopologyError("adjacency must be a square matrix with at least 2 nodes")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise TopologyError("adjacency weights must be finite and non-negative")
        if not np.array_equal(a, a.T):
            raise TopologyError("adjacency must be symmetric (undirected graph)")
        if np.any(np.diag(a) != 0):
            raise TopologyError("adjacency must have a zero diagonal")
        if not _connected(a):
            raise TopologyError("graph is not connected")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        a = self.adjacency
        return np.diag(a.sum(axis=1)) - a

    def edges(self) -> list[list]:
        i, j = np.nonzero(np.triu(self.adjacency))
        return [[int(p), int(q), float(self.adjacency[p, q])] for p, q in zip(i, j)]

    @classmethod
    def from_edges(cls, n: int, edges) -> "Topology":
        a = np.zeros((n, n))
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if i == j:
                raise TopologyError(f"self loop at node {i}")
            a[i, j] = a[j, i] = w
        return cls(a)

    @classmethod
    def preset(cls, name: str, n: int, weight: float = 1.0) -> "Topology":
        if name == "cycle":
            if n < 3:
                raise TopologyError("a cycle needs at least 3 nodes")
            edges = [(i, (i + 1) % n, weight) for i in range(n)]
        elif name == "path":
            edges = [(i, i + 1, weight) for i in range(n - 1)]
        elif name == "complete":
            edges = [(i, j, weight) for i in range(n) for j in range(i + 1, n)]
        else:
            raise TopologyError(f"unknown topology preset {name!r}")
        return cls.from_edges(n, edges)


def _connected(a: np.ndarray) -> bool:
    n = a.shape[0]
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.nonzero(a[u])[0]:
            if v not in seen:
                seen.add(int(v))
                queue.append(int(v))
    return len(seen) == n


@dataclass(frozen=True, eq=False)
class ProtocolMatrices:
    laplacian: np.ndarray
    a0: np.ndarray
    s: np.ndarray
    h_matrix: np.ndarray
    g_matrix: np.ndarray
    h: float
    norms: dict = field(default_factory=dict)


def build_matrices(topo: Topology, h: float) -> ProtocolMatrices:
    """Kronecker-form matrices acting on the row-major stacking of ``y_ij``."""
    if not h > 0:
        raise ValueError("gain h must be positive")
    n = topo.n
    lap = topo.laplacian
    # A0 = diag[a_11 .. a_1N, a_21 .. a_NN]
    a0 = np.diag(topo.adjacency.reshape(-1))
    s = np.kron(lap, np.eye(n)) + a0
    eye = np.eye(n * n)
    hm = eye - h * s
    gm = eye + h * s
    norms = {"H": spectral_norm(hm), "G": spectral_norm(gm),
             "S": spectral_norm(s), "A0": spectral_norm(a0)}
    return ProtocolMatrices(lap, a0, s, hm, gm, float(h), norms)


def h_max(topo: Topology) -> float:
    """Supremum of admissible estimation gains, ``min 1/(deg_i + a_ij)`` over edges."""
    a = topo.adjacency
    deg = a.sum(axis=1)
    i, j = np.nonzero(a)
    return float(np.min(1.0 / (deg[i] + a[i, j])))


def spectral_norm(m) -> float:
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))
