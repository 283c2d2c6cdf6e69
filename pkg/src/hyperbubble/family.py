"""Finite families of weighted hyperbolic bubbles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfiguration
from .geometry import Params, axis_point, dist


@dataclass(frozen=True, eq=False)
class BubbleFamily:
    """Centers z_i with coefficients alpha_i.

    ``positions`` holds the signed axis distances when the family was built
    on the e_1 axis; it is ``None`` for general-position families.
    """

    params: Params
    centers: np.ndarray
    alphas: np.ndarray
    positions: np.ndarray | None = None
    q_matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        alphas = np.asarray(self.alphas, dtype=float).reshape(-1)
        if centers.shape[0] != alphas.size:
            raise ValueError("one coefficient per center is required")
        if centers.shape[1] != self.params.n:
            raise ValueError(f"centers must have {self.params.n} coordinates")
        N = centers.shape[0]
        D = np.zeros((N, N))
        pos = None if self.positions is None else np.asarray(self.positions, dtype=float).reshape(-1)
        for i in range(N):
            for k in range(i + 1, N):
                # axis families keep exact distances even when tanh(s/2) rounds to 1
                d = abs(pos[i] - pos[k]) if pos is not None else float(dist(centers[i], centers[k]))
                D[i, k] = D[k, i] = d
                if D[i, k] == 0.0:
                    raise DegenerateConfiguration(f"centers {i} and {k} coincide")
        Q = np.exp(-self.params.c * D)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "alphas", alphas)
        if self.positions is not None:
            object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float).reshape(-1))
        object.__setattr__(self, "q_matrix", Q)
        object.__setattr__(self, "_dist", D)

    @classmethod
    def on_axis(cls, params: Params, positions, alphas=None) -> "BubbleFamily":
        pos = np.asarray(positions, dtype=float).reshape(-1)
        al = np.ones(pos.size) if alphas is None else np.asarray(alphas, dtype=float)
        centers = np.array([axis_point(s, params.n) for s in pos])
        return cls(params, centers, al, pos)

    @property
    def size(self) -> int:
        return self.alphas.size

    @property
    def distances(self) -> np.ndarray:
        return self._dist

    @property
    def q_max(self) -> float:
        if self.size < 2:
            return 0.0
        off = self.q_matrix[~np.eye(self.size, dtype=bool)]
        return float(off.max())

    @property
    def min_separation(self) -> float:
        if self.size < 2:
            return math.inf
        return float(self._dist[~np.eye(self.size, dtype=bool)].min())

    def describe(self) -> dict:
        return {
            "positions": None if self.positions is None else self.positions.tolist(),
            "centers": self.centers.tolist(),
            "alphas": self.alphas.tolist(),
            "q_max": self.q_max,
        }
