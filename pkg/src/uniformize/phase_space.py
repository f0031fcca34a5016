"""
GridSpec - Manages a uniform single-particle phase-space grid.
"""
from typing import Callable, Tuple

import numpy as np

MIN_POINTS = 8


class GridSpec:
    """
    Uniform (q, p) grid with per-axis periodic or open boundaries.

    Fields on the grid are arrays of shape (n_q, n_p) with axis 0 along q.
    Node i of an axis sits at x_min + i * h, h = (x_max - x_min) / n.
    """

    def __init__(
        self,
        q_range: Tuple[float, float],
        p_range: Tuple[float, float],
        shape: Tuple[int, int],
        periodic: Tuple[bool, bool] = (True, True),
    ):
        """
        Initialize a phase-space grid.

        Args:
            q_range: (q_min, q_max)
            p_range: (p_min, p_max)
            shape: (n_q, n_p) number of nodes per axis, each at least 8
            periodic: Whether the q and p axes wrap around
        """
        n_q, n_p = (int(s) for s in shape)
        if n_q < MIN_POINTS or n_p < MIN_POINTS:
            raise ValueError(f"Grid needs at least {MIN_POINTS} points per axis, got {shape}")
        q_min, q_max = (float(v) for v in q_range)
        p_min, p_max = (float(v) for v in p_range)
        if not all(np.isfinite([q_min, q_max, p_min, p_max])):
            raise ValueError("Grid bounds must be finite")
        if q_max <= q_min or p_max <= p_min:
            raise ValueError("Grid ranges must have max > min")

        self.q_min, self.q_max = q_min, q_max
        self.p_min, self.p_max = p_min, p_max
        self.n_q, self.n_p = n_q, n_p
        self.periodic = (bool(periodic[0]), bool(periodic[1]))
        self.h_q = (q_max - q_min) / n_q
        self.h_p = (p_max - p_min) / n_p

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_q, self.n_p)

    @property
    def cell_area(self) -> float:
        return self.h_q * self.h_p

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.h_q * np.arange(self.n_q)

    @property
    def p(self) -> np.ndarray:
        return self.p_min + self.h_p * np.arange(self.n_p)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Coordinate arrays of the grid nodes.

        Returns:
            (Q, P), each of shape (n_q, n_p)
        """
        return np.meshgrid(self.q, self.p, indexing="ij")

    def field(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """Sample func(q, p) on the grid nodes."""
        Q, P = self.mesh()
        values = np.asarray(func(Q, P), dtype=float)
        return np.broadcast_to(values, self.shape).copy()

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature sum of a field times the cell area."""
        return float(np.sum(values) * self.cell_area)

    def derivative(self, values: np.ndarray, axis: int) -> np.ndarray:
        """
        Fourth-order finite-difference derivative along q (axis 0) or p (axis 1).

        Periodic axes use the centered stencil with wrap-around; open axes
        switch to one-sided fourth-order stencils on the two outer nodes.
        """
        if axis not in (0, 1):
            raise ValueError("Axis must be 0 (q) or 1 (p)")
        values = np.asarray(values)
        if values.shape[:2] != self.shape:
            raise ValueError(f"Field shape {values.shape} does not match grid {self.shape}")
        h = self.h_q if axis == 0 else self.h_p
        f = np.moveaxis(values, axis, 0)
        out = (
            -np.roll(f, -2, axis=0) + 8 * np.roll(f, -1, axis=0)
            - 8 * np.roll(f, 1, axis=0) + np.roll(f, 2, axis=0)
        ) / (12 * h)
        if not self.periodic[axis]:
            out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
            out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
            out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
            out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
        return np.moveaxis(out, 0, axis)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridSpec):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.periodic == other.periodic
            and (self.q_min, self.q_max, self.p_min, self.p_max)
            == (other.q_min, other.q_max, other.p_min, other.p_max)
        )

    def __hash__(self) -> int:
        return hash((self.shape, self.periodic, self.q_min, self.q_max, self.p_min, self.p_max))

    def __repr__(self) -> str:
        return (
            f"GridSpec(q=[{self.q_min}, {self.q_max}), p=[{self.p_min}, {self.p_max}), "
            f"shape={self.shape}, periodic={self.periodic})"
        )
