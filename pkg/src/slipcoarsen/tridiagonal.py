"""Banded solve for the coupled droplet velocities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TridiagonalSystem:
    """``A x = rhs`` with ``A`` given by its three bands.

    ``sub[k]`` multiplies ``x[k]`` in row ``k + 1`` and ``sup[k]`` multiplies
    ``x[k + 1]`` in row ``k``; both have length ``n - 1``.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.rhs) != n or len(self.sub) != max(n - 1, 0) or len(self.sup) != max(n - 1, 0):
            raise ValueError("inconsistent band lengths")

    @property
    def size(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        n = self.size
        A = np.diag(np.asarray(self.diag, dtype=float))
        if n > 1:
            A[np.arange(1, n), np.arange(n - 1)] = self.sub
            A[np.arange(n - 1), np.arange(1, n)] = self.sup
        return A

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        if self.size > 1:
            y[1:] += self.sub * x[:-1]
            y[:-1] += self.sup * x[1:]
        return y

    def dominance_margin(self) -> np.ndarray:
        """``|diag| - (|sub| + |sup|)`` row by row; positive means strictly dominant."""
        off = np.zeros(self.size)
        if self.size > 1:
            off[1:] += np.abs(self.sub)
            off[:-1] += np.abs(self.sup)
        return np.abs(self.diag) - off


def solve_tridiagonal(system: TridiagonalSystem) -> np.ndarray:
    """Thomas elimination without pivoting.

    Stable for diagonally dominant systems, which is all the velocity
    systems of the reduced models produce.
    """
    n = system.size
    if n == 0:
        return np.zeros(0)
    a = np.asarray(system.sub, dtype=float)
    b = np.array(system.diag, dtype=float)
    c = np.asarray(system.sup, dtype=float)
    d = np.array(system.rhs, dtype=float)

    for k in range(1, n):
        if b[k - 1] == 0.0:
            raise ZeroDivisionError(f"zero pivot in row {k - 1}")
        m = a[k - 1] / b[k - 1]
        b[k] -= m * c[k - 1]
        d[k] -= m * d[k - 1]
    if b[-1] == 0.0:
        raise ZeroDivisionError(f"zero pivot in row {n - 1}")

    x = np.empty(n)
    x[-1] = d[-1] / b[-1]
    for k in range(n - 2, -1, -1):
        x[k] = (d[k] - c[k] * x[k + 1]) / b[k]
    return x
