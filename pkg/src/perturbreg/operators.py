"""Discrete operators and the stabilizing perturbations added to them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import GridFunction


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    """Quadrature weights h * [1/2, 1, ..., 1, 1/2] on a uniform n-point grid."""
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def cumulative_trapezoid_matrix(n: int, h: float) -> np.ndarray:
    """Dense matrix of the running trapezoid integral.

    Row i holds h * [1/2, 1, ..., 1, 1/2] over columns 0..i; row 0 is all
    zeros since the integral from a to a vanishes. The matrix is singular by
    construction, which is exactly why a stabilizer is needed.
    """
    m = np.tril(np.full((n, n), h))
    m[:, 0] = 0.5 * h
    np.fill_diagonal(m, 0.5 * h)
    m[0, :] = 0.0
    return m


@dataclass(frozen=True)
class DiscreteOperator:
    """A dense matrix, or the running trapezoid integral on a described grid.

    The integral variant stores only the grid (a, b, n); its matrix is
    materialized on demand. ``norm_hint`` may carry a known operator-norm
    bound for diagnostics, it is never required.
    """

    matrix: np.ndarray | None = None
    a: float | None = None
    b: float | None = None
    n: int | None = None
    norm_hint: float | None = None

    @classmethod
    def dense(cls, matrix: np.ndarray, norm_hint: float | None = None) -> "DiscreteOperator":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        return cls(matrix=m, norm_hint=norm_hint)

    @classmethod
    def volterra(cls, a: float, b: float, n: int) -> "DiscreteOperator":
        """Running trapezoid integral over [a, b] on n uniform points."""
        if not b > a:
            raise ValueError(f"empty interval [{a}, {b}]")
        if n < 2:
            raise ValueError(f"need at least two grid points, got {n}")
        return cls(a=float(a), b=float(b), n=int(n))

    @property
    def is_volterra(self) -> bool:
        return self.matrix is None

    @property
    def size(self) -> int:
        return self.n if self.is_volterra else self.matrix.shape[0]

    @property
    def h(self) -> float:
        if not self.is_volterra:
            raise AttributeError("dense operators carry no grid spacing")
        return (self.b - self.a) / (self.n - 1)

    def as_matrix(self) -> np.ndarray:
        if self.is_volterra:
            return cumulative_trapezoid_matrix(self.n, self.h)
        return self.matrix

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size != self.size:
            raise ValueError(f"operand size {x.size} does not match operator size {self.size}")
        if self.is_volterra:
            return cumulative_trapezoid(x, dx=self.h, initial=0.0)
        return self.matrix @ x


def _stack(vectors, name: str) -> np.ndarray:
    rows = []
    for v in vectors:
        rows.append(v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float))
    stacked = np.vstack(rows)
    if not np.all(np.isfinite(stacked)):
        raise ValueError(f"{name} must be finite")
    return stacked


@dataclass(frozen=True)
class Stabilizer:
    """alpha * I, or a fixed finite-rank operator  x -> sum_i <x, gamma_i> z_i.

    The finite-rank variant does not depend on alpha at all; its job is to
    shift the degenerate directions of the operator it is added to. ``weights``
    are the inner-product weights (trapezoid weights for grid functions,
    None for the plain Euclidean dot product).
    """

    gammas: np.ndarray | None = None
    zs: np.ndarray | None = None
    weights: np.ndarray | None = None

    @classmethod
    def scalar_alpha(cls) -> "Stabilizer":
        return cls()

    @classmethod
    def finite_dim(cls, gammas: Sequence, zs: Sequence) -> "Stabilizer":
        """Finite-rank stabilizer from matching lists of vectors or grid functions.

        When the inputs are grid functions they must share one grid, and the
        pairing <., gamma_i> becomes the trapezoid approximation of the L2
        product on that grid.
        """
        g = _stack(gammas, "gammas")
        z = _stack(zs, "zs")
        if g.shape != z.shape:
            raise ValueError(f"gammas and zs disagree in shape: {g.shape} vs {z.shape}")
        weights = None
        grid_like = [v for v in list(gammas) + list(zs) if isinstance(v, GridFunction)]
        if grid_like:
            ref = grid_like[0]
            for v in grid_like[1:]:
                if (v.a, v.b, v.n) != (ref.a, ref.b, ref.n):
                    raise ValueError("grid functions in a stabilizer must share one grid")
            weights = trapezoid_weights(ref.n, ref.h)
        return cls(gammas=g, zs=z, weights=weights)

    @property
    def is_scalar(self) -> bool:
        return self.gammas is None

    @property
    def rank(self) -> int:
        return 0 if self.is_scalar else self.gammas.shape[0]

    def apply(self, alpha: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_scalar:
            return alpha * x
        xw = x if self.weights is None else self.weights * x
        return self.zs.T @ (self.gammas @ xw)

    def materialize(self, alpha: float, n: int) -> np.ndarray:
        """Dense n x n matrix of the stabilizer evaluated at alpha."""
        if self.is_scalar:
            return alpha * np.eye(n)
        if self.gammas.shape[1] != n:
            raise ValueError(f"stabilizer built for size {self.gammas.shape[1]}, asked for {n}")
        g = self.gammas if self.weights is None else self.gammas * self.weights
        return self.zs.T @ g

    def norm_estimate(self, alpha: float, n: int) -> float:
        """Operator-norm estimate d(alpha): |alpha| when scalar, else the 2-norm of B."""
        if self.is_scalar:
            return abs(alpha)
        return float(np.linalg.norm(self.materialize(alpha, n), 2))
