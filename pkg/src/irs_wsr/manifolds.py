"""Complex sphere and complex oblique manifolds.

Both manifolds expose the same five operations (``project``, ``retract``,
``transport``, ``inner``, ``random_point``) so that the conjugate-gradient
solver in :mod:`irs_wsr.rcg` never needs to know which one it is working on.
Points and tangent vectors are plain complex numpy arrays.
"""
from __future__ import annotations

import numpy as np

from .exceptions import DegenerateRetractionError, DimensionError

DEGENERATE_TOL = 1e-14


def _check_shape(expected, *arrays):
    for a in arrays:
        if a.shape != expected:
            raise DimensionError(f"expected shape {expected}, got {np.shape(a)}")


class Manifold:
    """Common helpers; subclasses provide the geometry."""

    shape: tuple[int, ...]

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Real part of the Frobenius inner product ``Re tr(a^H b)``."""
        _check_shape(self.shape, a, b)
        return float(np.real(np.vdot(a, b)))

    def norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(a, a), 0.0)))

    def zero_vector(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=complex)

    def transport(self, x: np.ndarray, step_times_dir: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Carry ``v`` from the tangent space at ``x`` to the one at ``retract(x, step_times_dir)``.

        Implemented as projection at the destination point.
        """
        return self.project(self.retract(x, step_times_dir), v)

    def project(self, x, v):  # pragma: no cover - abstract
        raise NotImplementedError

    def retract(self, x, v, step=1.0):  # pragma: no cover - abstract
        raise NotImplementedError

    def feasibility_residual(self, x) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def tangency_residual(self, x, v) -> float:  # pragma: no cover - abstract
        raise NotImplementedError


class SphereManifold(Manifold):
    """Complex matrices of shape ``(rows, cols)`` with unit Frobenius norm.

    Parameters
    ----------
    rows, cols : int
        Matrix shape; for the beamformer this is ``(N + 1, K)``.
    projection : {"real", "literal"}
        ``"real"`` removes only the radial component ``Re tr(X^H Psi) X``,
        which is the orthogonal projection for the real inner product
        ``Re tr(A^H B)``. ``"literal"`` removes the full complex coefficient
        ``tr(X^H Psi) X`` and therefore also the global-phase direction
        ``jX``. The two agree whenever the cost is invariant to a global
        phase of ``X``.
    """

    def __init__(self, rows: int, cols: int, projection: str = "real"):
        if rows < 1 or cols < 1:
            raise DimensionError("rows and cols must be positive")
        if projection not in ("real", "literal"):
            raise ValueError(f"unknown projection variant {projection!r}")
        self.rows, self.cols = int(rows), int(cols)
        self.shape = (self.rows, self.cols)
        self.projection = projection

    def __repr__(self):
        return f"SphereManifold({self.rows}, {self.cols}, projection={self.projection!r})"

    def project(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        _check_shape(self.shape, x, v)
        coef = np.vdot(x, v)
        if self.projection == "real":
            coef = coef.real
        return v - coef * x

    def retract(self, x: np.ndarray, v: np.ndarray, step: float = 1.0) -> np.ndarray:
        _check_shape(self.shape, x, v)
        y = x + step * v
        nrm = np.sqrt(np.vdot(y, y).real)
        if nrm < DEGENERATE_TOL:
            raise DegenerateRetractionError("sphere retraction of a zero matrix")
        return y / nrm

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.shape) + 1j * rng.standard_normal(self.shape)
        return z / np.linalg.norm(z)

    def feasibility_residual(self, x: np.ndarray) -> float:
        return abs(float(np.real(np.vdot(x, x))) - 1.0)

    def tangency_residual(self, x: np.ndarray, v: np.ndarray) -> float:
        coef = np.vdot(x, v)
        return abs(coef.real) if self.projection == "real" else abs(coef)


class ObliqueManifold(Manifold):
    """Complex vectors of length ``dim`` whose entries all have unit modulus.

    The tangent space at ``u`` is ``{eta : Re(eta_i * conj(u_i)) = 0}``, i.e.
    each entry may only move along its own circle.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise DimensionError("dim must be positive")
        self.dim = int(dim)
        self.shape = (self.dim,)

    def __repr__(self):
        return f"ObliqueManifold({self.dim})"

    def project(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        _check_shape(self.shape, u, v)
        return v - np.real(v * np.conj(u)) * u

    def retract(self, u: np.ndarray, v: np.ndarray, step: float = 1.0) -> np.ndarray:
        _check_shape(self.shape, u, v)
        y = u + step * v
        mod = np.abs(y)
        if mod.min() < DEGENERATE_TOL:
            raise DegenerateRetractionError("oblique retraction hit a zero entry")
        return y / mod

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=self.dim))

    def feasibility_residual(self, u: np.ndarray) -> float:
        return float(np.max(np.abs(np.abs(u) - 1.0)))

    def tangency_residual(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.max(np.abs(np.real(v * np.conj(u)))))
