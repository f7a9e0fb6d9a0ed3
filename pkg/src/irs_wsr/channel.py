"""Saleh-Valenzuela channels for the BS->IRS and IRS->user links.

All randomness is drawn in an order that does not depend on the array sizes,
so a single generator state yields the same path gains, angles and user
positions for every (N, M). Sweeps over N or M therefore compare correlated
realizations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError
from .system import ChannelSet, SystemConfig

SPEED_OF_LIGHT = 299_792_458.0

LOS_GAIN_VARIANCE = 2.0
NLOS_GAIN_VARIANCE = 0.4


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array with ``rows x cols`` elements."""

    rows: int
    cols: int
    spacing: float = 0.5  # element spacing in wavelengths

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or not self.spacing > 0:
            raise DimensionError(f"invalid array geometry {self}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @classmethod
    def with_rows(cls, n_elements: int, rows: int, spacing: float = 0.5) -> "ArrayGeometry":
        """Array of ``n_elements`` with a fixed row count; columns take the rest."""
        if n_elements % rows:
            raise DimensionError(f"{n_elements} elements cannot be arranged in {rows} rows")
        return cls(rows, n_elements // rows, spacing)


@dataclass
class PathParams:
    """Gains and angles of the LoS path (index 0) followed by ``L`` NLoS paths."""

    gains: np.ndarray
    az_rx: np.ndarray
    el_rx: np.ndarray
    az_tx: np.ndarray
    el_tx: np.ndarray

    @property
    def n_paths(self) -> int:
        return len(self.gains)


@dataclass
class ScenarioGeometry:
    """Planar node layout; coordinates in meters."""

    bs_position: tuple = (0.0, 0.0)
    irs_positions: list = field(default_factory=lambda: [(10.0, 24.0), (24.0, 10.0)])
    user_center: tuple = (20.0, 0.0)
    user_radius: float = 2.0
    carrier_frequency: float = 3e9
    spacing: float = 0.5

    def __post_init__(self):
        if len(self.irs_positions) < 1:
            raise ValueError("at least one IRS position is required")
        if not self.user_radius > 0:
            raise ValueError("user_radius must be positive")
        if not self.carrier_frequency > 0:
            raise ValueError("carrier_frequency must be positive")

    @property
    def n_irs(self) -> int:
        return len(self.irs_positions)


def steering_vector(phi: float, varphi: float, geom: ArrayGeometry) -> np.ndarray:
    """Unit-norm UPA response for azimuth ``phi`` and elevation ``varphi``."""
    k = 2 * np.pi * geom.spacing
    row = np.exp(1j * k * np.arange(geom.rows) * np.sin(phi) * np.sin(varphi))
    col = np.exp(1j * k * np.arange(geom.cols) * np.cos(varphi))
    return np.kron(row, col) / np.sqrt(geom.size)


def _steering_matrix(phis, varphis, geom: ArrayGeometry) -> np.ndarray:
    # columns are steering_vector(phis[l], varphis[l], geom)
    return np.stack([steering_vector(p, v, geom) for p, v in zip(phis, varphis)], axis=1)


def path_loss(distance: float, carrier_frequency: float, c: float = SPEED_OF_LIGHT) -> float:
    """Free-space path loss ``(4 pi f D / c)^2`` as a linear power ratio."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return (4 * np.pi * carrier_frequency * distance / c) ** 2


def _complex_normal(rng, variance, size):
    return np.sqrt(variance / 2) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_paths(n_paths: int, rng: np.random.Generator) -> PathParams:
    """Draw one LoS and ``n_paths`` NLoS paths with uniform angles on [0, 2pi)."""
    if n_paths < 0:
        raise ValueError("n_paths must be nonnegative")
    variances = np.full(n_paths + 1, NLOS_GAIN_VARIANCE)
    variances[0] = LOS_GAIN_VARIANCE
    gains = _complex_normal(rng, variances, n_paths + 1)
    angles = rng.uniform(0.0, 2 * np.pi, size=(4, n_paths + 1))
    return PathParams(gains, *angles)


def gen_channel_bs_irs(
    paths: PathParams, bs_geom: ArrayGeometry, irs_geom: ArrayGeometry, rho: float
) -> np.ndarray:
    """BS->IRS matrix of shape ``(M, N)``."""
    a_irs = _steering_matrix(paths.az_rx, paths.el_rx, irs_geom)
    a_bs = _steering_matrix(paths.az_tx, paths.el_tx, bs_geom)
    scale = np.sqrt(bs_geom.size * irs_geom.size / rho)
    return scale * (a_irs * paths.gains) @ a_bs.conj().T


def gen_channel_irs_user(paths: PathParams, irs_geom: ArrayGeometry, rho: float) -> np.ndarray:
    """IRS->user row ``g^H`` of length ``M``."""
    a_irs = _steering_matrix(paths.az_rx, paths.el_rx, irs_geom)
    return np.sqrt(irs_geom.size / rho) * (a_irs.conj() @ paths.gains)


def sample_user_positions(geometry: ScenarioGeometry, n_users: int, rng) -> np.ndarray:
    radius = geometry.user_radius * np.sqrt(rng.uniform(size=n_users))
    angle = rng.uniform(0.0, 2 * np.pi, size=n_users)
    center = np.asarray(geometry.user_center, dtype=float)
    return center + np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def sample_scenario(
    geometry: ScenarioGeometry, config: SystemConfig, rng: np.random.Generator
) -> ChannelSet:
    """Draw user drops and all ``S(K+1)`` channels of one realization."""
    if geometry.n_irs != config.n_irs:
        raise DimensionError(
            f"geometry has {geometry.n_irs} IRS positions but config asks for {config.n_irs}"
        )
    bs_geom = ArrayGeometry.with_rows(config.n_antennas, config.bs_rows, geometry.spacing)
    irs_geom = ArrayGeometry.with_rows(config.n_elements, config.irs_rows, geometry.spacing)
    bs = np.asarray(geometry.bs_position, dtype=float)
    users = sample_user_positions(geometry, config.n_users, rng)

    H_blocks, G_blocks = [], []
    for irs in np.asarray(geometry.irs_positions, dtype=float):
        rho_bi = path_loss(np.linalg.norm(irs - bs), geometry.carrier_frequency)
        H_blocks.append(gen_channel_bs_irs(sample_paths(config.n_paths, rng), bs_geom, irs_geom, rho_bi))
        rows = []
        for user in users:
            rho_iu = path_loss(np.linalg.norm(user - irs), geometry.carrier_frequency)
            rows.append(gen_channel_irs_user(sample_paths(config.n_paths, rng), irs_geom, rho_iu))
        G_blocks.append(np.array(rows))
    return ChannelSet(H=np.vstack(H_blocks), G=np.hstack(G_blocks), user_positions=users)
