"""Scalar system parameters and the stacked channel container."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DimensionError


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass
class SystemConfig:
    """Size and power parameters of the multi-IRS MISO downlink.

    ``noise_power`` and ``weights`` accept a scalar (broadcast to every user)
    or a length-``n_users`` sequence. Noise is in watts.
    """

    n_antennas: int
    n_elements: int
    n_irs: int
    n_users: int
    power: float = 1.0
    noise_power: object = 1e-11
    weights: object = 1.0
    quantization: Optional[int] = None
    n_paths: int = 3
    bs_rows: int = 2
    irs_rows: int = 2

    def __post_init__(self):
        for name in ("n_antennas", "n_elements", "n_irs", "n_users", "bs_rows", "irs_rows"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.n_paths < 0:
            raise ValueError("n_paths must be nonnegative")
        if not self.power > 0:
            raise ValueError("power must be positive")
        self.noise_power = np.broadcast_to(
            np.asarray(self.noise_power, dtype=float), (self.n_users,)
        ).copy()
        self.weights = np.broadcast_to(np.asarray(self.weights, dtype=float), (self.n_users,)).copy()
        if np.any(self.noise_power <= 0):
            raise ValueError("noise_power must be positive")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if self.quantization is not None and self.quantization < 2:
            raise ValueError("quantization order must be at least 2")

    @property
    def n_reflectors(self) -> int:
        """Total number of reflecting elements over all surfaces (S*M)."""
        return self.n_irs * self.n_elements


@dataclass
class ChannelSet:
    """Stacked BS->IRS matrix ``H`` (SM x N) and user rows ``G`` (K x SM).

    Row ``G[k]`` is the conjugate-transposed IRS->user channel of user ``k``
    concatenated over all surfaces.
    """

    H: np.ndarray
    G: np.ndarray
    user_positions: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=complex)
        self.G = np.asarray(self.G, dtype=complex)
        if self.H.ndim != 2 or self.G.ndim != 2 or self.G.shape[1] != self.H.shape[0]:
            raise DimensionError(f"incompatible H {self.H.shape} and G {self.G.shape}")

    @property
    def n_antennas(self) -> int:
        return self.H.shape[1]

    @property
    def n_reflectors(self) -> int:
        return self.H.shape[0]

    @property
    def n_users(self) -> int:
        return self.G.shape[0]

    def check(self, config: SystemConfig) -> None:
        expected = (config.n_reflectors, config.n_antennas, config.n_users)
        if (self.n_reflectors, self.n_antennas, self.n_users) != expected:
            raise DimensionError(
                f"channel sizes (SM, N, K)={(self.n_reflectors, self.n_antennas, self.n_users)} "
                f"do not match config {expected}"
            )
