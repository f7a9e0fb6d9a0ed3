"""Weighted sum-rate, its fractional-programming surrogate, and gradients.

Conventions
-----------
``u`` is the reflection vector with ``conj(u) = diag(Phi)``, so the cascaded
channel of user ``k`` is ``g_k^H Phi H = u^H diag(g_k^H) H``. ``V`` is the
physical N x K beamformer; ``Vhat`` is the (N+1) x K point on the unit
sphere, with ``V = sqrt(P) * Vhat[:N]``.

Euclidean gradients follow ``f(x + t d) = f(x) + t Re <grad, d> + O(t^2)``
with ``<a, b> = tr(a^H b)``.
"""
from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, FeasibilityError
from .system import ChannelSet, SystemConfig


def effective_channels(u: np.ndarray, channels: ChannelSet) -> np.ndarray:
    """Stack of cascaded rows ``g_k^H Phi H``, shape ``(K, N)``."""
    u = np.asarray(u)
    if u.shape != (channels.n_reflectors,):
        raise DimensionError(f"u has shape {u.shape}, expected ({channels.n_reflectors},)")
    return (channels.G * u.conj()) @ channels.H


def effective_channel(k: int, u: np.ndarray, channels: ChannelSet) -> np.ndarray:
    """Cascaded row ``g_k^H Phi H`` of a single user."""
    return effective_channels(u, channels)[k]


def _gains(heff: np.ndarray, V: np.ndarray) -> np.ndarray:
    # A[k, j] = heff_k^H-row times v_j
    return heff @ V


def sinr(V: np.ndarray, u: np.ndarray, channels: ChannelSet, config: SystemConfig, k=None):
    """Per-user SINR; a scalar when ``k`` is given, else a length-K array."""
    A = np.abs(_gains(effective_channels(u, channels), V)) ** 2
    signal = np.diag(A)
    r = signal / (A.sum(axis=1) - signal + config.noise_power)
    return r if k is None else r[k]


def weighted_sum_rate(V, u, channels: ChannelSet, config: SystemConfig) -> float:
    return float(np.sum(config.weights * np.log2(1.0 + sinr(V, u, channels, config))))


def update_gamma(V, u, channels: ChannelSet, config: SystemConfig) -> np.ndarray:
    """Optimal auxiliary variables of the surrogate for fixed ``(V, u)``: ``gamma = sinr``."""
    return sinr(V, u, channels, config)


def eval_f2(V, u, gamma, channels: ChannelSet, config: SystemConfig) -> float:
    """Lagrangian-dual surrogate whose maximum over ``gamma`` is the sum-rate.

    The whole expression is measured in bits (scaled by ``1 / ln 2``), which
    keeps ``gamma = sinr`` as its stationary point in ``gamma``.
    """
    gamma = np.asarray(gamma, dtype=float)
    w = config.weights
    r = sinr(V, u, channels, config)
    nats = np.sum(w * np.log1p(gamma) - w * gamma + w * (1.0 + gamma) * r / (1.0 + r))
    return float(nats / np.log(2))


def _ratio_sum(A: np.ndarray, gamma_t: np.ndarray, noise: np.ndarray) -> float:
    P = A.real**2 + A.imag**2
    return float(gamma_t @ (P.diagonal() / (P.sum(axis=1) + noise)))


def _ratio_coeffs(A: np.ndarray, gamma_t: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Gradient of :func:`_ratio_sum` with respect to the gain matrix ``A``.

    Uses the same ``Re <C, dA>`` convention as the public gradients.
    """
    P = A.real**2 + A.imag**2
    denom = P.sum(axis=1) + noise
    C = -2.0 * (gamma_t * P.diagonal() / denom**2)[:, None] * A
    idx = np.arange(A.shape[0])
    C[idx, idx] += 2.0 * gamma_t * A.diagonal() / denom
    return C


def _augmented_channels(u, channels: ChannelSet, config: SystemConfig) -> np.ndarray:
    # rows of g_k^H Phi Hhat with Hhat = sqrt(P) [H, 0]
    heff = effective_channels(u, channels)
    return np.hstack([np.sqrt(config.power) * heff, np.zeros((heff.shape[0], 1))])


def eval_f3(Vhat, u, gamma, channels: ChannelSet, config: SystemConfig) -> float:
    """Surrogate sum of weighted SINR/(1+SINR) ratios on the augmented sphere point."""
    gamma_t = config.weights * (1.0 + np.asarray(gamma, dtype=float))
    A = _augmented_channels(u, channels, config) @ Vhat
    return _ratio_sum(A, gamma_t, config.noise_power)


def egrad_V(Vhat, u, gamma, channels: ChannelSet, config: SystemConfig) -> np.ndarray:
    """Euclidean gradient of :func:`eval_f3` with respect to ``Vhat``."""
    gamma_t = config.weights * (1.0 + np.asarray(gamma, dtype=float))
    Ht = _augmented_channels(u, channels, config)
    C = _ratio_coeffs(Ht @ Vhat, gamma_t, config.noise_power)
    return Ht.conj().T @ C


class BeamformerObjective:
    """Cost and Euclidean gradient in ``Vhat`` with ``u`` and ``gamma`` frozen.

    Caches the augmented channel so that each line-search evaluation is a
    single small matrix product.
    """

    def __init__(self, u, gamma, channels: ChannelSet, config: SystemConfig):
        self.Ht = _augmented_channels(u, channels, config)
        self.gamma_t = config.weights * (1.0 + np.asarray(gamma, dtype=float))
        self.noise = config.noise_power

    def cost(self, Vhat) -> float:
        return _ratio_sum(self.Ht @ Vhat, self.gamma_t, self.noise)

    def egrad(self, Vhat) -> np.ndarray:
        C = _ratio_coeffs(self.Ht @ Vhat, self.gamma_t, self.noise)
        return self.Ht.conj().T @ C


class ReflectionObjective:
    """Cost and Euclidean gradient in ``u`` with ``V`` and ``gamma`` frozen.

    With ``B[k] = g_k^H * (H V)^T`` (an SM x K block per user), the gain
    matrix is ``A[k, j] = u^H B[k][:, j]``.
    """

    def __init__(self, V, gamma, channels: ChannelSet, config: SystemConfig):
        self.HV = channels.H @ V
        self.G = channels.G
        self.gamma_t = config.weights * (1.0 + np.asarray(gamma, dtype=float))
        self.noise = config.noise_power

    def gains(self, u) -> np.ndarray:
        return (self.G * u.conj()) @ self.HV

    def cost(self, u) -> float:
        return _ratio_sum(self.gains(u), self.gamma_t, self.noise)

    def egrad(self, u) -> np.ndarray:
        # d|A_kj|^2 pairs with b_kj * conj(A_kj); collect C[k, j] conj(A) terms per user row
        C = np.conj(_ratio_coeffs(self.gains(u), self.gamma_t, self.noise))
        W = C @ self.HV.T
        return np.sum(self.G * W, axis=0)


def eval_f5(u, V, gamma, channels: ChannelSet, config: SystemConfig) -> float:
    """Surrogate as a function of the reflection vector (physical ``V``)."""
    return ReflectionObjective(V, gamma, channels, config).cost(u)


def egrad_u(u, V, gamma, channels: ChannelSet, config: SystemConfig) -> np.ndarray:
    """Euclidean gradient of :func:`eval_f5` with respect to ``u``."""
    return ReflectionObjective(V, gamma, channels, config).egrad(u)


def augment(V: np.ndarray, power: float) -> np.ndarray:
    """Map a beamformer with ``tr(V V^H) <= P`` onto the unit sphere in C^{(N+1) x K}.

    The slack is spread evenly over the auxiliary row.
    """
    V = np.asarray(V, dtype=complex)
    scaled = V / np.sqrt(power)
    used = float(np.real(np.vdot(scaled, scaled)))
    if used > 1.0 + 1e-12:
        raise FeasibilityError(f"tr(V V^H) = {used * power} exceeds the power budget {power}")
    slack = max(1.0 - used, 0.0)
    aux = np.full((1, V.shape[1]), np.sqrt(slack / V.shape[1]), dtype=complex)
    return np.vstack([scaled, aux])


def extract(Vhat: np.ndarray, power: float) -> np.ndarray:
    """Physical beamformer: drop the auxiliary row and rescale by ``sqrt(P)``."""
    return np.sqrt(power) * Vhat[:-1]
