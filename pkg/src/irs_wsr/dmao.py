"""Alternating optimization over the beamformer sphere and the phase manifold.

The outer loop alternates three block updates:

1. ``gamma <- sinr(V, u)``, which makes the surrogate tight;
2. ``Vhat`` by conjugate gradient on the complex sphere;
3. ``u`` by conjugate gradient on the complex oblique manifold.

Each block update can only increase the surrogate, and the surrogate is
tight after step 1, so the recorded sum-rate never decreases.

Three reference schemes share the same outer stopping rule: random phases
with an optimized beamformer, and MRT / ZF beamformers alternated with
optimized phases.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .exceptions import SingularChannelError
from .manifolds import ObliqueManifold, SphereManifold
from .objective import (
    BeamformerObjective,
    ReflectionObjective,
    augment,
    effective_channels,
    extract,
    update_gamma,
    weighted_sum_rate,
)
from .rcg import SolverOptions, rcg_maximize
from .system import ChannelSet, SystemConfig

ZF_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class DmaoOptions:
    outer_max_iters: int = 100
    outer_rel_tol: float = 1e-4
    beamformer: SolverOptions = SolverOptions()
    reflection: SolverOptions = SolverOptions()
    quantization: Optional[int] = None
    quantizer: str = "circular"
    reoptimize_after_quantization: bool = False

    def __post_init__(self):
        if self.outer_max_iters < 1:
            raise ValueError("outer_max_iters must be a positive integer")
        if not self.outer_rel_tol > 0:
            raise ValueError("outer_rel_tol must be positive")
        if self.quantization is not None and self.quantization < 2:
            raise ValueError("quantization order must be at least 2")
        if self.quantizer not in ("circular", "literal"):
            raise ValueError(f"unknown quantizer {self.quantizer!r}")


@dataclass
class SolveResult:
    """Outcome of one solve.

    ``theta`` holds the IRS phases, ``Phi = diag(exp(1j * theta))`` and
    ``u = exp(-1j * theta)``. ``objective_trace`` is the sum-rate before
    any quantization, one entry for the starting point and one per outer
    iteration; ``objective`` is the final (possibly quantized) sum-rate.
    """

    method: str
    V: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    objective: float
    objective_trace: list = field(default_factory=list)
    outer_iterations: int = 0
    inner_iterations: list = field(default_factory=list)
    elapsed: float = 0.0
    quantization: Optional[int] = None

    @property
    def u(self) -> np.ndarray:
        return np.exp(-1j * self.theta)

    @property
    def Phi(self) -> np.ndarray:
        return np.diag(np.exp(1j * self.theta))

    @property
    def continuous_objective(self) -> float:
        return self.objective_trace[-1]


def phases_from_u(u: np.ndarray) -> np.ndarray:
    return np.mod(-np.angle(u), 2 * np.pi)


def quantize_phases(theta, Q: int, mode: str = "circular") -> np.ndarray:
    """Round each phase to the nearest level of ``{0, 2pi/Q, ..., 2pi(Q-1)/Q}``.

    ``mode="circular"`` measures distance on the circle; ``mode="literal"``
    uses the plain absolute difference. Ties go to the smaller level.
    """
    if Q < 2:
        raise ValueError(f"quantization order must be at least 2, got {Q}")
    theta = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
    levels = 2 * np.pi * np.arange(Q) / Q
    diff = np.abs(theta[..., None] - levels)
    if mode == "circular":
        diff = np.minimum(diff, 2 * np.pi - diff)
    elif mode != "literal":
        raise ValueError(f"unknown quantizer mode {mode!r}")
    # first index within rounding noise of the minimum = smallest level among ties
    best = np.argmax(diff <= diff.min(axis=-1, keepdims=True) + 1e-12, axis=-1)
    return levels[best]


def _converged(prev: float, cur: float, rel_tol: float) -> bool:
    return abs(cur - prev) <= rel_tol * max(abs(prev), np.finfo(float).tiny)


def _solve_beamformer(Vhat, u, gamma, channels, config, sphere, opts, callback):
    obj = BeamformerObjective(u, gamma, channels, config)
    cb = None if callback is None else (lambda t, x: callback("beamformer", x))
    return rcg_maximize(obj.cost, lambda X: sphere.project(X, obj.egrad(X)), sphere, Vhat, opts, cb)


def _solve_reflection(u, V, gamma, channels, config, oblique, opts, callback):
    obj = ReflectionObjective(V, gamma, channels, config)
    cb = None if callback is None else (lambda t, x: callback("reflection", x))
    return rcg_maximize(obj.cost, lambda x: oblique.project(x, obj.egrad(x)), oblique, u, opts, cb)


def _finalize(method, V, u, gamma, trace, inner, t0, channels, config, opts, sphere=None, callback=None):
    theta = phases_from_u(u)
    objective = trace[-1]
    Q = opts.quantization
    if Q is not None:
        theta = quantize_phases(theta, Q, opts.quantizer)
        u = np.exp(-1j * theta)
        if opts.reoptimize_after_quantization and sphere is not None:
            V, gamma = _reoptimize_beamformer(V, u, channels, config, sphere, opts, callback)
        gamma = update_gamma(V, u, channels, config)
        objective = weighted_sum_rate(V, u, channels, config)
    return SolveResult(
        method=method,
        V=V,
        theta=theta,
        gamma=gamma,
        objective=objective,
        objective_trace=trace,
        outer_iterations=len(trace) - 1,
        inner_iterations=inner,
        elapsed=time.perf_counter() - t0,
        quantization=Q,
    )


def _beamformer_alternation(Vhat, u, channels, config, sphere, opts, callback, trace, inner):
    """gamma / Vhat alternation for fixed phases; appends to ``trace`` and ``inner``."""
    V = extract(Vhat, config.power)
    for _ in range(opts.outer_max_iters):
        gamma = update_gamma(V, u, channels, config)
        Vhat, vt = _solve_beamformer(Vhat, u, gamma, channels, config, sphere, opts.beamformer, callback)
        V = extract(Vhat, config.power)
        trace.append(weighted_sum_rate(V, u, channels, config))
        inner.append((vt.iterations_used, 0))
        if _converged(trace[-2], trace[-1], opts.outer_rel_tol):
            break
    return Vhat, V


def _reoptimize_beamformer(V, u, channels, config, sphere, opts, callback):
    trace = [weighted_sum_rate(V, u, channels, config)]
    _, V = _beamformer_alternation(augment(V, config.power), u, channels, config, sphere, opts, callback, trace, [])
    return V, update_gamma(V, u, channels, config)


def dmao(
    channels: ChannelSet,
    config: SystemConfig,
    opts: DmaoOptions = DmaoOptions(),
    rng: Optional[np.random.Generator] = None,
    callback: Optional[Callable[[str, np.ndarray], None]] = None,
    init: Optional[tuple] = None,
) -> SolveResult:
    """Jointly optimize the beamformer and the IRS phases.

    Parameters
    ----------
    channels, config :
        Problem instance.
    opts :
        Outer stopping rule, inner solver options and quantization.
    rng :
        Generator for the random starting point.
    callback :
        Called as ``callback(block, point)`` on every inner iterate, with
        ``block`` either ``"beamformer"`` or ``"reflection"``.
    init :
        Optional ``(Vhat, u)`` starting point overriding the random one.
    """
    t0 = time.perf_counter()
    channels.check(config)
    rng = np.random.default_rng() if rng is None else rng
    sphere = SphereManifold(config.n_antennas + 1, config.n_users)
    oblique = ObliqueManifold(config.n_reflectors)
    if init is None:
        Vhat = sphere.random_point(rng)
        u = oblique.random_point(rng)
    else:
        Vhat, u = init

    V = extract(Vhat, config.power)
    trace = [weighted_sum_rate(V, u, channels, config)]
    inner = []
    for _ in range(opts.outer_max_iters):
        gamma = update_gamma(V, u, channels, config)
        Vhat, vt = _solve_beamformer(Vhat, u, gamma, channels, config, sphere, opts.beamformer, callback)
        V = extract(Vhat, config.power)
        u, ut = _solve_reflection(u, V, gamma, channels, config, oblique, opts.reflection, callback)
        trace.append(weighted_sum_rate(V, u, channels, config))
        inner.append((vt.iterations_used, ut.iterations_used))
        if _converged(trace[-2], trace[-1], opts.outer_rel_tol):
            break
    gamma = update_gamma(V, u, channels, config)
    return _finalize("dmao", V, u, gamma, trace, inner, t0, channels, config, opts, sphere, callback)


def baseline_random(
    channels: ChannelSet,
    config: SystemConfig,
    opts: DmaoOptions = DmaoOptions(),
    rng: Optional[np.random.Generator] = None,
    callback=None,
) -> SolveResult:
    """Random fixed phases; the beamformer is optimized by gamma / sphere alternation."""
    t0 = time.perf_counter()
    channels.check(config)
    rng = np.random.default_rng() if rng is None else rng
    sphere = SphereManifold(config.n_antennas + 1, config.n_users)
    u = ObliqueManifold(config.n_reflectors).random_point(rng)
    Vhat = sphere.random_point(rng)
    trace = [weighted_sum_rate(extract(Vhat, config.power), u, channels, config)]
    inner = []
    _, V = _beamformer_alternation(Vhat, u, channels, config, sphere, opts, callback, trace, inner)
    gamma = update_gamma(V, u, channels, config)
    return _finalize("random", V, u, gamma, trace, inner, t0, channels, config, opts, sphere, callback)


def mrt_beamformer(u, channels: ChannelSet, power: float) -> np.ndarray:
    """``sqrt(P / ||H_eff||_F^2) * H_eff^H`` with ``H_eff`` the stacked cascaded rows."""
    heff = effective_channels(u, channels)
    fro2 = float(np.real(np.vdot(heff, heff)))
    if fro2 == 0.0:
        raise SingularChannelError("MRT with an all-zero effective channel")
    return np.sqrt(power / fro2) * heff.conj().T


def zf_beamformer(u, channels: ChannelSet, power: float) -> np.ndarray:
    """Power-normalized pseudo-inverse of the stacked cascaded channel."""
    heff = effective_channels(u, channels)
    K, N = heff.shape
    if K > N:
        raise SingularChannelError(f"ZF needs K <= N, got K={K}, N={N}")
    if not np.isfinite(cond := np.linalg.cond(heff)) or cond > ZF_MAX_CONDITION:
        raise SingularChannelError(f"effective channel condition number {cond:.3g}")
    gram_inv = np.linalg.inv(heff @ heff.conj().T)
    scale = np.sqrt(power / np.real(np.trace(gram_inv)))
    return scale * heff.conj().T @ gram_inv


def _fixed_rule_alternation(method, rule, channels, config, opts, rng, callback):
    t0 = time.perf_counter()
    channels.check(config)
    rng = np.random.default_rng() if rng is None else rng
    oblique = ObliqueManifold(config.n_reflectors)
    u = oblique.random_point(rng)
    V = rule(u, channels, config.power)
    trace = [weighted_sum_rate(V, u, channels, config)]
    inner = []
    for _ in range(opts.outer_max_iters):
        gamma = update_gamma(V, u, channels, config)
        u, ut = _solve_reflection(u, V, gamma, channels, config, oblique, opts.reflection, callback)
        V = rule(u, channels, config.power)
        trace.append(weighted_sum_rate(V, u, channels, config))
        inner.append((0, ut.iterations_used))
        if _converged(trace[-2], trace[-1], opts.outer_rel_tol):
            break
    gamma = update_gamma(V, u, channels, config)
    # the beamformer is a fixed rule here, so quantization never re-optimizes it
    fixed = replace(opts, reoptimize_after_quantization=False)
    result = _finalize(method, V, u, gamma, trace, inner, t0, channels, config, fixed)
    if opts.quantization is not None and opts.reoptimize_after_quantization:
        result.V = rule(result.u, channels, config.power)
        result.gamma = update_gamma(result.V, result.u, channels, config)
        result.objective = weighted_sum_rate(result.V, result.u, channels, config)
    return result


def baseline_mrt(channels, config, opts: DmaoOptions = DmaoOptions(), rng=None, callback=None) -> SolveResult:
    """MRT beamformer alternated with conjugate-gradient phase updates."""
    return _fixed_rule_alternation("mrt", mrt_beamformer, channels, config, opts, rng, callback)


def baseline_zf(channels, config, opts: DmaoOptions = DmaoOptions(), rng=None, callback=None) -> SolveResult:
    """ZF beamformer alternated with conjugate-gradient phase updates."""
    return _fixed_rule_alternation("zf", zf_beamformer, channels, config, opts, rng, callback)


METHODS = {
    "dmao": dmao,
    "random": baseline_random,
    "mrt": baseline_mrt,
    "zf": baseline_zf,
}
