"""Channel model: problem instances, SIR/power maps, and multi-tone stacking.

An instance has L transmit/receive pairs with positive gain matrix G, noise
powers n, per-user power caps, and a probability weight vector. The SNR gap
is absorbed into the direct gains once at derivation time (``g_ll / gap``)
and never reappears downstream. From the effective gains we build

* ``F``: zero-diagonal normalized interference matrix, ``g_lj / g_ll`` off
  the diagonal,
* ``v``: normalized noise ``n_l / g_ll``,
* ``F_tilde``: ``F`` plus the diagonal ``v_l / cap_l`` (cap-aware relaxation
  matrix),
* ``B[l] = F + outer(v, e_l) / cap_l``: per-user constraint matrices whose
  scaled radii characterize the image of the cap box under the SIR map,
* ``gamma_bar = caps / v``: componentwise SIR ceiling.

The SIR map is ``sir(p) = p / (F p + v)``; its inverse on the region
``{sir >= 0 : rho(diag(sir) F) < 1}`` is
``P(sir) = (I - diag(sir) F)^{-1} (sir * v)``.

Powers are linear (not dB) throughout; rates are in nats.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import spectral
from .exceptions import DegenerateInputError, InfeasibleSirError

__all__ = [
    "ChannelInstance",
    "DerivedMatrices",
    "MultiToneInstance",
    "StackedMultiTone",
    "RegionCheck",
    "derive_matrices",
    "sir_of_power",
    "power_of_sir",
    "in_achievable_region",
    "noiseless_sir",
    "objective",
    "objective_log",
    "objective_gradient_p",
    "stack_multitone",
]


def _vector(x, n, name, *, positive=True) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    if positive and np.any(x <= 0):
        raise ValueError(f"{name} must be entrywise positive")
    return x


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _probability_weights(w, n) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (n,):
        raise ValueError(f"weights must have length {n}, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be nonnegative and finite")
    total = w.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to one (got {total!r})")
    return w / total


@dataclass(frozen=True, eq=False)
class ChannelInstance:
    """Single-carrier interference channel (immutable after construction)."""

    gains: np.ndarray
    noise: np.ndarray
    caps: np.ndarray
    weights: np.ndarray
    snr_gap: float = 1.0

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float)
        if gains.ndim != 2 or gains.shape[0] != gains.shape[1]:
            raise ValueError(f"gains must be square, got shape {gains.shape}")
        n = gains.shape[0]
        if n < 2:
            raise ValueError("an interference channel needs at least two users")
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
            raise ValueError("gains must be entrywise positive and finite")
        object.__setattr__(self, "gains", _frozen(gains))
        object.__setattr__(self, "noise", _frozen(_vector(self.noise, n, "noise")))
        object.__setattr__(self, "caps", _frozen(_vector(self.caps, n, "caps")))
        object.__setattr__(
            self, "weights", _frozen(_probability_weights(self.weights, n))
        )
        gap = float(self.snr_gap)
        if not np.isfinite(gap) or gap < 1.0:
            raise ValueError("snr_gap must be >= 1")
        object.__setattr__(self, "snr_gap", gap)

    @property
    def users(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True, eq=False)
class DerivedMatrices:
    """Interference matrices derived from a channel instance."""

    F: np.ndarray
    v: np.ndarray
    F_tilde: np.ndarray
    B: tuple
    gamma_bar: np.ndarray


_DERIVED_CACHE: "weakref.WeakKeyDictionary[ChannelInstance, DerivedMatrices]"
_DERIVED_CACHE = weakref.WeakKeyDictionary()


def _tone_matrices(gains, noise, gap):
    """Normalized (F, v) for one tone, with the SNR gap absorbed into g_ll."""
    direct = np.diag(gains) / gap
    F = gains / direct[:, None]
    np.fill_diagonal(F, 0.0)
    v = noise / direct
    return F, v


def derive_matrices(inst: ChannelInstance) -> DerivedMatrices:
    """All derived matrices for an instance (cached per instance)."""
    cached = _DERIVED_CACHE.get(inst)
    if cached is not None:
        return cached
    F, v = _tone_matrices(inst.gains, inst.noise, inst.snr_gap)
    F_tilde = F + np.diag(v / inst.caps)
    B = tuple(
        _frozen(F + np.outer(v, np.eye(inst.users)[l]) / inst.caps[l])
        for l in range(inst.users)
    )
    derived = DerivedMatrices(
        F=_frozen(F),
        v=_frozen(v),
        F_tilde=_frozen(F_tilde),
        B=B,
        gamma_bar=_frozen(inst.caps / v),
    )
    _DERIVED_CACHE[inst] = derived
    return derived


def sir_of_power(inst: ChannelInstance, p, *, check_region=True) -> np.ndarray:
    """SIR vector ``p / (F p + v)`` for a nonnegative power vector."""
    der = derive_matrices(inst)
    p = _vector(p, inst.users, "p", positive=False)
    if np.any(p < 0):
        raise ValueError("p must be entrywise nonnegative")
    gamma = p / (der.F @ p + der.v)
    if check_region:
        rho = spectral.spectral_radius(gamma[:, None] * der.F)
        if rho >= 1.0:
            raise RuntimeError(
                f"internal invariant violated: sir_of_power left the region "
                f"(radius {rho!r})"
            )
    return gamma


def power_of_sir(inst: ChannelInstance, gamma) -> np.ndarray:
    """Unique nonnegative power vector realizing an achievable SIR target.

    Solves ``(I - diag(gamma) F) p = gamma * v`` directly. Raises
    :class:`InfeasibleSirError` (carrying the measured radius) when
    ``rho(diag(gamma) F) >= 1``, i.e. the target is outside the region.
    """
    der = derive_matrices(inst)
    gamma = _vector(gamma, inst.users, "gamma", positive=False)
    if np.any(gamma < 0):
        raise ValueError("gamma must be entrywise nonnegative")
    rho = spectral.spectral_radius(gamma[:, None] * der.F)
    if rho >= 1.0:
        raise InfeasibleSirError(
            f"SIR target is infeasible: rho(diag(gamma) F) = {rho!r} >= 1",
            radius=rho,
        )
    p = np.linalg.solve(np.eye(inst.users) - gamma[:, None] * der.F, gamma * der.v)
    return np.maximum(p, 0.0)


class RegionCheck(NamedTuple):
    inside: bool
    active: tuple
    radii: np.ndarray


def in_achievable_region(
    inst: ChannelInstance, gamma, *, inside_tol=1e-9, active_tol=1e-8
) -> RegionCheck:
    """Membership test for the image of the cap box under the SIR map.

    ``gamma`` is achievable with powers in ``[0, caps]`` iff
    ``rho(diag(gamma) B[l]) <= 1`` for every user l; the radius equals one
    exactly at the users whose cap binds.
    """
    der = derive_matrices(inst)
    gamma = _vector(gamma, inst.users, "gamma", positive=False)
    if np.any(gamma < 0):
        raise ValueError("gamma must be entrywise nonnegative")
    radii = np.array(
        [spectral.spectral_radius(gamma[:, None] * B_l) for B_l in der.B]
    )
    inside = bool(np.all(radii <= 1.0 + inside_tol))
    active = tuple(int(l) for l in np.flatnonzero(np.abs(radii - 1.0) <= active_tol))
    return RegionCheck(inside=inside, active=active, radii=radii)


def noiseless_sir(inst: ChannelInstance, p) -> np.ndarray:
    """Noise-free SIR ``beta(p) = p / (F p)``.

    Scale invariant; satisfies ``diag(beta) F p = p`` and
    ``rho(diag(beta) F) = 1``. Needs at least two nonzero powers, otherwise
    an interference denominator vanishes.
    """
    der = derive_matrices(inst)
    p = _vector(p, inst.users, "p", positive=False)
    if np.any(p < 0):
        raise ValueError("p must be entrywise nonnegative")
    if np.count_nonzero(p) < 2:
        raise DegenerateInputError(
            "noiseless SIR needs at least two active users (interference "
            "denominator vanishes otherwise)"
        )
    return p / (der.F @ p)


def objective(weights, gamma) -> float:
    """Weighted sum rate ``sum_l w_l log(1 + gamma_l)`` in nats."""
    weights = np.asarray(weights, dtype=float).reshape(-1)
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    if weights.shape != gamma.shape:
        raise ValueError("weights and gamma must have equal length")
    if np.any(gamma < 0):
        raise ValueError("gamma must be entrywise nonnegative")
    return float(weights @ np.log1p(gamma))


def objective_log(weights, gamma) -> float:
    """Log-SIR objective ``sum_l w_l log gamma_l``; needs positive gamma.

    Always strictly below :func:`objective` at the same point.
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    if weights.shape != gamma.shape:
        raise ValueError("weights and gamma must have equal length")
    if np.any(gamma <= 0):
        raise ValueError("the log-SIR objective requires positive gamma")
    return float(weights @ np.log(gamma))


def objective_gradient_p(inst: ChannelInstance, p) -> np.ndarray:
    """Gradient of the weighted sum rate with respect to powers.

    Uses the Jacobian of the SIR map,
    ``J(p) = diag(1/(F p + v)) (I - diag(sir) F)``, so the gradient is
    ``J(p)^T (w / (1 + sir))``.
    """
    der = derive_matrices(inst)
    p = _vector(p, inst.users, "p", positive=False)
    if np.any(p < 0):
        raise ValueError("p must be entrywise nonnegative")
    denom = der.F @ p + der.v
    gamma = p / denom
    jac = (np.eye(inst.users) - gamma[:, None] * der.F) / denom[:, None]
    return jac.T @ (inst.weights / (1.0 + gamma))


@dataclass(frozen=True, eq=False)
class MultiToneInstance:
    """Synchronous multi-tone channel: per-tone gains/noise, per-user budget.

    Per-slot weights are ``w_l / K`` so the stacked weight vector stays a
    probability vector over all K*L slots.
    """

    gains: np.ndarray  # (K, L, L)
    noise: np.ndarray  # (K, L)
    caps: np.ndarray  # (L,)
    weights: np.ndarray  # (L,)
    snr_gap: float = 1.0

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float)
        if gains.ndim != 3 or gains.shape[1] != gains.shape[2]:
            raise ValueError(
                f"gains must have shape (tones, users, users), got {gains.shape}"
            )
        K, L = gains.shape[0], gains.shape[1]
        if K < 1:
            raise ValueError("need at least one tone")
        if L < 2:
            raise ValueError("an interference channel needs at least two users")
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
            raise ValueError("gains must be entrywise positive and finite")
        noise = np.asarray(self.noise, dtype=float)
        if noise.shape != (K, L):
            raise ValueError(f"noise must have shape ({K}, {L}), got {noise.shape}")
        if not np.all(np.isfinite(noise)) or np.any(noise <= 0):
            raise ValueError("noise must be entrywise positive and finite")
        object.__setattr__(self, "gains", _frozen(gains))
        object.__setattr__(self, "noise", _frozen(noise))
        object.__setattr__(self, "caps", _frozen(_vector(self.caps, L, "caps")))
        object.__setattr__(
            self, "weights", _frozen(_probability_weights(self.weights, L))
        )
        gap = float(self.snr_gap)
        if not np.isfinite(gap) or gap < 1.0:
            raise ValueError("snr_gap must be >= 1")
        object.__setattr__(self, "snr_gap", gap)

    @property
    def users(self) -> int:
        return self.gains.shape[1]

    @property
    def tones(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True, eq=False)
class StackedMultiTone:
    """Stacked (K*L)-dimensional problem data for a multi-tone instance.

    Slot order is user-major: slot ``l*K + k`` carries user l on tone k.
    ``B[l]`` sums the rank-one noise terms over user l's K slots, matching
    the per-user budget constraint ``rho(diag(sir) B[l]) <= 1``.
    """

    users: int
    tones: int
    F: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    caps: np.ndarray
    B: tuple
    gamma_bar: np.ndarray


def stack_multitone(mt: MultiToneInstance, interference=None) -> StackedMultiTone:
    """Stack a multi-tone instance into one (K*L)-dimensional problem.

    With synchronous tones the stacked interference matrix couples only
    same-tone slots (zero cross-tone entries; block diagonal up to the
    tone-grouping permutation). Pass ``interference`` to supply an explicit
    stacked matrix with cross-tone coupling instead; it must be nonnegative
    with a zero diagonal and is substituted before the per-user constraint
    matrices are formed.
    """
    L, K = mt.users, mt.tones
    KL = K * L
    F = np.zeros((KL, KL))
    v = np.zeros(KL)
    for k in range(K):
        slots = np.arange(L) * K + k
        F_k, v_k = _tone_matrices(mt.gains[k], mt.noise[k], mt.snr_gap)
        F[np.ix_(slots, slots)] = F_k
        v[slots] = v_k
    if interference is not None:
        override = np.asarray(interference, dtype=float)
        if override.shape != (KL, KL):
            raise ValueError(
                f"interference override must have shape ({KL}, {KL}), "
                f"got {override.shape}"
            )
        if not np.all(np.isfinite(override)) or np.any(override < 0):
            raise ValueError("interference override must be nonnegative and finite")
        if np.any(np.diag(override) != 0):
            raise ValueError("interference override must have a zero diagonal")
        F = override.copy()
    weights = np.repeat(mt.weights / K, K)
    caps_per_slot = np.repeat(mt.caps, K)
    B = []
    for l in range(L):
        indicator = np.zeros(KL)
        indicator[l * K : (l + 1) * K] = 1.0
        B.append(_frozen(F + np.outer(v, indicator) / mt.caps[l]))
    return StackedMultiTone(
        users=L,
        tones=K,
        F=_frozen(F),
        v=_frozen(v),
        weights=_frozen(weights),
        caps=_frozen(mt.caps),
        B=tuple(B),
        gamma_bar=_frozen(caps_per_slot / v),
    )
