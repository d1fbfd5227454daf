"""Heat-kernel evaluations, temporal antiderivatives and stable limits.

All functions are pure and accept scalars or numpy arrays (broadcasting);
they back both the matrix assembly and the potential evaluation.  The
first temporal antiderivative is denoted g_dtau, the second g_dtau_dt,
and g_dt = -g_dtau; normal-derivative variants carry the alpha scaling.

The error function is evaluated through scipy.special.erf (the platform
libm behind it is accurate to ~1e-16 relative; anything above 1e-14 would
degrade the stable-limit branch matching).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erf

SQRT_PI = float(np.sqrt(np.pi))


class SingularEvaluationError(ValueError):
    """Kernel requested at a point where no finite limit exists."""


@dataclass(frozen=True)
class KernelParams:
    """Heat capacity constant, time-step width and the geometric scale
    used for the rho -> 0 branch switch."""

    alpha: float
    h_t: float
    length_scale: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.h_t <= 0:
            raise ValueError("h_t must be positive")

    @property
    def delta_eps(self) -> float:
        # below this, erf/exp combinations cancel catastrophically; far
        # below any quadrature accuracy.
        return 1e-14 * self.h_t

    @property
    def rho_eps(self) -> float:
        return 1e-12 * self.length_scale


class TemporalWeightKind(Enum):
    SingleLayer = "single_layer"
    DoubleLayer = "double_layer"
    HypersingularD2 = "hypersingular_d2"


def fundamental(r, dt, alpha: float):
    """Heat fundamental solution G_alpha(r, dt); zero for dt <= 0."""
    r = np.asarray(r, dtype=np.float64)
    dt = np.asarray(dt, dtype=np.float64)
    rho2 = np.sum(r * r, axis=-1)
    dt_safe = np.where(dt > 0, dt, 1.0)
    val = (4.0 * np.pi * alpha * dt_safe) ** -1.5 * np.exp(-rho2 / (4.0 * alpha * dt_safe))
    return np.where(dt > 0, val, 0.0)[()]


def grad_fundamental_normal(r, n_x, dt, alpha: float):
    """alpha * dG_alpha/dn_x (r, dt); zero for dt <= 0.

    This is the manufactured Neumann datum kernel: the sign is opposite
    to the n_y variant because the derivative acts on the first argument.
    """
    r = np.asarray(r, dtype=np.float64)
    n_x = np.asarray(n_x, dtype=np.float64)
    dt = np.asarray(dt, dtype=np.float64)
    rho2 = np.sum(r * r, axis=-1)
    rn = np.sum(r * n_x, axis=-1)
    dt_safe = np.where(dt > 0, dt, 1.0)
    val = (
        -rn
        / (16.0 * (np.pi * alpha) ** 1.5 * dt_safe ** 2.5)
        * np.exp(-rho2 / (4.0 * alpha * dt_safe))
    )
    return np.where(dt > 0, val, 0.0)[()]


def antideriv_tau(rho, delta, params: KernelParams, negate: bool = False):
    """First temporal antiderivative g_dtau(rho, delta); g_dt with negate.

    delta below the branch threshold uses the limit 1/(4 pi alpha rho);
    rho below the threshold (with delta > 0) uses the finite g_dt-style
    limit 1/(4 sqrt(pi^3 alpha^3 delta)).  Both arguments at zero have no
    finite limit and raise.
    """
    a = params.alpha
    rho = np.asarray(rho, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    small_d = delta <= params.delta_eps
    small_r = rho <= params.rho_eps
    if np.any(small_d & small_r):
        raise SingularEvaluationError("g_dtau has no finite limit at rho = delta = 0")
    rho_s = np.where(small_r, 1.0, rho)
    delta_s = np.where(small_d, 1.0, delta)
    general = erf(rho_s / (2.0 * np.sqrt(a * delta_s))) / (4.0 * np.pi * a * rho_s)
    lim_d = 1.0 / (4.0 * np.pi * a * rho_s)
    lim_r = 1.0 / (4.0 * np.sqrt(np.pi ** 3 * a ** 3 * delta_s))
    out = np.where(small_d, lim_d, np.where(small_r, lim_r, general))
    return (-out if negate else out)[()]


def antideriv_tau_t(rho, delta, params: KernelParams):
    """Second temporal antiderivative g_dtau_dt(rho, delta).

    Limits: rho/(8 pi alpha^2) as delta -> 0 and
    sqrt(delta)/(2 sqrt(pi^3 alpha^3)) as rho -> 0; both vanish at the
    origin, which is therefore allowed and returns 0.
    """
    a = params.alpha
    rho = np.asarray(rho, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    small_d = delta <= params.delta_eps
    small_r = rho <= params.rho_eps
    rho_s = np.where(small_r, 1.0, rho)
    delta_s = np.where(small_d, 1.0, delta)
    x = rho_s / (2.0 * np.sqrt(a * delta_s))
    general = (
        (rho_s / (2.0 * a * a) + delta_s / (a * rho_s)) * erf(x)
        + np.sqrt(delta_s) / np.sqrt(np.pi * a ** 3) * np.exp(-x * x)
    ) / (4.0 * np.pi)
    lim_d = rho / (8.0 * np.pi * a * a)
    lim_r = np.sqrt(np.where(small_d, 0.0, delta)) / (2.0 * np.sqrt(np.pi ** 3 * a ** 3))
    out = np.where(small_d, lim_d, np.where(small_r, lim_r, general))
    return out[()]


def normal_deriv_antideriv_tau_t(r, n_y, delta, params: KernelParams):
    """alpha * d(g_dtau_dt)/dn_y; zero limit as rho -> 0 for delta > 0,
    -(r.n_y)/(8 pi alpha rho) as delta -> 0."""
    a = params.alpha
    r = np.asarray(r, dtype=np.float64)
    n_y = np.asarray(n_y, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    rho = np.sqrt(np.sum(r * r, axis=-1))
    rn = np.sum(r * n_y, axis=-1)
    small_d = delta <= params.delta_eps
    small_r = rho <= params.rho_eps
    if np.any(small_d & small_r):
        raise SingularEvaluationError("d(g_dtau_dt)/dn_y undefined at rho = delta = 0")
    rho_s = np.where(small_r, 1.0, rho)
    delta_s = np.where(small_d, 1.0, delta)
    x = rho_s / (2.0 * np.sqrt(a * delta_s))
    general = (
        -(rn / rho_s)
        * (
            (1.0 / (2.0 * a) - delta_s / (rho_s * rho_s)) * erf(x)
            + np.sqrt(delta_s) / (rho_s * np.sqrt(np.pi * a)) * np.exp(-x * x)
        )
        / (4.0 * np.pi)
    )
    lim_d = -rn / (8.0 * np.pi * a * rho_s)
    out = np.where(small_r, 0.0, np.where(small_d, lim_d, general))
    return out[()]


def normal_deriv_antideriv_tau(r, n_y, delta, params: KernelParams):
    """alpha * d(g_dtau)/dn_y; (r.n_y)/(4 pi rho^3) as delta -> 0.

    rho = 0 raises: the delta = 0 branch is the Laplace double-layer
    kernel which has no finite limit there.
    """
    a = params.alpha
    r = np.asarray(r, dtype=np.float64)
    n_y = np.asarray(n_y, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    rho = np.sqrt(np.sum(r * r, axis=-1))
    rn = np.sum(r * n_y, axis=-1)
    small_d = delta <= params.delta_eps
    small_r = rho <= params.rho_eps
    if np.any(small_r & small_d):
        raise SingularEvaluationError("d(g_dtau)/dn_y undefined at rho = 0")
    rho_s = np.where(small_r, 1.0, rho)
    delta_s = np.where(small_d, 1.0, delta)
    x = rho_s / (2.0 * np.sqrt(a * delta_s))
    general = (
        (rn / (rho_s * rho_s))
        * (erf(x) / rho_s - np.exp(-x * x) / np.sqrt(np.pi * a * delta_s))
        / (4.0 * np.pi)
    )
    lim_d = rn / (4.0 * np.pi * rho_s ** 3)
    # rho -> 0 at delta > 0: expansion gives O(rho) * (r.n_y)/rho -> 0.
    out = np.where(small_r, 0.0, np.where(small_d, lim_d, general))
    return out[()]


def temporal_weight(kind: TemporalWeightKind, r, d: int, params: KernelParams, n_y=None):
    """Per-pair temporal weight V^d, K^d or D^{2,d} at displacement r.

    Combines the antiderivatives exactly as in the d = 0 / d >= 1 summary
    formulas; dispatches to the stable branches automatically.
    """
    if d < 0:
        raise ValueError("block index d must be non-negative")
    h = params.h_t
    a = params.alpha
    r = np.asarray(r, dtype=np.float64)
    rho = np.sqrt(np.sum(r * r, axis=-1))

    if kind is TemporalWeightKind.SingleLayer:
        if d == 0:
            return (
                h * antideriv_tau(rho, 0.0, params)
                - antideriv_tau_t(rho, h, params)
                + antideriv_tau_t(rho, 0.0, params)
            )
        return (
            2.0 * antideriv_tau_t(rho, d * h, params)
            - antideriv_tau_t(rho, (d + 1) * h, params)
            - antideriv_tau_t(rho, (d - 1) * h, params)
        )

    if kind is TemporalWeightKind.DoubleLayer:
        if n_y is None:
            raise ValueError("DoubleLayer weight requires the trial normal n_y")
        if d == 0:
            return (
                h * normal_deriv_antideriv_tau(r, n_y, 0.0, params)
                - normal_deriv_antideriv_tau_t(r, n_y, h, params)
                + normal_deriv_antideriv_tau_t(r, n_y, 0.0, params)
            )
        return (
            2.0 * normal_deriv_antideriv_tau_t(r, n_y, d * h, params)
            - normal_deriv_antideriv_tau_t(r, n_y, (d + 1) * h, params)
            - normal_deriv_antideriv_tau_t(r, n_y, (d - 1) * h, params)
        )

    if kind is TemporalWeightKind.HypersingularD2:
        # -alpha [2 g_dt(d h) - g_dt((d+1) h) - g_dt((d-1) h)] with
        # g_dt = -g_dtau, i.e. +alpha times the g_dtau combination.
        if d == 0:
            return a * (
                antideriv_tau(rho, 0.0, params) - antideriv_tau(rho, h, params)
            )
        return a * (
            2.0 * antideriv_tau(rho, d * h, params)
            - antideriv_tau(rho, (d + 1) * h, params)
            - antideriv_tau(rho, (d - 1) * h, params)
        )

    raise ValueError(f"unknown temporal weight kind {kind!r}")
