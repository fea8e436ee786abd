"""Heisenberg evolution, smeared evolution, and Lieb-Robinson bounds.

The convention is fixed once: tau_{s,t}(A) evolves A from time s to time t,
and for time-independent H

    tau_{s,t}(A) = e^{i H (t-s)} A e^{-i H (t-s)},

so tau_t(sigma_x) = cos(w t) sigma_x - sin(w t) sigma_y under
H = (w/2) sigma_z.  Time-dependent evolutions integrate the propagator
W' = i W H(t), W(s) = 1, with classical fixed-step RK4; then
tau_{s,t}(A) = W A W^dagger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .algebra import commutator, schatten_norm

__all__ = [
    "EvolutionSpec",
    "evolve",
    "propagator",
    "smear",
    "LRParams",
    "make_lr_params",
    "lr_decay_profile",
    "lr_bound",
    "measured_commutator_curve",
    "lr_experiment",
    "LRExperimentResult",
]

# fixed-step RK4 keeps the local phase error below ~1e-11 per step when
# h * ||H|| stays under this cap
_RK4_ANGLE_CAP = 0.02


class EvolutionSpec:
    """How to evolve: exactly in an eigenbasis, or by ODE stepping.

    Use `EvolutionSpec.spectral(sd)` for time-independent Hamiltonians with
    a precomputed eigendecomposition, and `EvolutionSpec.ode(phi, step)`
    for interaction paths, where `step` is the RK4 step size in time.
    """

    def __init__(self, kind, spectral_data=None, interaction=None, step=None):
        self.kind = kind
        self.spectral_data = spectral_data
        self.interaction = interaction
        self.step = step

    @classmethod
    def spectral(cls, sd):
        return cls("spectral", spectral_data=sd)

    @classmethod
    def ode(cls, phi, step=0.005):
        if step <= 0:
            raise ValueError("step must be positive")
        return cls("ode", interaction=phi, step=float(step))


def _rk4_step(W, t, h, ham_at):
    k1 = 1j * W @ ham_at(t)
    k2 = 1j * (W + 0.5 * h * k1) @ ham_at(t + 0.5 * h)
    k3 = 1j * (W + 0.5 * h * k2) @ ham_at(t + 0.5 * h)
    k4 = 1j * (W + h * k3) @ ham_at(t + h)
    return W + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def propagator(spec, s, t):
    """W with tau_{s,t}(A) = W A W^dagger."""
    if spec.kind == "spectral":
        sd = spec.spectral_data
        phases = np.exp(1j * sd.energies * (t - s))
        V = np.asarray(sd.vectors, dtype=complex)
        return (V * phases) @ V.conj().T
    phi = spec.interaction
    dim = phi.dim
    W = np.eye(dim, dtype=complex)
    if t == s:
        return W
    span = t - s
    n_steps = max(1, math.ceil(abs(span) / spec.step))
    h = span / n_steps
    ham_at = phi.hamiltonian
    x = s
    for _ in range(n_steps):
        W = _rk4_step(W, x, h, ham_at)
        x += h
    return W


def evolve(spec, A, s, t):
    """Heisenberg evolution tau_{s,t}(A)."""
    if spec.kind == "spectral":
        sd = spec.spectral_data
        A_tilde = sd.to_eigenbasis(A)
        phase = np.exp(1j * sd.frequency_table() * (t - s))
        return sd.from_eigenbasis(phase * A_tilde)
    W = propagator(spec, s, t)
    return W @ A @ W.conj().T


def smear(spec, filt, A, t_max=None, nodes_per_unit=None):
    """Filtered evolution tau_f(A) = int f(t) tau_{0,t}(A) dt.

    Composite Simpson quadrature on [-T, T] with T chosen from the filter
    tail bound so the truncation error is below 1e-10 ||A|| int|f|.
    """
    T = filt.t_max() if t_max is None else float(t_max)
    density = filt.nodes_per_unit if nodes_per_unit is None else nodes_per_unit
    n_half = max(2, math.ceil(T * density))
    ts = np.linspace(-T, T, 2 * n_half + 1)
    weights = np.asarray(filt(ts), dtype=float)

    if spec.kind == "spectral":
        sd = spec.spectral_data
        A_tilde = sd.to_eigenbasis(A)
        omega = sd.frequency_table()
        # scalar quadrature of the phase factor per frequency
        kernel = simpson(
            weights[:, None] * np.exp(1j * np.outer(ts, omega.ravel())),
            x=ts,
            axis=0,
        ).reshape(omega.shape)
        return sd.from_eigenbasis(kernel * A_tilde)

    values = np.empty((ts.size,) + A.shape, dtype=complex)
    h = ts[1] - ts[0]
    phi = spec.interaction
    n_sub = max(1, math.ceil(h / spec.step))
    mid = n_half
    values[mid] = A
    W = np.eye(A.shape[0], dtype=complex)
    for j in range(mid + 1, ts.size):
        for k in range(n_sub):
            W = _rk4_step(W, ts[j - 1] + k * h / n_sub, h / n_sub, phi.hamiltonian)
        values[j] = W @ A @ W.conj().T
    W = np.eye(A.shape[0], dtype=complex)
    for j in range(mid - 1, -1, -1):
        for k in range(n_sub):
            W = _rk4_step(W, ts[j + 1] - k * h / n_sub, -h / n_sub, phi.hamiltonian)
        values[j] = W @ A @ W.conj().T
    return simpson(weights[:, None, None] * values, x=ts, axis=0)


@dataclass(frozen=True)
class LRParams:
    """Constants entering the Lieb-Robinson bound.

    velocity = 2 C_{1, b'-b} ||Phi||_{b'} / b with C from the calling
    graph's volume data, and the prefactor uses the same constant inverted.
    """

    b: float
    b_prime: float
    phi_norm: float
    constant: float

    def __post_init__(self):
        if not 0 < self.b < self.b_prime:
            raise ValueError("need 0 < b < b_prime")

    @property
    def velocity(self):
        return 2.0 * self.constant * self.phi_norm / self.b


def make_lr_params(phi, b=0.5, b_prime=1.0, t_samples=21):
    """LR constants for an interaction at decay pair (b, b')."""
    if not 0 < b < b_prime:
        raise ValueError("need 0 < b < b_prime")
    norm = phi.norm(b_prime, t_samples)
    const = phi.graph.c_bk(1.0, b_prime - b)
    return LRParams(b, b_prime, norm, const)


def lr_decay_profile(X, Y, b):
    """D(X, Y) = min of the two one-sided exponential overlap sums."""
    dx = np.array([Y.site_distance(x) for x in X.sites])
    dy = np.array([X.site_distance(y) for y in Y.sites])
    return float(min(np.exp(-b * dx).sum(), np.exp(-b * dy).sum()))


def lr_bound(params, X, Y, norm_a, norm_b, dt):
    """Commutator bound 2 C^{-1} ||A|| ||B|| (e^{b v |dt|} - 1) D(X, Y)."""
    prof = lr_decay_profile(X, Y, params.b)
    growth = math.expm1(params.b * params.velocity * abs(dt))
    return 2.0 / params.constant * norm_a * norm_b * growth * prof


@dataclass
class LRExperimentResult:
    times: np.ndarray
    measured: np.ndarray
    bounds: np.ndarray

    @property
    def holds(self):
        return bool((self.measured <= self.bounds + 1e-12).all())

    @property
    def min_ratio(self):
        with np.errstate(divide="ignore"):
            ratios = np.where(self.measured > 0, self.bounds / self.measured, np.inf)
        return float(ratios.min())

    @property
    def min_margin(self):
        return float((self.bounds - self.measured).min())


def measured_commutator_curve(spec, A, B, times, n_sites=None):
    """||[tau_{0,t}(A), B]||_inf on a time grid for local A and B."""
    if n_sites is None:
        if spec.kind == "spectral":
            n_sites = int(round(np.log2(spec.spectral_data.dim)))
        else:
            n_sites = spec.interaction.n_sites
    A_full = A.embed(n_sites)
    B_full = B.embed(n_sites)
    times = np.asarray(times, dtype=float)
    measured = np.empty(times.size)
    for i, t in enumerate(times):
        At = evolve(spec, A_full, 0.0, t)
        measured[i] = schatten_norm(commutator(At, B_full), np.inf)
    return measured


def lr_experiment(spec, params, A, B, X, Y, times):
    """Measured commutator norms against the LR bound on a time grid.

    A and B are LocalOperators supported in the regions X and Y.
    """
    measured = measured_commutator_curve(spec, A, B, times)
    na = A.norm(np.inf)
    nb = B.norm(np.inf)
    times = np.asarray(times, dtype=float)
    bounds = np.array([lr_bound(params, X, Y, na, nb, t) for t in times])
    return LRExperimentResult(times, measured, bounds)
