"""Lindblad models, master-equation integration and entropy functionals.

Units: hbar = k_B = 1.  Energies, frequencies and rates share one reference
frequency; entropies are in nats.

A model is specified by a free Hamiltonian ``h0``, a constant perturbation
``hp`` and a list of decay channels.  Each channel carries a lowering
operator ``A-`` that must be an eigen-operator of ``h0``,
``[h0, A-] = -omega A-``; the raising partner is ``A+ = (A-)^dagger`` and the
upward rate follows from detailed balance, ``gamma+ = gamma- exp(-omega/T)``.

In the interaction picture ``h0`` is kept on the model for validation and
for the Gibbs state but does not enter the generator.  Entropy, flux and
production rate are unaffected by the choice of picture.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import operators as ops
from .exceptions import (
    IntegrationError,
    ModelValidationError,
    NoStationaryStateError,
    ValidationError,
)

EIGEN_OPERATOR_TOL = 1e-9
PICTURES = ("schroedinger", "interaction")


@dataclass(frozen=True, eq=False)
class DecayChannel:
    """One dissipation channel: lowering operator, Bohr frequency, rates."""

    lower: np.ndarray
    omega: float
    gamma_minus: float
    gamma_plus: float
    entropy_quantum: float

    @property
    def raise_(self) -> np.ndarray:
        return ops.dagger(self.lower)

    def operator(self, direction: str) -> np.ndarray:
        if direction == "minus":
            return self.lower
        if direction == "plus":
            return self.raise_
        raise ValidationError(f"direction must be 'minus' or 'plus', got {direction!r}")

    def rate(self, direction: str) -> float:
        if direction == "minus":
            return self.gamma_minus
        if direction == "plus":
            return self.gamma_plus
        raise ValidationError(f"direction must be 'minus' or 'plus', got {direction!r}")


@dataclass(frozen=True, eq=False)
class LindbladModel:
    dim: int
    h0: np.ndarray
    hp: np.ndarray
    channels: tuple[DecayChannel, ...]
    temperature: float
    picture: str
    h_eff: np.ndarray = field(repr=False)

    @property
    def hamiltonian(self) -> np.ndarray:
        """Hermitian part of the generator in the model's picture."""
        if self.picture == "interaction":
            return self.hp
        return self.h0 + self.hp

    def jump_terms(self) -> list[tuple[int, str, float, np.ndarray]]:
        """All ``(channel, direction, rate, operator)`` in channel order, minus first."""
        out = []
        for i, ch in enumerate(self.channels):
            out.append((i, "minus", ch.gamma_minus, ch.lower))
            out.append((i, "plus", ch.gamma_plus, ch.raise_))
        return out

    def max_rate(self) -> float:
        """Largest frequency scale: total decay rate or Hamiltonian norm."""
        decay = sum(ch.gamma_minus + ch.gamma_plus for ch in self.channels)
        h = self.hamiltonian
        h_scale = float(np.max(np.abs(ops.hermitian_eigen(h)[0]))) if h.size else 0.0
        return max(decay, h_scale)


def upward_rate(gamma_minus: float, omega: float, temperature: float) -> float:
    if temperature == 0.0:
        return 0.0
    return gamma_minus * math.exp(-omega / temperature)


def build_model(
    h0,
    hp,
    channels: Sequence[tuple],
    temperature: float,
    picture: str = "interaction",
) -> LindbladModel:
    """Assemble and validate a Lindblad model.

    Parameters
    ----------
    h0, hp : array_like
        Free Hamiltonian and (constant) perturbation, both Hermitian.
    channels : sequence of (lower, omega, gamma_minus)
        Lowering operator, Bohr frequency ``omega > 0`` and downward rate.
    temperature : float
        Reservoir temperature ``T >= 0``.
    picture : {"interaction", "schroedinger"}

    Raises
    ------
    ModelValidationError
        When a lowering operator is not an eigen-operator of ``h0`` at the
        stated frequency, or a Hamiltonian is not Hermitian.
    """
    h0 = ops.as_operator(h0, "h0")
    hp = ops.as_operator(hp, "hp")
    if h0.shape != hp.shape:
        raise ValidationError(f"h0 and hp shapes differ: {h0.shape} vs {hp.shape}")
    for name, h in (("h0", h0), ("hp", hp)):
        if not ops.is_hermitian(h, ops.HERMITIAN_TOL):
            raise ModelValidationError(f"{name} is not Hermitian")
    if picture not in PICTURES:
        raise ValidationError(f"picture must be one of {PICTURES}, got {picture!r}")
    temperature = float(temperature)
    if not (temperature >= 0.0 and math.isfinite(temperature)):
        raise ValidationError(f"temperature must be finite and >= 0, got {temperature}")

    dim = h0.shape[0]
    built = []
    for i, spec in enumerate(channels):
        lower, omega, gamma_minus = spec
        lower = ops.as_operator(lower, f"channel {i} lowering operator")
        if lower.shape != h0.shape:
            raise ValidationError(f"channel {i}: operator shape {lower.shape} != {h0.shape}")
        omega = float(omega)
        gamma_minus = float(gamma_minus)
        if not omega > 0.0:
            raise ValidationError(f"channel {i}: omega must be > 0, got {omega}")
        if not gamma_minus >= 0.0:
            raise ValidationError(f"channel {i}: gamma_minus must be >= 0, got {gamma_minus}")
        violation = float(np.max(np.abs(ops.commutator(h0, lower) + omega * lower)))
        if violation > EIGEN_OPERATOR_TOL:
            raise ModelValidationError(
                f"channel {i}: lowering operator is not an eigen-operator of h0 at "
                f"omega={omega!r} (|[h0,A-] + omega A-|_max = {violation:.3e})"
            )
        gamma_plus = upward_rate(gamma_minus, omega, temperature)
        quantum = omega / temperature if temperature > 0.0 else math.inf
        lower = lower.copy()
        lower.setflags(write=False)
        built.append(DecayChannel(lower, omega, gamma_minus, gamma_plus, quantum))

    h_herm = hp if picture == "interaction" else h0 + hp
    damping = np.zeros_like(h0)
    for ch in built:
        a_m = ch.lower
        a_p = ch.raise_
        damping += ch.gamma_minus * (a_p @ a_m) + ch.gamma_plus * (a_m @ a_p)
    h_eff = h_herm - 0.5j * damping

    for a in (h0, hp, h_eff):
        a.setflags(write=False)
    return LindbladModel(dim, h0.copy(), hp.copy(), tuple(built), temperature, picture, h_eff)


def _check_dims(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    r = ops.as_operator(rho, "rho")
    if r.shape != (model.dim, model.dim):
        raise ValidationError(f"rho has shape {r.shape}, model dimension is {model.dim}")
    return r


def dissipator(model: LindbladModel, rho) -> np.ndarray:
    """Dissipative part ``D(rho)`` of the generator."""
    r = _check_dims(model, rho)
    out = np.zeros_like(r)
    for _, _, rate, a in model.jump_terms():
        if rate == 0.0:
            continue
        ad = ops.dagger(a)
        ada = ad @ a
        out += rate * (a @ r @ ad - 0.5 * (ada @ r + r @ ada))
    return out


def liouvillian_apply(model: LindbladModel, rho) -> np.ndarray:
    """Full generator ``-i[H, rho] + D(rho)`` with ``H`` from the model's picture."""
    r = _check_dims(model, rho)
    return -1j * ops.commutator(model.hamiltonian, r) + dissipator(model, r)


def liouvillian_matrix(model: LindbladModel) -> np.ndarray:
    """Generator as a ``d^2 x d^2`` matrix acting on row-major ``rho.ravel()``.

    Columns are obtained by applying :func:`liouvillian_apply` to matrix
    units, so the matrix inherits that function's conventions exactly.
    """
    d = model.dim
    out = np.empty((d * d, d * d), dtype=np.complex128)
    unit = np.zeros((d, d), dtype=np.complex128)
    for k in range(d * d):
        unit.flat[k] = 1.0
        out[:, k] = liouvillian_apply(model, unit).ravel()
        unit.flat[k] = 0.0
    return out


def _rk4_step(lmat: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    k1 = lmat @ v
    k2 = lmat @ (v + 0.5 * h * k1)
    k3 = lmat @ (v + 0.5 * h * k2)
    k4 = lmat @ (v + h * k3)
    return v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _tidy(v: np.ndarray, d: int) -> np.ndarray:
    r = v.reshape(d, d)
    if np.max(np.abs(r - ops.dagger(r))) > 1e-12:
        r = 0.5 * (r + ops.dagger(r))
    tr = np.trace(r).real
    if abs(tr - 1.0) > 1e-12:
        r = r / tr
    return r.ravel()


def integrate_master(model: LindbladModel, rho0, t_grid, dt: float = 1e-3) -> list[np.ndarray]:
    """Classical RK4 for ``d rho/dt = L(rho)``, reporting ``rho`` on ``t_grid``.

    Between consecutive output times the interval is split into the fewest
    equal steps no longer than ``dt``.  Positivity is checked at every output
    time; an eigenvalue below ``-1e-6`` raises :class:`IntegrationError`.
    """
    if not dt > 0.0:
        raise ValidationError("dt must be positive")
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] != 0.0:
        raise ValidationError("t_grid must be a non-empty list starting at 0")
    if np.any(np.diff(grid) <= 0.0):
        raise ValidationError("t_grid must be strictly increasing")
    rho = ops.validate_density(_check_dims(model, rho0))
    d = model.dim
    lmat = liouvillian_matrix(model)
    v = rho.ravel().copy()
    out = [rho.copy()]
    for t_prev, t_next in zip(grid[:-1], grid[1:]):
        span = t_next - t_prev
        n = max(1, math.ceil(span / dt - 1e-9))
        h = span / n
        with np.errstate(all="ignore"):
            for _ in range(n):
                v = _tidy(_rk4_step(lmat, v, h), d)
        if not np.all(np.isfinite(v)):
            raise IntegrationError(f"integration diverged before t={t_next:g}; reduce dt")
        r = v.reshape(d, d).copy()
        lam_min = ops.hermitian_eigen(r)[0][0]
        if lam_min < -1e-6:
            raise IntegrationError(
                f"positivity lost at t={t_next:g} (min eigenvalue {lam_min:.3e}); reduce dt"
            )
        out.append(r)
    return out


def gibbs_state(model: LindbladModel) -> np.ndarray:
    """Thermal state ``exp(-h0/T)/Z``."""
    if not model.temperature > 0.0:
        raise ValidationError("gibbs_state requires temperature > 0")
    evals, vecs = ops.hermitian_eigen(model.h0)
    w = np.exp(-(evals - evals[0]) / model.temperature)
    w = w / np.sum(w)
    rho = (vecs * w) @ ops.dagger(vecs)
    return 0.5 * (rho + ops.dagger(rho))


def log_gibbs_state(model: LindbladModel) -> np.ndarray:
    """``ln rho_th = -h0/T - ln Z`` evaluated without a matrix logarithm."""
    if not model.temperature > 0.0:
        raise ValidationError("log_gibbs_state requires temperature > 0")
    evals, _ = ops.hermitian_eigen(model.h0)
    shifted = -(evals - evals[0]) / model.temperature
    log_z = -evals[0] / model.temperature + math.log(float(np.sum(np.exp(shifted))))
    return -model.h0 / model.temperature - log_z * np.eye(model.dim)


def stationary_state(
    model: LindbladModel,
    tol: float = 1e-10,
    dt: float | None = None,
) -> np.ndarray:
    """Stationary state by long-time RK4 integration from the maximally mixed state.

    Integration stops once ``max|L(rho)| <= tol``.  The time cap is
    ``1e3 / (smallest positive rate)``.  Steps are taken in blocks: the RK4
    one-step map of a linear autonomous equation is a fixed matrix, so a
    block of ``n`` steps is applied as its ``n``-th power.
    """
    rates = [r for ch in model.channels for r in (ch.gamma_minus, ch.gamma_plus) if r > 0.0]
    if not model.channels or not rates:
        raise ValidationError("stationary_state needs at least one channel with a positive rate")
    t_cap = 1e3 / min(rates)
    scale = model.max_rate()
    h = dt if dt is not None else 0.05 / scale
    d = model.dim
    lmat = liouvillian_matrix(model)
    eye = np.eye(d * d, dtype=np.complex128)
    hl = h * lmat
    step = eye + hl + hl @ hl / 2.0 + hl @ hl @ hl / 6.0 + hl @ hl @ hl @ hl / 24.0
    block_steps = max(1, int(round(1.0 / (scale * h))))
    block = np.linalg.matrix_power(step, block_steps)
    v = ops.maximally_mixed(d).ravel()
    t = 0.0
    while True:
        residual = float(np.max(np.abs(lmat @ v)))
        if residual <= tol:
            break
        if t > t_cap:
            raise NoStationaryStateError(
                f"no stationary state reached by t={t_cap:g} (residual {residual:.3e})"
            )
        v = _tidy(block @ v, d)
        t += block_steps * h
    rho = v.reshape(d, d).copy()
    return 0.5 * (rho + ops.dagger(rho))


def _require_temperature(model: LindbladModel, what: str) -> None:
    if not model.temperature > 0.0:
        raise ValidationError(f"{what} is undefined at T = 0")


def entropy_flux(model: LindbladModel, rho) -> float:
    """Entropy flux into the reservoir, ``sum_i (omega_i/T) tr{g- A+A- rho - g+ A-A+ rho}``."""
    _require_temperature(model, "entropy flux")
    r = _check_dims(model, rho)
    total = 0.0
    for ch in model.channels:
        a_m = ch.lower
        a_p = ch.raise_
        net = ch.gamma_minus * np.trace(a_p @ a_m @ r) - ch.gamma_plus * np.trace(a_m @ a_p @ r)
        total += ch.omega / model.temperature * net.real
    return float(total)


def energy_dissipation(model: LindbladModel, rho) -> float:
    """``tr{h0 D(rho)}``, the heat current out of the reservoir."""
    return float(np.trace(model.h0 @ dissipator(model, rho)).real)


def entropy_rate(model: LindbladModel, rho, floor: float = ops.LOG_FLOOR) -> float:
    """Dissipative entropy change ``-tr{D(rho) ln rho}``."""
    log_rho = ops.matrix_log_on_support(_check_dims(model, rho), floor)
    return float(-np.trace(dissipator(model, rho) @ log_rho).real)


def unitary_entropy_rate(model: LindbladModel, rho, floor: float = ops.LOG_FLOOR) -> float:
    """``-tr{-i[H, rho] ln rho}``; zero up to rounding for any state."""
    r = _check_dims(model, rho)
    log_rho = ops.matrix_log_on_support(r, floor)
    return float(-np.trace(-1j * ops.commutator(model.hamiltonian, r) @ log_rho).real)


def entropy_production_functional(model: LindbladModel, rho, floor: float = ops.LOG_FLOOR) -> float:
    """Entropy production rate ``-tr{D(rho)(ln rho - ln rho_th)}``.

    Non-negative and convex in ``rho``; it vanishes at the Gibbs state.  For
    singular ``rho`` the logarithm is floored (see :mod:`.operators`).
    """
    _require_temperature(model, "entropy production")
    r = _check_dims(model, rho)
    diff = ops.matrix_log_on_support(r, floor) - log_gibbs_state(model)
    return float(-np.trace(dissipator(model, r) @ diff).real)


def entropy_curves(model: LindbladModel, rhos: Sequence[np.ndarray]) -> dict[str, np.ndarray]:
    """Entropy ``S``, flux ``J`` and production ``sigma`` along a state sequence."""
    s = np.array([ops.von_neumann_entropy(r) for r in rhos])
    j = np.array([entropy_flux(model, r) for r in rhos])
    sigma = np.array([entropy_production_functional(model, r) for r in rhos])
    return {"S": s, "J": j, "sigma": sigma}


def expected_counts(model: LindbladModel, t_grid, rhos: Sequence[np.ndarray]) -> np.ndarray:
    """Mean jump counts ``E[N_i^±](t)`` from the master equation.

    Cumulative trapezoidal integral of ``gamma ||A psi||^2`` averaged over
    ``rho``, i.e. ``gamma tr{A^dagger A rho}``.  Shape ``(len(t_grid), n_channels, 2)``
    with direction index 0 = minus, 1 = plus.
    """
    t = np.asarray(t_grid, dtype=float)
    n_ch = len(model.channels)
    rates = np.zeros((len(rhos), n_ch, 2))
    for k, r in enumerate(rhos):
        for i, ch in enumerate(model.channels):
            a_m = ch.lower
            a_p = ch.raise_
            rates[k, i, 0] = ch.gamma_minus * np.trace(a_p @ a_m @ r).real
            rates[k, i, 1] = ch.gamma_plus * np.trace(a_m @ a_p @ r).real
    out = np.zeros_like(rates)
    if len(t) > 1:
        steps = 0.5 * (rates[1:] + rates[:-1]) * np.diff(t)[:, None, None]
        out[1:] = np.cumsum(steps, axis=0)
    return out
