"""The driven qubit and the Lambda system, with their closed-form rates.

Both models are built in the interaction picture with the drive treated in
the rotating-wave approximation, so the perturbation is time independent.
Rates and the Rabi frequency are in units of one reference frequency; the
absolute Bohr frequency ``omega`` (default 1) only fixes the temperature
through ``omega_over_t`` and enters the eigen-operator check.

``omega_over_t = math.inf`` means a zero-temperature reservoir.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .exceptions import ValidationError
from .lindblad import LindbladModel, build_model, upward_rate

# basis (|e>, |g>)
QUBIT_E, QUBIT_G = 0, 1
# basis (|e,0>, |g,+1>, |g,-1>)
LAMBDA_E0, LAMBDA_GP, LAMBDA_GM = 0, 1, 2


def _check_params(rabi: float, gamma_minus: float, omega_over_t: float) -> None:
    if not (math.isfinite(rabi) and rabi >= 0.0):
        raise ValidationError(f"rabi must be finite and >= 0, got {rabi}")
    if not (math.isfinite(gamma_minus) and gamma_minus >= 0.0):
        raise ValidationError(f"gamma_minus must be finite and >= 0, got {gamma_minus}")
    if not omega_over_t > 0.0:
        raise ValidationError(f"omega_over_t must be > 0, got {omega_over_t}")


@dataclass(frozen=True)
class QubitParams:
    rabi: float = 1.0
    gamma_minus: float = 0.1
    omega_over_t: float = 1.0

    def __post_init__(self):
        _check_params(self.rabi, self.gamma_minus, self.omega_over_t)

    @property
    def gamma_plus(self) -> float:
        return self.gamma_minus * math.exp(-self.omega_over_t)


@dataclass(frozen=True)
class LambdaParams:
    rabi: float = 1.0
    gamma_minus: float = 1.0
    omega_over_t: float = 1.25

    def __post_init__(self):
        _check_params(self.rabi, self.gamma_minus, self.omega_over_t)

    @property
    def gamma_plus(self) -> float:
        return self.gamma_minus * math.exp(-self.omega_over_t)


def _temperature(omega: float, omega_over_t: float) -> float:
    return 0.0 if math.isinf(omega_over_t) else omega / omega_over_t


def _ket_bra(dim: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[i, j] = 1.0
    return m


def driven_qubit(p: QubitParams, omega: float = 1.0, channel_omega: float | None = None,
                 picture: str = "interaction") -> LindbladModel:
    """Resonantly driven two-level system coupled to a thermal bath.

    ``channel_omega`` overrides the frequency declared on the decay channel
    (default: ``omega``); a mismatch makes model validation fail.
    """
    lower = _ket_bra(2, QUBIT_G, QUBIT_E)
    h0 = np.diag([omega / 2.0, -omega / 2.0]).astype(np.complex128)
    hp = -(p.rabi / 2.0) * (lower + ops.dagger(lower))
    w = omega if channel_omega is None else channel_omega
    return build_model(h0, hp, [(lower, w, p.gamma_minus)], _temperature(omega, p.omega_over_t), picture)


def lambda_system(p: LambdaParams, omega: float = 1.0, channel_omega: float | None = None,
                  picture: str = "interaction") -> LindbladModel:
    """Three-level Lambda configuration with two degenerate decay channels."""
    r = 1.0 / math.sqrt(2.0)
    lower_1 = r * _ket_bra(3, LAMBDA_GM, LAMBDA_E0)
    lower_2 = r * _ket_bra(3, LAMBDA_GP, LAMBDA_E0)
    h0 = np.diag([omega, 0.0, 0.0]).astype(np.complex128)
    half = p.rabi / 2.0
    hp = np.array(
        [
            [0.0, -1j * half, 1j * half],
            [1j * half, 0.0, 0.0],
            [-1j * half, 0.0, 0.0],
        ],
        dtype=np.complex128,
    )
    w = omega if channel_omega is None else channel_omega
    channels = [(lower_1, w, p.gamma_minus), (lower_2, w, p.gamma_minus)]
    return build_model(h0, hp, channels, _temperature(omega, p.omega_over_t), picture)


def stationary_sigma_qubit(p: QubitParams) -> float:
    """Closed-form stationary entropy production of the driven qubit (units of the Rabi frequency scale)."""
    gm = p.gamma_minus
    gp = 0.0 if math.isinf(p.omega_over_t) else p.gamma_plus
    if p.rabi == 0.0 or gm == gp:
        return 0.0
    if math.isinf(p.omega_over_t):
        return math.inf
    gamma = gm + gp
    return p.omega_over_t * (gm - gp) / (2.0 + (gamma / p.rabi) ** 2)


def stationary_inversion_qubit(p: QubitParams) -> float:
    """Stationary inversion ``rho_ee - rho_gg`` of the driven qubit."""
    gm = p.gamma_minus
    gp = 0.0 if math.isinf(p.omega_over_t) else p.gamma_plus
    gamma = gm + gp
    if gamma == 0.0:
        raise ValidationError("inversion is undefined without damping")
    return -(gm - gp) * gamma / (gamma ** 2 + 2.0 * p.rabi ** 2)


def qubit_inversion(rho) -> float:
    r = np.asarray(rho)
    return float((r[QUBIT_E, QUBIT_E] - r[QUBIT_G, QUBIT_G]).real)


def stationary_coherence_lambda(p: LambdaParams) -> float:
    """Closed-form ``rho_23 = <g,+1|rho_s|g,-1>`` of the Lambda system."""
    gm = p.gamma_minus
    gp = 0.0 if math.isinf(p.omega_over_t) else p.gamma_plus
    if p.rabi == 0.0:
        # undriven: nothing feeds the ground-state coherence
        return 0.0
    den = 2.0 * gm + 4.0 * gp + (gp / p.rabi ** 2) * (gm + gp / 2.0) ** 2
    return (gm - gp) / den


def stationary_sigma_lambda(p: LambdaParams) -> float:
    """Closed-form stationary entropy production of the Lambda system.

    Exactly zero at ``T = 0`` (``omega_over_t = inf``) and at zero drive.
    """
    if math.isinf(p.omega_over_t) or p.rabi == 0.0:
        return 0.0
    return p.omega_over_t * p.gamma_plus * stationary_coherence_lambda(p)


def dark_state() -> np.ndarray:
    """``(|g,+1> + |g,-1>)/sqrt(2)`` in the Lambda basis."""
    v = np.zeros(3, dtype=np.complex128)
    v[LAMBDA_GP] = v[LAMBDA_GM] = 1.0 / math.sqrt(2.0)
    return v


def mix_channels(model: LindbladModel, omega: float, u) -> LindbladModel:
    """Replace the channels at frequency ``omega`` by unitary combinations.

    ``u[a, b]`` multiplies the ``b``-th selected lowering operator in the
    ``a``-th new one.  The selected channels must share their rates.
    """
    u = ops.as_operator(u, "u")
    if np.max(np.abs(u @ ops.dagger(u) - np.eye(u.shape[0]))) > 1e-10:
        raise ValidationError("mixing matrix is not unitary")
    picked = [i for i, ch in enumerate(model.channels) if abs(ch.omega - omega) <= 1e-12 * max(1.0, abs(omega))]
    if len(picked) != u.shape[0]:
        raise ValidationError(
            f"{len(picked)} channels at omega={omega!r} but u is {u.shape[0]}x{u.shape[0]}"
        )
    rates = {model.channels[i].gamma_minus for i in picked}
    if len(rates) > 1:
        raise ValidationError("channels selected for mixing have different rates")
    old = [model.channels[i].lower for i in picked]
    new_lower = [sum(u[a, b] * old[b] for b in range(len(old))) for a in range(len(old))]
    specs = []
    it = iter(new_lower)
    for i, ch in enumerate(model.channels):
        lower = next(it) if i in picked else ch.lower
        specs.append((lower, ch.omega, ch.gamma_minus))
    return build_model(model.h0, model.hp, specs, model.temperature, model.picture)


__all__ = [
    "QubitParams",
    "LambdaParams",
    "driven_qubit",
    "lambda_system",
    "stationary_sigma_qubit",
    "stationary_inversion_qubit",
    "qubit_inversion",
    "stationary_coherence_lambda",
    "stationary_sigma_lambda",
    "dark_state",
    "mix_channels",
    "upward_rate",
]
