"""Quantum-jump unravelling of a Lindblad model.

Between jumps the state follows the normalised non-Hermitian evolution
``psi -> N(exp(-i H_eff dt) psi)``; each step a jump of type ``(i, +/-)``
occurs with probability ``gamma_i^± ||A_i^± psi||^2 dt`` and maps
``psi -> A psi / ||A psi||``.  At most one jump happens per step.

The per-step loop lives in a compiled extension (``_kernel``) with a
pure-Python twin (``_kernel_py``) used when the extension is missing or when
``JUMPENTROPY_BACKEND=python`` is set.  Both consume the same uniform draws
and make identical decisions.

Random numbers: trajectory ``index`` under master ``seed`` draws from
``PCG64(SeedSequence(seed, spawn_key=(index,)))``, so each trajectory is
reproducible on its own, independent of how work is split across
processes.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from . import _kernel_py
from .exceptions import ImpossibleJumpError, StepSizeError, ValidationError
from .lindblad import DecayChannel, LindbladModel

try:
    from . import _kernel as _kernel_c
except ImportError:  # pragma: no cover - exercised only without a compiler
    _kernel_c = None

KERNELS = {"python": _kernel_py}
if _kernel_c is not None:
    KERNELS["compiled"] = _kernel_c

_requested = os.environ.get("JUMPENTROPY_BACKEND", "").strip().lower()
if _requested in KERNELS:
    BACKEND = _requested
else:
    BACKEND = "compiled" if _kernel_c is not None else "python"

DIRECTIONS = ("minus", "plus")
STEP_WARN = 0.1
STEP_FAIL = 0.5


class StepSizeWarning(RuntimeWarning):
    pass


def get_kernel(backend: str | None = None):
    name = BACKEND if backend is None else backend
    try:
        return KERNELS[name]
    except KeyError:
        raise ValidationError(f"unknown or unavailable backend {name!r}; have {sorted(KERNELS)}") from None


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream for one trajectory."""

    seed: int
    index: int

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(self.index),))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class JumpEvent:
    time: float
    channel_index: int
    direction: str


@dataclass
class TrajectoryRecord:
    """One realisation: sampled states, jump events and cumulative counts.

    ``counts_minus`` and ``counts_plus`` have shape ``(len(grid), n_channels)``.
    """

    grid: np.ndarray
    states: np.ndarray
    events: list[JumpEvent]
    counts_minus: np.ndarray
    counts_plus: np.ndarray
    dt: float = field(default=0.0)


def taylor_propagator(h_eff: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order Taylor approximation of ``exp(-i h_eff dt)``."""
    x = -1j * dt * np.asarray(h_eff, dtype=np.complex128)
    out = np.eye(x.shape[0], dtype=np.complex128)
    term = np.eye(x.shape[0], dtype=np.complex128)
    for k in range(1, 5):
        term = term @ x / k
        out = out + term
    return out


def deterministic_step(model: LindbladModel, psi, dt: float) -> np.ndarray:
    """Advance ``psi`` by ``dt`` under the no-jump evolution and renormalise."""
    v = ops.validate_state(psi, 1e-9)
    out = taylor_propagator(model.h_eff, dt) @ v
    nrm = float(np.linalg.norm(out))
    if nrm < 1e-12:
        raise StepSizeError(f"state norm collapsed to {nrm:.3e} in one step; reduce dt")
    return out / nrm


def jump_probabilities(model: LindbladModel, psi, dt: float) -> list[tuple[int, str, float]]:
    """Per-step jump probabilities in channel order, minus before plus."""
    v = np.asarray(psi, dtype=np.complex128)
    out = []
    for i, direction, rate, a in model.jump_terms():
        p = rate * float(np.vdot(a @ v, a @ v).real) * dt
        out.append((i, direction, p))
    total = sum(p for _, _, p in out)
    if total > STEP_FAIL:
        raise StepSizeError(f"total jump probability {total:.3g} per step exceeds {STEP_FAIL}")
    if total > STEP_WARN:
        warnings.warn(f"total jump probability {total:.3g} per step exceeds {STEP_WARN}", StepSizeWarning)
    return out


def apply_jump(psi, channel: DecayChannel, direction: str) -> np.ndarray:
    """Jump map ``psi -> A psi / ||A psi||``."""
    v = np.asarray(psi, dtype=np.complex128)
    target = channel.operator(direction) @ v
    nrm = float(np.linalg.norm(target))
    if nrm <= 1e-12:
        raise ImpossibleJumpError(f"{direction}-jump has zero norm on this state")
    return target / nrm


@dataclass(frozen=True)
class _Compiled:
    """Model digested for the kernel: propagator and scaled jump operators."""

    prop: np.ndarray
    jumps: np.ndarray
    kinds: tuple[tuple[int, int], ...]  # kernel index -> (channel, direction index)
    n_channels: int


def compile_model(model: LindbladModel, dt: float) -> _Compiled:
    if not dt > 0.0:
        raise ValidationError("dt must be positive")
    mats = []
    kinds = []
    for i, direction, rate, a in model.jump_terms():
        if rate > 0.0:
            mats.append(math.sqrt(rate * dt) * a)
            kinds.append((i, DIRECTIONS.index(direction)))
    jumps = np.ascontiguousarray(
        np.array(mats, dtype=np.complex128) if mats else np.zeros((0, model.dim, model.dim), np.complex128)
    )
    prop = np.ascontiguousarray(taylor_propagator(model.h_eff, dt))
    return _Compiled(prop, jumps, tuple(kinds), len(model.channels))


def step_count(t_max: float, dt: float, sample_every: int) -> int:
    if not dt > 0.0 or not t_max > 0.0:
        raise ValidationError("t_max and dt must be positive")
    if sample_every < 1:
        raise ValidationError("sample_every must be >= 1")
    n = int(round(t_max / dt))
    if abs(n * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValidationError(f"t_max={t_max!r} is not a whole number of steps dt={dt!r}")
    if n % sample_every:
        raise ValidationError(f"{n} steps are not a multiple of sample_every={sample_every}")
    return n


def initial_sampler(initial, dim: int):
    """Return ``(vectors, cdf)`` for drawing initial states.

    A state vector gives a single entry; a density matrix is decomposed into
    its eigenvectors with the eigenvalues as probabilities.
    """
    a = np.asarray(initial, dtype=np.complex128)
    if a.ndim == 1:
        if a.shape[0] != dim:
            raise ValidationError(f"initial state has dimension {a.shape[0]}, model has {dim}")
        return ops.validate_state(a)[None, :], None
    rho = ops.validate_density(a)
    if rho.shape[0] != dim:
        raise ValidationError(f"initial state has dimension {rho.shape[0]}, model has {dim}")
    evals, vecs = ops.hermitian_eigen(rho)
    w = np.clip(evals, 0.0, None)
    keep = w > 0.0
    cdf = np.cumsum(w[keep] / np.sum(w[keep]))
    return np.ascontiguousarray(vecs[:, keep].T), cdf


def draw_stream(rng: RngStream, n_steps: int, mixed: bool) -> tuple[float | None, np.ndarray]:
    gen = rng.generator()
    u0 = float(gen.random()) if mixed else None
    return u0, gen.random(n_steps)


def pick_initial(vectors: np.ndarray, cdf, u0) -> np.ndarray:
    if cdf is None:
        return vectors[0]
    k = int(np.searchsorted(cdf, u0, side="right"))
    return vectors[min(k, len(vectors) - 1)]


def raise_for_status(status: int, max_ptot: float) -> None:
    if status == _kernel_py.STATUS_STEP_TOO_LARGE:
        raise StepSizeError(f"total jump probability per step exceeded {STEP_FAIL}; reduce dt")
    if status == _kernel_py.STATUS_NORM_UNDERFLOW:
        raise StepSizeError("state norm collapsed during a deterministic step; reduce dt")
    if status == _kernel_py.STATUS_IMPOSSIBLE_JUMP:
        raise ImpossibleJumpError("selected jump has zero probability")
    if max_ptot > STEP_WARN:
        warnings.warn(f"total jump probability reached {max_ptot:.3g} per step", StepSizeWarning)


def simulate_trajectory(
    model: LindbladModel,
    psi0,
    t_max: float,
    dt: float,
    sample_every: int,
    rng: RngStream,
    backend: str | None = None,
) -> TrajectoryRecord:
    """Simulate one trajectory and record states, jumps and counts.

    ``psi0`` may also be a density matrix; the initial pure state is then
    drawn from its eigen-ensemble with one extra uniform from ``rng``.
    """
    n_steps = step_count(t_max, dt, sample_every)
    comp = compile_model(model, dt)
    vectors, cdf = initial_sampler(psi0, model.dim)
    u0, uniforms = draw_stream(rng, n_steps, cdf is not None)
    psi = np.ascontiguousarray(pick_initial(vectors, cdf, u0))

    n_samples = n_steps // sample_every + 1
    states = np.zeros((n_samples, model.dim), dtype=np.complex128)
    m = len(comp.kinds)
    counts = np.zeros((n_samples, m), dtype=np.int64)
    cap = 1024
    while True:
        ev_step = np.zeros(cap, dtype=np.int64)
        ev_kind = np.zeros(cap, dtype=np.int64)
        n_ev, max_ptot, status = get_kernel(backend).evolve(
            comp.prop, comp.jumps, psi, uniforms, sample_every, states, counts, ev_step, ev_kind
        )
        if n_ev <= cap:
            break
        cap = int(n_ev)
    raise_for_status(status, max_ptot)

    events = [
        JumpEvent((int(s) + 1) * dt, comp.kinds[int(k)][0], DIRECTIONS[comp.kinds[int(k)][1]])
        for s, k in zip(ev_step[:n_ev], ev_kind[:n_ev])
    ]
    n_ch = comp.n_channels
    counts_pm = np.zeros((n_samples, n_ch, 2), dtype=np.int64)
    for k, (ch, direction) in enumerate(comp.kinds):
        counts_pm[:, ch, direction] = counts[:, k]
    grid = np.arange(n_samples) * (sample_every * dt)
    return TrajectoryRecord(grid, states, events, counts_pm[:, :, 0], counts_pm[:, :, 1], dt)
