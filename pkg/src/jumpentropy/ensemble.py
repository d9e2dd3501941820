"""Monte Carlo aggregation of quantum-jump trajectories.

Trajectories are reduced to partial sums: ``sum |psi><psi|`` and the summed
cumulative jump counts on the sample grid.  Sums are kept separately for
``n_groups`` interleaved groups (trajectory ``j`` goes to group
``j % n_groups``) so that a delete-a-group jackknife can be formed later.

Entropy production per time bin ``[a, b]``::

    sigma_hat = (S(rho_hat(b)) - S(rho_hat(a))) / (b - a)
              + sum_i (omega_i/T) (dN_i^- - dN_i^+) / (b - a)

with ``rho_hat`` the mean projector and ``dN`` the mean count increments.
The entropy term is a central difference about the bin centre.  Because the
entropy of a mean is not a mean over trajectories, the standard error comes
from the grouped jackknife applied to the whole estimator, not from
per-trajectory variances.

Work is cut into fixed-size chunks of consecutive trajectory indices and
the chunk sums are folded in index order, so results do not depend on the
number of worker processes.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from . import operators as ops
from . import pdp
from .exceptions import ValidationError
from .lindblad import LindbladModel

DEFAULT_GROUPS = 32
DEFAULT_CHUNK = 256

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # renamed in numpy 2.0


@dataclass
class EnsembleAccumulator:
    """Order-insensitive partial sums over trajectories.

    ``rho_sum`` has shape ``(n_groups, n_grid, d, d)``, ``counts_sum``
    ``(n_groups, n_grid, n_channels, 2)`` (direction 0 = minus, 1 = plus) and
    ``n_per_group`` ``(n_groups,)``.
    """

    grid: np.ndarray
    dt: float
    rho_sum: np.ndarray
    counts_sum: np.ndarray
    n_per_group: np.ndarray

    @classmethod
    def empty(cls, grid, dt: float, dim: int, n_channels: int, n_groups: int = DEFAULT_GROUPS):
        g = len(grid)
        return cls(
            np.asarray(grid, dtype=float),
            float(dt),
            np.zeros((n_groups, g, dim, dim), dtype=np.complex128),
            np.zeros((n_groups, g, n_channels, 2)),
            np.zeros(n_groups, dtype=np.int64),
        )

    @classmethod
    def from_records(cls, records: Sequence[pdp.TrajectoryRecord], n_groups: int = DEFAULT_GROUPS):
        if not records:
            raise ValidationError("no trajectory records given")
        first = records[0]
        n_groups = max(1, min(n_groups, len(records)))
        acc = cls.empty(first.grid, first.dt, first.states.shape[1], first.counts_minus.shape[1], n_groups)
        for j, rec in enumerate(records):
            acc.add_record(rec, j % n_groups)
        return acc

    @property
    def n_trajectories(self) -> int:
        return int(np.sum(self.n_per_group))

    @property
    def n_groups(self) -> int:
        return len(self.n_per_group)

    def add_record(self, rec: pdp.TrajectoryRecord, group: int) -> None:
        if rec.states.shape[0] != len(self.grid) or not np.allclose(rec.grid, self.grid):
            raise ValidationError("trajectory records must share one sample grid")
        s = rec.states
        self.rho_sum[group] += s[:, :, None] * np.conj(s[:, None, :])
        self.counts_sum[group, :, :, 0] += rec.counts_minus
        self.counts_sum[group, :, :, 1] += rec.counts_plus
        self.n_per_group[group] += 1

    def merge(self, other: "EnsembleAccumulator") -> "EnsembleAccumulator":
        if self.rho_sum.shape != other.rho_sum.shape or not np.array_equal(self.grid, other.grid):
            raise ValidationError("cannot merge accumulators with different layouts")
        return EnsembleAccumulator(
            self.grid,
            self.dt,
            self.rho_sum + other.rho_sum,
            self.counts_sum + other.counts_sum,
            self.n_per_group + other.n_per_group,
        )

    def subset(self, groups) -> "EnsembleAccumulator":
        idx = np.asarray(groups, dtype=int)
        return EnsembleAccumulator(
            self.grid, self.dt, self.rho_sum[idx], self.counts_sum[idx], self.n_per_group[idx]
        )

    # pooled quantities -------------------------------------------------
    def _pooled(self, drop: int | None = None):
        rho = self.rho_sum.sum(axis=0)
        counts = self.counts_sum.sum(axis=0)
        n = self.n_trajectories
        if drop is not None:
            rho = rho - self.rho_sum[drop]
            counts = counts - self.counts_sum[drop]
            n -= int(self.n_per_group[drop])
        if n <= 0:
            raise ValidationError("empty ensemble")
        return rho / n, counts / n

    def density(self, index: int | None = None) -> np.ndarray:
        rho, _ = self._pooled()
        out = rho if index is None else rho[index]
        return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))

    def mean_counts(self) -> np.ndarray:
        return self._pooled()[1]


def _as_accumulator(records) -> EnsembleAccumulator:
    if isinstance(records, EnsembleAccumulator):
        return records
    return EnsembleAccumulator.from_records(list(records))


# --------------------------------------------------------------------------
# running ensembles
# --------------------------------------------------------------------------

def _run_chunk(task, start: int, stop: int):
    comp, vectors, cdf, seed, n_steps, sample_every, n_groups, n_grid, backend = task
    kernel = pdp.get_kernel(backend)
    d = comp.prop.shape[0]
    m = len(comp.kinds)
    rho = np.zeros((n_groups, n_grid, d, d), dtype=np.complex128)
    counts = np.zeros((n_groups, n_grid, m))
    n_per = np.zeros(n_groups, dtype=np.int64)
    max_ptot = 0.0
    for idx in range(start, stop):
        g = idx % n_groups
        u0, uniforms = pdp.draw_stream(pdp.RngStream(seed, idx), n_steps, cdf is not None)
        psi = np.ascontiguousarray(pdp.pick_initial(vectors, cdf, u0))
        _, mp, status = kernel.evolve(
            comp.prop, comp.jumps, psi, uniforms, sample_every, None, None, None, None, rho[g], counts[g]
        )
        pdp.raise_for_status(status, 0.0)
        max_ptot = max(max_ptot, mp)
        n_per[g] += 1
    return rho, counts, n_per, max_ptot


def run_ensemble(
    model: LindbladModel,
    initial,
    t_max: float,
    dt: float,
    n_trajectories: int,
    seed: int = 0,
    sample_every: int = 50,
    workers: int = 1,
    n_groups: int = DEFAULT_GROUPS,
    chunk_size: int = DEFAULT_CHUNK,
    backend: str | None = None,
) -> EnsembleAccumulator:
    """Simulate ``n_trajectories`` trajectories and return their partial sums.

    Trajectory ``j`` uses ``RngStream(seed, j)``.  ``initial`` is a state
    vector, or a density matrix whose eigen-ensemble is sampled.
    """
    if n_trajectories < 1:
        raise ValidationError("n_trajectories must be >= 1")
    if workers < 1 or chunk_size < 1:
        raise ValidationError("workers and chunk_size must be >= 1")
    n_steps = pdp.step_count(t_max, dt, sample_every)
    comp = pdp.compile_model(model, dt)
    vectors, cdf = pdp.initial_sampler(initial, model.dim)
    n_groups = max(1, min(n_groups, n_trajectories))
    n_grid = n_steps // sample_every + 1
    grid = np.arange(n_grid) * (sample_every * dt)
    task = (comp, vectors, cdf, int(seed), n_steps, sample_every, n_groups, n_grid, backend or pdp.BACKEND)
    bounds = [(s, min(s + chunk_size, n_trajectories)) for s in range(0, n_trajectories, chunk_size)]

    m = len(comp.kinds)
    rho = np.zeros((n_groups, n_grid, model.dim, model.dim), dtype=np.complex128)
    counts = np.zeros((n_groups, n_grid, m))
    n_per = np.zeros(n_groups, dtype=np.int64)
    max_ptot = 0.0

    def fold(part):
        nonlocal rho, counts, n_per, max_ptot
        rho += part[0]
        counts += part[1]
        n_per += part[2]
        max_ptot = max(max_ptot, part[3])

    if workers == 1 or len(bounds) == 1:
        for s, e in bounds:
            fold(_run_chunk(task, s, e))
    else:
        fn = partial(_run_chunk, task)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map() yields in submission order: the fold order is fixed
            for part in pool.map(fn, [b[0] for b in bounds], [b[1] for b in bounds]):
                fold(part)
    pdp.raise_for_status(0, max_ptot)

    counts_pm = np.zeros((n_groups, n_grid, len(model.channels), 2))
    for k, (ch, direction) in enumerate(comp.kinds):
        counts_pm[:, :, ch, direction] = counts[:, :, k]
    return EnsembleAccumulator(grid, float(dt), rho, counts_pm, n_per)


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------

def bin_layout(grid, dt: float, bin_width: float) -> tuple[np.ndarray, np.ndarray]:
    """Grid indices of bin edges and the bin centres.

    Bins tile ``[0, grid[-1]]`` from zero; a trailing partial bin is dropped.
    ``bin_width`` must be a whole multiple of the grid spacing and at least
    ``5 dt``.
    """
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        raise ValidationError("need at least two grid points")
    h = grid[1] - grid[0]
    if bin_width < 5.0 * dt * (1.0 - 1e-12):
        raise ValidationError(f"bin_width={bin_width!r} must be >= 5*dt={5 * dt!r}")
    r = int(round(bin_width / h))
    if r < 1 or abs(r * h - bin_width) > 1e-9 * bin_width:
        raise ValidationError(f"bin_width={bin_width!r} is not a multiple of the sample spacing {h!r}")
    edges = np.arange(0, len(grid), r)
    centers = 0.5 * (grid[edges[:-1]] + grid[edges[1:]])
    return edges, centers


def _flux_from_counts(model: LindbladModel, counts: np.ndarray, edges: np.ndarray, width: float) -> np.ndarray:
    if not model.temperature > 0.0:
        raise ValidationError("entropy flux is undefined at T = 0")
    quanta = np.array([ch.omega / model.temperature for ch in model.channels])
    net = counts[..., 0] - counts[..., 1]  # (n_grid, n_channels)
    per_time = net @ quanta if len(quanta) else np.zeros(len(net))
    return (per_time[edges[1:]] - per_time[edges[:-1]]) / width


def _entropies(rho: np.ndarray, indices) -> np.ndarray:
    return np.array([ops.von_neumann_entropy(0.5 * (rho[i] + ops.dagger(rho[i]))) for i in indices])


def estimate_density(records, grid_index: int) -> np.ndarray:
    """Mean projector ``(1/N) sum_j |psi_j><psi_j|`` at one grid point."""
    acc = _as_accumulator(records)
    if not 0 <= grid_index < len(acc.grid):
        raise ValidationError(f"grid_index {grid_index} out of range")
    return acc.density(grid_index)


def estimate_flux(records, model: LindbladModel, bin_width: float) -> np.ndarray:
    """Entropy flux per bin from mean count increments."""
    acc = _as_accumulator(records)
    edges, _ = bin_layout(acc.grid, acc.dt, bin_width)
    return _flux_from_counts(model, acc.mean_counts(), edges, bin_width)


@dataclass
class EnsembleStats:
    grid: np.ndarray
    rho_hat: np.ndarray
    entropy: np.ndarray
    bin_centers: np.ndarray
    entropy_centers: np.ndarray
    flux_hat: np.ndarray
    dsdt_hat: np.ndarray
    sigma_hat: np.ndarray
    stderr_sigma: np.ndarray
    stderr_flux: np.ndarray
    stderr_dsdt_split: np.ndarray
    mean_counts_minus: np.ndarray
    mean_counts_plus: np.ndarray
    n_trajectories: int


def _sigma_parts(acc: EnsembleAccumulator, model, edges, width, drop=None):
    rho, counts = acc._pooled(drop)
    s_edges = _entropies(rho, edges)
    dsdt = np.diff(s_edges) / width
    flux = _flux_from_counts(model, counts, edges, width)
    return dsdt, flux


def ensemble_stats(records, model: LindbladModel, bin_width: float) -> EnsembleStats:
    """All estimators of the ensemble, with grouped-jackknife errors."""
    acc = _as_accumulator(records)
    edges, centers = bin_layout(acc.grid, acc.dt, bin_width)
    if len(centers) < 3:
        raise ValidationError(f"need at least 3 bins, got {len(centers)}")
    rho, counts = acc._pooled()
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    entropy = _entropies(rho, range(len(acc.grid)))
    dsdt, flux = _sigma_parts(acc, model, edges, bin_width)
    sigma = dsdt + flux

    k = acc.n_groups
    if k >= 2:
        loo = [_sigma_parts(acc, model, edges, bin_width, drop=g) for g in range(k)]
        loo_sigma = np.array([a + b for a, b in loo])
        loo_flux = np.array([b for _, b in loo])
        fac = (k - 1) / k
        stderr_sigma = np.sqrt(fac * np.sum((loo_sigma - loo_sigma.mean(axis=0)) ** 2, axis=0))
        stderr_flux = np.sqrt(fac * np.sum((loo_flux - loo_flux.mean(axis=0)) ** 2, axis=0))
        half_a = acc.subset(range(0, k, 2))
        half_b = acc.subset(range(1, k, 2))
        ds_a, _ = _sigma_parts(half_a, model, edges, bin_width)
        ds_b, _ = _sigma_parts(half_b, model, edges, bin_width)
        stderr_ds = 0.5 * np.abs(ds_a - ds_b)
    else:
        stderr_sigma = stderr_flux = stderr_ds = np.full(len(centers), math.nan)

    s_centers = np.interp(centers, acc.grid, entropy)
    return EnsembleStats(
        grid=acc.grid,
        rho_hat=rho,
        entropy=entropy,
        bin_centers=centers,
        entropy_centers=s_centers,
        flux_hat=flux,
        dsdt_hat=dsdt,
        sigma_hat=sigma,
        stderr_sigma=stderr_sigma,
        stderr_flux=stderr_flux,
        stderr_dsdt_split=stderr_ds,
        mean_counts_minus=counts[:, :, 0],
        mean_counts_plus=counts[:, :, 1],
        n_trajectories=acc.n_trajectories,
    )


def estimate_sigma(records, model: LindbladModel, bin_width: float) -> tuple[np.ndarray, np.ndarray]:
    """Entropy production per bin and its standard error."""
    st = ensemble_stats(records, model, bin_width)
    return st.sigma_hat, st.stderr_sigma


def bin_average_rates(grid, entropy, flux, bin_width: float, dt: float) -> dict[str, np.ndarray]:
    """Bin-averaged ``dS/dt``, ``J`` and ``sigma`` of a deterministic curve.

    ``dS/dt`` is the entropy difference across the bin, ``J`` its trapezoidal
    mean; this matches what the Monte Carlo estimator measures per bin and
    stays finite where ``sigma(t)`` itself diverges (pure initial states).
    """
    grid = np.asarray(grid, dtype=float)
    entropy = np.asarray(entropy, dtype=float)
    flux = np.asarray(flux, dtype=float)
    edges, centers = bin_layout(grid, dt, bin_width)
    dsdt = (entropy[edges[1:]] - entropy[edges[:-1]]) / bin_width
    j = np.array(
        [_trapezoid(flux[a:b + 1], grid[a:b + 1]) / bin_width for a, b in zip(edges[:-1], edges[1:])]
    )
    return {"t": centers, "dsdt": dsdt, "J": j, "sigma": dsdt + j}
