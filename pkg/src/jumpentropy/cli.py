"""Command-line front end.

``jumpentropy run`` simulates one of the built-in models with the master
equation and/or quantum-jump Monte Carlo and writes plot data as CSV;
``jumpentropy validate`` only builds and checks the model.

Options come from three layers: built-in defaults (per model), an optional
``--config`` file of ``key = value`` lines, and command-line flags, later
layers winning.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from . import ensemble, lindblad, models
from . import operators as ops
from .exceptions import ModelValidationError, NumericalError, ValidationError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

MODEL_DEFAULTS = {
    "qubit": {"gamma_minus": 0.1, "omega_over_t": 1.0, "t_max": 20.0},
    "lambda": {"gamma_minus": 1.0, "omega_over_t": 1.25, "t_max": 30.0},
}


@dataclass
class RunConfig:
    model: str = "qubit"
    rabi: float = 1.0
    gamma_minus: float | None = None
    omega_over_t: float | None = None
    omega: float = 1.0
    channel_omega: float | None = None
    t_max: float | None = None
    dt: float = 1e-3
    trajectories: int = 10000
    seed: int = 0
    bin_width: float = 0.5
    sample_every: int = 50
    output_path: str = "entropy.csv"
    mode: str = "both"
    initial: str = "ground"
    workers: int = os.cpu_count() or 1

    def resolved(self) -> "RunConfig":
        """Fill model-dependent defaults and validate."""
        if self.model not in MODEL_DEFAULTS:
            raise ValidationError(f"model must be one of {sorted(MODEL_DEFAULTS)}, got {self.model!r}")
        out = RunConfig(**asdict(self))
        for k, v in MODEL_DEFAULTS[self.model].items():
            if getattr(out, k) is None:
                setattr(out, k, v)
        out.validate()
        return out

    def validate(self) -> None:
        if self.mode not in ("mc", "master", "both"):
            raise ValidationError(f"mode must be mc, master or both, got {self.mode!r}")
        if self.initial not in ("ground", "thermal"):
            raise ValidationError(f"initial must be ground or thermal, got {self.initial!r}")
        for name in ("rabi", "gamma_minus", "omega_over_t", "omega", "t_max", "dt", "bin_width"):
            v = getattr(self, name)
            if isinstance(v, float) and math.isnan(v):
                raise ValidationError(f"{name} is NaN")
        if not self.dt > 0.0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not self.t_max > self.dt:
            raise ValidationError(f"t_max must exceed dt, got t_max={self.t_max}")
        if self.mode != "master" and self.trajectories < 1:
            raise ValidationError(f"trajectories must be >= 1, got {self.trajectories}")
        if self.bin_width < 5.0 * self.dt * (1.0 - 1e-12):
            raise ValidationError(f"bin_width must be >= 5*dt, got {self.bin_width}")
        if self.sample_every < 1:
            raise ValidationError("sample_every must be >= 1")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    def echo(self) -> str:
        """Settings that determine the output (no paths, no worker count)."""
        d = asdict(self)
        d.pop("output_path")
        d.pop("workers")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    s = raw.strip()
    if "int" in kind:
        return int(s)
    if "float" in kind:
        if s.lower() in ("", "none"):
            return None
        return float(s)
    return s


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path!r}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "output":
            key = "output_path"
        if key not in _FIELD_TYPES:
            raise ValidationError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError:
            raise ValidationError(f"{path}:{n}: bad value for {key}: {value!r}") from None
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jumpentropy", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="file of 'key = value' lines")
        sp.add_argument("--model", choices=sorted(MODEL_DEFAULTS))
        sp.add_argument("--rabi", type=float)
        sp.add_argument("--gamma-minus", type=float)
        sp.add_argument("--omega-over-t", type=float)
        sp.add_argument("--omega", type=float, help="Bohr frequency in rate units (default 1)")
        sp.add_argument("--channel-omega", type=float, help="frequency declared on the channels")
        sp.add_argument("--dt", type=float)

    run = sub.add_parser("run", help="simulate and write CSV")
    common(run)
    run.add_argument("--t-max", type=float)
    run.add_argument("--trajectories", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--bin-width", type=float)
    run.add_argument("--sample-every", type=int, help="steps between stored samples")
    run.add_argument("--output", dest="output_path")
    run.add_argument("--mode", choices=["mc", "master", "both"])
    run.add_argument("--initial", choices=["ground", "thermal"])
    run.add_argument("--workers", type=int, help="worker processes (default: CPU count)")

    val = sub.add_parser("validate", help="check the model without simulating")
    common(val)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for key in _FIELD_TYPES:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(**values)


def build(cfg: RunConfig):
    """Model, parameter record and closed-form stationary rate."""
    if cfg.model == "qubit":
        p = models.QubitParams(cfg.rabi, cfg.gamma_minus, cfg.omega_over_t)
        model = models.driven_qubit(p, cfg.omega, cfg.channel_omega)
        sigma_s = models.stationary_sigma_qubit(p)
    else:
        p = models.LambdaParams(cfg.rabi, cfg.gamma_minus, cfg.omega_over_t)
        model = models.lambda_system(p, cfg.omega, cfg.channel_omega)
        sigma_s = models.stationary_sigma_lambda(p)
    return model, p, sigma_s


def initial_state(cfg: RunConfig, model):
    if cfg.initial == "thermal":
        return lindblad.gibbs_state(model)
    idx = models.QUBIT_G if cfg.model == "qubit" else models.LAMBDA_GP
    return ops.basis_state(model.dim, idx)


def recommended_dt(model) -> float:
    """Step keeping the per-step jump probability and phase near 1e-2."""
    return 0.01 / max(model.max_rate(), 1e-300)


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    return "%.17g" % x


def _columns(n_channels: int) -> list[str]:
    cols = ["source", "t", "S_mc", "S_me", "J_mc", "J_me", "sigma_mc", "stderr_sigma", "sigma_me",
            "sigma_stationary"]
    for i in range(n_channels):
        cols += [f"N_minus_mean_{i}", f"N_plus_mean_{i}"]
    return cols


def _rows(cfg, model, sigma_s, grid, me, mc):
    n_ch = len(model.channels)
    rows = []
    if me is not None:
        rhos, curves, counts = me
        for k, t in enumerate(grid):
            r = {"source": "me", "t": t, "S_me": curves["S"][k], "J_me": curves["J"][k],
                 "sigma_me": curves["sigma"][k], "sigma_stationary": sigma_s}
            for i in range(n_ch):
                r[f"N_minus_mean_{i}"] = counts[k, i, 0]
                r[f"N_plus_mean_{i}"] = counts[k, i, 1]
            rows.append((t, 1, r))
    if mc is not None:
        for b, t in enumerate(mc.bin_centers):
            r = {"source": "mc", "t": t, "S_mc": mc.entropy_centers[b], "J_mc": mc.flux_hat[b],
                 "sigma_mc": mc.sigma_hat[b], "stderr_sigma": mc.stderr_sigma[b],
                 "sigma_stationary": sigma_s}
            for i in range(n_ch):
                r[f"N_minus_mean_{i}"] = np.interp(t, grid, mc.mean_counts_minus[:, i])
                r[f"N_plus_mean_{i}"] = np.interp(t, grid, mc.mean_counts_plus[:, i])
            rows.append((t, 0, r))
    rows.sort(key=lambda x: (x[0], x[1]))
    return [r for _, _, r in rows]


def write_csv(path: str, header: Sequence[str], columns: list[str], rows: list[dict]) -> None:
    """Write atomically: a temporary file in the target directory is renamed."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".jumpentropy-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([r["source"]] + [_fmt(r.get(c)) for c in columns[1:]])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    cfg = cfg.resolved()
    model, _, sigma_s = build(cfg)
    rho0 = initial_state(cfg, model)
    n_steps = int(round(cfg.t_max / cfg.dt))
    from .pdp import step_count

    step_count(cfg.t_max, cfg.dt, cfg.sample_every)
    grid = np.arange(n_steps // cfg.sample_every + 1) * (cfg.sample_every * cfg.dt)
    ensemble.bin_layout(grid, cfg.dt, cfg.bin_width)
    finite_t = model.temperature > 0.0

    me = mc = None
    if cfg.mode in ("master", "both"):
        rho_init = rho0 if np.ndim(rho0) == 2 else ops.projector(rho0)
        rhos = lindblad.integrate_master(model, rho_init, grid, dt=cfg.dt)
        if not finite_t:
            raise ValidationError("entropy curves need T > 0 (finite omega_over_t)")
        me = (rhos, lindblad.entropy_curves(model, rhos), lindblad.expected_counts(model, grid, rhos))
    if cfg.mode in ("mc", "both"):
        acc = ensemble.run_ensemble(
            model, rho0, cfg.t_max, cfg.dt, cfg.trajectories, seed=cfg.seed,
            sample_every=cfg.sample_every, workers=cfg.workers,
        )
        mc = ensemble.ensemble_stats(acc, model, cfg.bin_width)

    header = [f"seed={cfg.seed}", f"config={cfg.echo()}"]
    write_csv(cfg.output_path, header, _columns(len(model.channels)), _rows(cfg, model, sigma_s, grid, me, mc))

    print(f"model: {cfg.model}  stationary sigma (closed form): {sigma_s:.6f}", file=out)
    late = slice(-max(1, len(grid) // 4), None)
    if me is not None:
        print(f"master equation: sigma(t_max) = {me[1]['sigma'][-1]:.6f}, "
              f"mean over last quarter = {np.mean(me[1]['sigma'][late]):.6f}", file=out)
    if mc is not None:
        nb = len(mc.sigma_hat)
        tail = slice(-max(1, nb // 4), None)
        w = 1.0 / mc.stderr_sigma[tail] ** 2
        mean = float(np.sum(w * mc.sigma_hat[tail]) / np.sum(w)) if np.all(np.isfinite(w)) else float(
            np.mean(mc.sigma_hat[tail]))
        print(f"monte carlo: {mc.n_trajectories} trajectories, late-time sigma = {mean:.6f}", file=out)
        if me is not None:
            ref = ensemble.bin_average_rates(grid, me[1]["S"], me[1]["J"], cfg.bin_width, cfg.dt)["sigma"]
            ok = np.abs(mc.sigma_hat - ref) <= 3.0 * mc.stderr_sigma
            print(f"bins within 3 stderr of the master equation: {int(ok.sum())}/{nb}", file=out)
    print(f"wrote {cfg.output_path}", file=out)
    return EXIT_OK


# --------------------------------------------------------------------------
# validate
# --------------------------------------------------------------------------

def validate(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    if cfg.t_max is None:
        cfg.t_max = MODEL_DEFAULTS.get(cfg.model, {}).get("t_max", 1.0)
    try:
        cfg = cfg.resolved()
        model, _, sigma_s = build(cfg)
    except ModelValidationError as exc:
        print(f"FAIL: eigen-operator check: {exc}", file=out)
        return EXIT_INVALID
    print(f"model: {cfg.model} (dimension {model.dim}, {len(model.channels)} channels)", file=out)
    print("eigen-operator check: OK", file=out)
    kms_ok = True
    for i, ch in enumerate(model.channels):
        expected = lindblad.upward_rate(ch.gamma_minus, ch.omega, model.temperature)
        kms_ok &= math.isclose(ch.gamma_plus, expected, rel_tol=1e-12, abs_tol=1e-300)
        print(f"  channel {i}: omega={ch.omega:g} gamma-={ch.gamma_minus:g} gamma+={ch.gamma_plus:.6g}", file=out)
    print(f"KMS check: {'OK' if kms_ok else 'FAIL'}", file=out)
    freqs: dict[float, int] = {}
    for ch in model.channels:
        freqs[ch.omega] = freqs.get(ch.omega, 0) + 1
    for w, n in sorted(freqs.items()):
        if n > 1:
            print(f"degenerate spectrum: {n} channels at omega={w:g}", file=out)
    with np.printoptions(precision=6, suppress=True):
        print("thermal state:", file=out)
        print(np.real_if_close(lindblad.gibbs_state(model)), file=out)
    print(f"stationary sigma (closed form): {sigma_s:.6f}", file=out)
    print(f"recommended dt: {recommended_dt(model):.3g}", file=out)
    print("OK" if kms_ok else "FAIL", file=out)
    return EXIT_OK if kms_ok else EXIT_INVALID


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "run":
            return run(cfg)
        return validate(cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
