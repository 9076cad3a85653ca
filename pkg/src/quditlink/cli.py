"""Command-line interface: config ingestion, sweeps, persistence, reproducibility.

Verbs:

* ``run``      -- execute a (possibly resumable) campaign sweep to CSV+JSON.
* ``oracle``   -- exact small-m evaluation of a single configuration.
* ``validate`` -- lint a config file and echo the resolved configuration.
* ``compare``  -- trajectory-vs-oracle agreement report.

Config files are flat ``key = value`` text with dotted section prefixes
(``switch.eta_sw = 0.9``); ``#`` starts a comment.  Exit codes: 0 success,
1 config error, 2 estimation failure (zero heralds), 3 I/O error.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import subprocess
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import click
import numpy as np

from . import kernel
from .cavity import GateParams
from .channels import ChannelParams
from .optics import DetectionParams, SwitchParams
from .oracle import exact_run
from .protocol import (
    STRATEGIES,
    EstimationFailureError,
    ProtocolConfig,
    SourceParams,
    default_gate,
    default_source,
    estimate_metrics,
)

CSV_COLUMNS = (
    "m",
    "L_km",
    "strategy",
    "success_probability",
    "average_attempts",
    "average_fidelity",
    "per_pair_fidelities",
    "fidelity_stderr",
    "n_trajectories",
    "seed",
    "wall_time_s",
    "engine",
)


class ConfigError(ValueError):
    """Configuration problem, reported with the offending field path."""


@dataclass(frozen=True)
class ResultRow:
    m: int
    L_km: float
    strategy: str
    success_probability: float
    average_attempts: float
    average_fidelity: float
    per_pair_fidelities: tuple[float, ...]
    fidelity_stderr: float
    n_trajectories: int
    seed: int
    wall_time_s: float
    engine: str

    def key(self) -> tuple:
        return (self.m, self.L_km, self.strategy, self.seed, self.engine)

    def to_csv(self) -> list[str]:
        return [
            str(self.m),
            repr(self.L_km),
            self.strategy,
            repr(self.success_probability),
            repr(self.average_attempts),
            repr(self.average_fidelity),
            ";".join(repr(f) for f in self.per_pair_fidelities),
            repr(self.fidelity_stderr),
            str(self.n_trajectories),
            str(self.seed),
            repr(self.wall_time_s),
            self.engine,
        ]

    @classmethod
    def from_csv(cls, record: list[str]) -> "ResultRow":
        return cls(
            m=int(record[0]),
            L_km=float(record[1]),
            strategy=record[2],
            success_probability=float(record[3]),
            average_attempts=float(record[4]),
            average_fidelity=float(record[5]),
            per_pair_fidelities=tuple(
                float(x) for x in record[6].split(";") if x
            ),
            fidelity_stderr=float(record[7]),
            n_trajectories=int(record[8]),
            seed=int(record[9]),
            wall_time_s=float(record[10]),
            engine=record[11],
        )


@dataclass(frozen=True)
class SweepSpec:
    """A campaign: the cross product of distances, m values and strategies."""

    distances: tuple[float, ...]
    m_values: tuple[int, ...]
    strategies: tuple[str, ...]
    base: ProtocolConfig

    def __post_init__(self) -> None:
        if not (self.distances and self.m_values and self.strategies):
            raise ConfigError("sweep lists must be non-empty")
        for name in ("distances", "m_values", "strategies"):
            vals = getattr(self, name)
            if len(set(vals)) != len(vals):
                raise ConfigError(f"sweep.{name} contains duplicates")

    def points(self) -> list[ProtocolConfig]:
        out = []
        for m in sorted(self.m_values):
            for dist in sorted(self.distances):
                for strat in sorted(self.strategies):
                    out.append(replace(self.base, m=m, L=dist, strategy=strat))
        return out


# ---------------------------------------------------------------------------
# config parsing

_BASELINE = "engine baseline default"
_DEFAULT_NOTES = {
    "m": "number of pairs per attempt",
    "L": "campaign distance (km)",
    "L_att": "telecom-fiber attenuation length 20 km",
    "c_fiber": "light speed in fiber, 2e5 km/s",
    "strategy": "qudit protocol",
    "n_trajectories": "sampling budget",
    "seed": "reproducibility seed",
    "precompensate": "source shaped against bin-dependent loss",
    "source.sigma_a": "10% drive-amplitude jitter baseline",
    "source.sigma_p": "10% drive-phase jitter baseline",
    "switch.eta_sw": "10% switch loss baseline",
    "switch.e_sw": "1% wrong-switching baseline",
    "gate.ideal": "full cavity model (C1=100, 5% coupling loss) unless true",
    "detection.eta_lag": "1% loss per storage loop baseline",
    "detection.sigma_X": "0.1*m interferometer phase jitter unless set",
    "detection.detector_efficiency": "ideal detector",
    "channel.T1": "10 ms memory damping time baseline",
    "channel.T_p": "5 ms memory dephasing time baseline",
    "channel.a_beta": "symmetric damping steady state",
}

_SOURCE_DRIVE_KEYS = (
    "Omega", "Delta", "delta", "g", "gamma_g", "gamma_f", "kappa", "tau_pulse",
)
_GATE_KEYS = (
    "Delta0", "Delta1", "g0", "g1", "gamma0", "gamma1", "kappa_a", "kappa", "omega",
)
_SWEEP_KEYS = ("sweep.distances", "sweep.m_values", "sweep.strategies")


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key=value lines; '#' comments; blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _convert(key: str, value: str, kind: type):
    try:
        if kind is bool:
            low = value.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(value)
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind.__name__}") from exc


def validate_config(
    raw: dict[str, str],
) -> tuple[ProtocolConfig, dict[str, tuple[str, str]]]:
    """Resolve a raw key-value mapping into a ProtocolConfig.

    Returns the config and a provenance map
    ``key -> (resolved value, "config file" | default note)`` consumed by
    ``--explain``.  Unknown keys and out-of-range values raise ConfigError
    naming the field.
    """
    raw = dict(raw)
    for key in _SWEEP_KEYS:
        raw.pop(key, None)
    provenance: dict[str, tuple[str, str]] = {}

    def take(key: str, kind: type, default):
        if key in raw:
            val = _convert(key, raw.pop(key), kind)
            provenance[key] = (str(val), "config file")
            return val
        note = _DEFAULT_NOTES.get(key, _BASELINE)
        provenance[key] = (str(default), f"default: {note}")
        return default

    src_defaults = default_source()
    gate_defaults = default_gate()

    top = {
        "m": take("m", int, 2),
        "L": take("L", float, 20.0),
        "L_att": take("L_att", float, 20.0),
        "c_fiber": take("c_fiber", float, 2.0e5),
        "strategy": take("strategy", str, "qudit"),
        "n_trajectories": take("n_trajectories", int, 10_000),
        "seed": take("seed", int, 2024),
        "precompensate": take("precompensate", bool, True),
    }
    source_kwargs = {
        k: take(f"source.{k}", float if k != "Omega" else float, getattr(src_defaults, k))
        for k in _SOURCE_DRIVE_KEYS
    }
    source_kwargs["sigma_a"] = take("source.sigma_a", float, src_defaults.sigma_a)
    source_kwargs["sigma_p"] = take("source.sigma_p", float, src_defaults.sigma_p)

    gate_ideal = take("gate.ideal", bool, False)
    gate_kwargs = {
        k: take(f"gate.{k}", float, getattr(gate_defaults, k)) for k in _GATE_KEYS
    }
    switch_kwargs = {
        "eta_sw": take("switch.eta_sw", float, 0.9),
        "e_sw": take("switch.e_sw", float, 0.01),
    }
    sigma_x_raw = raw.pop("detection.sigma_X", None)
    if sigma_x_raw is None:
        provenance["detection.sigma_X"] = (
            "auto", f"default: {_DEFAULT_NOTES['detection.sigma_X']}"
        )
        sigma_x = None
    else:
        sigma_x = _convert("detection.sigma_X", sigma_x_raw, float)
        provenance["detection.sigma_X"] = (str(sigma_x), "config file")
    detection_kwargs = {
        "eta_lag": take("detection.eta_lag", float, 0.01),
        "sigma_X": sigma_x,
        "detector_efficiency": take("detection.detector_efficiency", float, 1.0),
    }
    channel_kwargs = {
        "T1": take("channel.T1", float, 10e-3),
        "T_p": take("channel.T_p", float, 5e-3),
        "a_beta": take("channel.a_beta", float, 0.5),
    }
    if raw:
        unknown = ", ".join(sorted(raw))
        raise ConfigError(f"unknown config keys: {unknown}")

    try:
        cfg = ProtocolConfig(
            source=SourceParams(**source_kwargs),
            gate=None if gate_ideal else GateParams(**gate_kwargs),
            switch=SwitchParams(**switch_kwargs),
            detection=DetectionParams(**detection_kwargs),
            channel=ChannelParams(**channel_kwargs),
            **top,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, provenance


def load_sweep(raw: dict[str, str], base: ProtocolConfig) -> SweepSpec:
    def parse_list(key: str, kind: type, default):
        if key not in raw:
            return default
        return tuple(_convert(key, item.strip(), kind) for item in raw[key].split(","))

    distances = parse_list("sweep.distances", float, (base.L,))
    m_values = parse_list("sweep.m_values", int, (base.m,))
    strategies = parse_list("sweep.strategies", str, (base.strategy,))
    for strat in strategies:
        if strat not in STRATEGIES:
            raise ConfigError(f"sweep.strategies: unknown strategy {strat!r}")
    return SweepSpec(distances, m_values, strategies, base)


# ---------------------------------------------------------------------------
# persistence


def read_rows(path: Path) -> list[ResultRow]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(CSV_COLUMNS):
            raise ConfigError(f"{path}: unexpected CSV header")
        return [ResultRow.from_csv(record) for record in reader]


def write_rows(path: Path, rows: list[ResultRow]) -> None:
    ordered = sorted(rows, key=lambda r: r.key())
    tmp = path.with_suffix(".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in ordered:
            writer.writerow(row.to_csv())
    tmp.replace(path)


def _git_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True, text=True, timeout=10, check=False,
        )
        return out.stdout.strip() or "unknown"
    except OSError:
        return "unknown"


def _config_as_dict(cfg: ProtocolConfig) -> dict:
    def enc(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {
                f.name: enc(getattr(obj, f.name))
                for f in dataclasses.fields(obj)
                if not callable(getattr(obj, f.name))
            }
        if isinstance(obj, complex):
            return {"re": obj.real, "im": obj.imag}
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return obj

    return enc(cfg)


def write_sidecar(path: Path, cfg: ProtocolConfig, spec: SweepSpec | None) -> None:
    payload = {
        "config": _config_as_dict(cfg),
        "git_revision": _git_revision(),
        "kernel_backend": kernel.BACKEND,
    }
    if spec is not None:
        payload["sweep"] = {
            "distances": list(spec.distances),
            "m_values": list(spec.m_values),
            "strategies": list(spec.strategies),
        }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def _echo_explain(provenance: dict[str, tuple[str, str]]) -> None:
    width = max(len(k) for k in provenance)
    for key in sorted(provenance):
        value, origin = provenance[key]
        click.echo(f"{key:<{width}}  = {value:<24} [{origin}]")


def _load(config_path: str | None, seed, trajectories) -> tuple[ProtocolConfig, dict, dict]:
    raw = {}
    if config_path is not None:
        raw = parse_config_text(Path(config_path).read_text(encoding="utf-8"))
    cfg, provenance = validate_config(raw)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
        provenance["seed"] = (str(seed), "command line")
    if trajectories is not None:
        cfg = replace(cfg, n_trajectories=trajectories)
        provenance["n_trajectories"] = (str(trajectories), "command line")
    return cfg, provenance, raw


def _point_row(
    cfg: ProtocolConfig, threads: int, record_time: bool
) -> ResultRow:
    started = time.perf_counter()
    pair, rate = estimate_metrics(cfg, threads=threads)
    elapsed = time.perf_counter() - started if record_time else 0.0
    return ResultRow(
        m=cfg.m,
        L_km=cfg.L,
        strategy=cfg.strategy,
        success_probability=rate.success_probability,
        average_attempts=rate.average_attempts,
        average_fidelity=pair.average_fidelity,
        per_pair_fidelities=tuple(float(f) for f in pair.per_pair_fidelity),
        fidelity_stderr=pair.standard_error,
        n_trajectories=cfg.n_trajectories,
        seed=cfg.seed,
        wall_time_s=elapsed,
        engine="trajectory",
    )


@click.group()
def main() -> None:
    """Time-bin-qudit entanglement distribution simulator."""


_common = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None),
    click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None),
    click.option("--trajectories", type=click.IntRange(1), default=None),
    click.option("--explain", is_flag=True, help="show every resolved field and its origin"),
]


def _add_common(cmd):
    for opt in reversed(_common):
        cmd = opt(cmd)
    return cmd


@main.command()
@click.option("--out", "out_dir", type=click.Path(), default="results")
@click.option("--threads", type=click.IntRange(1), default=1)
@click.option(
    "--no-wall-time", is_flag=True,
    help="record wall_time_s as 0.0 so repeated runs are byte-identical",
)
def run(**kwargs) -> None:
    """Execute the campaign sweep and persist CSV results (resumable)."""
    _run_impl(**kwargs)


run = _add_common(run)


def _run_impl(config_path, seed, trajectories, explain, out_dir, threads, no_wall_time):
    try:
        cfg, provenance, raw = _load(config_path, seed, trajectories)
        spec = load_sweep(raw, cfg)
        if explain:
            _echo_explain(provenance)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "results.csv"
        rows = read_rows(csv_path) if csv_path.exists() else []
        done = {row.key() for row in rows}
        write_sidecar(out / "results.json", cfg, spec)
        for point in spec.points():
            key = (point.m, point.L, point.strategy, point.seed, "trajectory")
            if key in done:
                continue
            row = _point_row(point, threads, record_time=not no_wall_time)
            rows.append(row)
            done.add(key)
            write_rows(csv_path, rows)
            click.echo(
                f"m={row.m} L={row.L_km:g} {row.strategy}: "
                f"p={row.success_probability:.4g} F={row.average_fidelity:.4f}"
            )
        click.echo(f"wrote {csv_path}")
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except EstimationFailureError as exc:
        click.echo(f"estimation failure: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(3)


@main.command()
@click.option("--out", "out_dir", type=click.Path(), default=None)
def oracle(**kwargs) -> None:
    """Exact deterministic evaluation of a single small-m configuration."""
    _oracle_impl(**kwargs)


oracle = _add_common(oracle)


def _oracle_impl(config_path, seed, trajectories, explain, out_dir):
    try:
        cfg, provenance, _raw = _load(config_path, seed, trajectories)
        if explain:
            _echo_explain(provenance)
        if cfg.m > 3:
            raise ConfigError("oracle requires m <= 3")
        result = exact_run(cfg)
        click.echo(f"herald_probability = {result.herald_probability!r}")
        for p, fid in enumerate(result.per_pair_fidelity):
            click.echo(f"pair_{p}_fidelity = {fid!r}")
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            herald = result.herald_probability
            row = ResultRow(
                m=cfg.m,
                L_km=cfg.L,
                strategy=cfg.strategy,
                success_probability=herald,
                average_attempts=1.0 / herald,
                average_fidelity=float(result.per_pair_fidelity.mean()),
                per_pair_fidelities=tuple(float(f) for f in result.per_pair_fidelity),
                fidelity_stderr=0.0,
                n_trajectories=0,
                seed=cfg.seed,
                wall_time_s=0.0,
                engine="oracle",
            )
            csv_path = out / "results.csv"
            rows = read_rows(csv_path) if csv_path.exists() else []
            rows = [r for r in rows if r.key() != row.key()] + [row]
            write_rows(csv_path, rows)
            write_sidecar(out / "results.json", cfg, None)
            click.echo(f"wrote {csv_path}")
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except (ValueError, EstimationFailureError) as exc:
        click.echo(f"estimation failure: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(3)


@main.command()
def validate(**kwargs) -> None:
    """Lint a config file and echo the fully resolved configuration."""
    _validate_impl(**kwargs)


validate = _add_common(validate)


def _validate_impl(config_path, seed, trajectories, explain):
    try:
        _cfg, provenance, _raw = _load(config_path, seed, trajectories)
        _echo_explain(provenance)
        click.echo("config OK")
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(3)


@main.command()
@click.option("--threads", type=click.IntRange(1), default=1)
def compare(**kwargs) -> None:
    """Trajectory-vs-oracle agreement report for one configuration."""
    _compare_impl(**kwargs)


compare = _add_common(compare)


def _compare_impl(config_path, seed, trajectories, explain, threads):
    try:
        cfg, provenance, _raw = _load(config_path, seed, trajectories)
        if explain:
            _echo_explain(provenance)
        if cfg.m > 3:
            raise ConfigError("compare requires m <= 3 (oracle limit)")
        exact = exact_run(cfg)
        pair, rate = estimate_metrics(cfg, threads=threads)
        n = cfg.n_trajectories
        p_mc = rate.success_probability
        p_se = math.sqrt(max(p_mc * (1.0 - p_mc), 1e-300) / n)
        dp = abs(p_mc - exact.herald_probability)
        ok_p = dp <= 3.0 * p_se + 1e-12
        click.echo(
            f"herald: trajectory={p_mc!r} oracle={exact.herald_probability!r} "
            f"|diff|={dp:.3e} tol(3sigma)={3 * p_se:.3e} "
            f"{'PASS' if ok_p else 'FAIL'}"
        )
        f_mc = pair.average_fidelity
        f_ex = float(exact.per_pair_fidelity.mean())
        df = abs(f_mc - f_ex)
        f_se = max(pair.standard_error, 1e-12)
        ok_f = df <= 3.0 * f_se
        click.echo(
            f"fidelity: trajectory={f_mc!r} oracle={f_ex!r} "
            f"|diff|={df:.3e} tol(3sigma)={3 * f_se:.3e} "
            f"{'PASS' if ok_f else 'FAIL'}"
        )
        if not (ok_p and ok_f):
            sys.exit(2)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except EstimationFailureError as exc:
        click.echo(f"estimation failure: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
