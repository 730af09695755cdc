"""Repeated PWM power-consumption experiments and their CSV/JSON/SVG reports."""

from __future__ import annotations

import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, ParameterError, SimulationError, SmaSimError
from .plant import SimTrace
from .power import StatSummary, mean_esd, percent_increase
from .presets import PROTOCOL_PAIRS
from .scenario import ScenarioConfig
from .svgplot import Series, line_plot
from .thermal import with_h

log = logging.getLogger(__name__)

CSV_COLUMNS = ("medium", "f_hz", "duty_pct", "run_idx", "P_a_W", "P_p_W", "amp_m")
PROVENANCE_KEYS = ("config_hash", "plant_hash", "seed", "tool_version")
# smallest multiplicative factor a perturbation may produce
MIN_FACTOR = 0.05
TRACE_WINDOW_S = 3.0


def _f(x: float) -> str:
    return "%.17g" % x


def duty_pct(duty_fraction: float) -> float:
    """Duty cycle in percent, rounded so 0.07 prints as 7 rather than 7.000000000000001."""
    return round(100.0 * duty_fraction, 9)


@dataclass(frozen=True)
class RunRecord:
    medium: str
    f_hz: float
    duty_pct: float
    run_idx: int
    P_a_W: float
    P_p_W: float
    amp_m: float


@dataclass(frozen=True)
class CampaignRow:
    medium: str
    pair_index: int
    f_hz: float
    duty_pct: float
    P_a: StatSummary
    P_p: StatSummary
    amplitude: StatSummary


def group_runs(runs: Sequence[RunRecord]) -> list:
    """Split runs into consecutive per-pair groups; a group restarts at run_idx 0.

    Restarting on run_idx keeps a repeated {f, DC} pair as two separate rows.
    """
    groups = []
    for r in runs:
        if r.run_idx == 0 or not groups or (groups[-1][0].medium, groups[-1][0].f_hz, groups[-1][0].duty_pct) != (
            r.medium,
            r.f_hz,
            r.duty_pct,
        ):
            groups.append([])
        groups[-1].append(r)
    return groups


@dataclass(frozen=True, eq=False)
class CampaignResult:
    runs: tuple
    provenance: dict
    notes: tuple = ()
    traces: dict = field(default_factory=dict, repr=False)

    @property
    def rows(self) -> list:
        out = []
        counters = {}
        for g in group_runs(self.runs):
            first = g[0]
            idx = counters.get(first.medium, 0)
            counters[first.medium] = idx + 1
            out.append(
                CampaignRow(
                    first.medium,
                    idx,
                    first.f_hz,
                    first.duty_pct,
                    mean_esd([r.P_a_W for r in g]),
                    mean_esd([r.P_p_W for r in g]),
                    mean_esd([r.amp_m for r in g]),
                )
            )
        return out

    @property
    def media(self) -> list:
        seen = []
        for r in self.runs:
            if r.medium not in seen:
                seen.append(r.medium)
        return seen

    def merge(self, other: "CampaignResult", force: bool = False) -> "CampaignResult":
        """Concatenate two campaigns (e.g. air then water) of the same device."""
        a, b = self.provenance, other.provenance
        if a.get("plant_hash") != b.get("plant_hash") and not force:
            raise ParameterError("plant_hash", f"campaigns use different plants ({a.get('plant_hash')} vs {b.get('plant_hash')})")
        clash = set(self.media) & set(other.media)
        if clash:
            raise ParameterError("medium", f"both campaigns contain {sorted(clash)}")
        prov = {
            "config_hash": f"{a.get('config_hash')}+{b.get('config_hash')}",
            "plant_hash": a.get("plant_hash") if a.get("plant_hash") == b.get("plant_hash") else f"{a.get('plant_hash')}+{b.get('plant_hash')}",
            "seed": a.get("seed") if a.get("seed") == b.get("seed") else f"{a.get('seed')}+{b.get('seed')}",
            "tool_version": a.get("tool_version"),
        }
        return CampaignResult(self.runs + other.runs, prov, self.notes + other.notes, {**self.traces, **other.traces})

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        for key in PROVENANCE_KEYS:
            buf.write(f"# {key}: {self.provenance.get(key)}\n")
        for note in self.notes:
            buf.write(f"# note: {note}\n")
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.runs:
            buf.write(
                ",".join(
                    [r.medium, _f(r.f_hz), _f(r.duty_pct), str(r.run_idx), _f(r.P_a_W), _f(r.P_p_W), _f(r.amp_m)]
                )
                + "\n"
            )
        return buf.getvalue()

    def summary(self) -> dict:
        def stat(s: StatSummary):
            return {"mean": s.mean, "esd": s.esd, "n": s.n}

        return {
            "provenance": dict(self.provenance),
            "notes": list(self.notes),
            "rows": [
                {
                    "medium": r.medium,
                    "pair_index": r.pair_index,
                    "f_hz": r.f_hz,
                    "duty_pct": r.duty_pct,
                    "P_a_W": stat(r.P_a),
                    "P_p_W": stat(r.P_p),
                    "amp_m": stat(r.amplitude),
                }
                for r in self.rows
            ],
        }


def _threads() -> int:
    env = os.environ.get("SMA_SIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer SMA_SIM_THREADS=%r", env)
    return os.cpu_count() or 1


def perturbation_factors(config: ScenarioConfig, n_pairs: int) -> np.ndarray:
    """Per-run multiplicative factors, shape (n_pairs, repeats, 2): h, then wall conductance.

    Drawn in one fixed order from ``noise_seed`` so results do not depend on
    how runs are scheduled.
    """
    rng = np.random.default_rng(config.noise_seed)
    z = rng.standard_normal((n_pairs, config.repeats, 2))
    return np.maximum(1.0 + config.noise_level * z, MIN_FACTOR)


def perturbed(config: ScenarioConfig, h_factor: float, wall_factor: float) -> ScenarioConfig:
    plant = config.plant
    plant = replace(plant, medium=with_h(plant.medium, h_factor))
    if plant.chamber is not None:
        ch = plant.chamber
        plant = replace(plant, chamber=replace(ch, wall_conductance_W_K=ch.wall_conductance_W_K * wall_factor))
    return replace(config, plant=plant)


def run_campaign(
    config: ScenarioConfig,
    pairs: Sequence = PROTOCOL_PAIRS,
    threads: Optional[int] = None,
    keep_traces: bool = True,
) -> CampaignResult:
    """Simulate every {f, DC} pair ``config.repeats`` times with seeded h noise.

    Runs are independent and execute on a thread pool capped by
    ``SMA_SIM_THREADS``; the output order is fixed regardless.
    """
    pairs = [(float(f), float(d)) for f, d in pairs]
    if not pairs:
        raise ParameterError("pairs", "need at least one {f, DC} pair")
    factors = perturbation_factors(config, len(pairs))
    jobs = []
    for i, (f, d) in enumerate(pairs):
        try:
            base = config.with_pair(f, d)
        except ParameterError as exc:
            raise SimulationError(f"{config.name} pair {i} (f={f:g} Hz, DC={duty_pct(d):g} %)", exc) from None
        for k in range(config.repeats):
            jobs.append((i, k, f, d, perturbed(base, *factors[i, k])))

    def run(job):
        i, k, f, d, cfg = job
        try:
            return cfg.run(warn=(i == 0 and k == 0))
        except (SmaSimError, ArithmeticError, ValueError) as exc:
            raise SimulationError(f"{config.name} pair {i} (f={f:g} Hz, DC={duty_pct(d):g} %) run {k}", exc) from exc

    n_threads = min(threads or _threads(), len(jobs))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(j) for j in jobs]

    runs = []
    traces = {}
    for (i, k, f, d, _), out in zip(jobs, outcomes):
        runs.append(RunRecord(config.name, f, duty_pct(d), k, out.metrics.P_a_W, out.metrics.P_p_W, out.amplitude_m))
        if keep_traces and i == 0 and k == 0:
            traces[config.name] = out.trace
    notes = []
    if config.peak_temp_setpoint_C is not None:
        notes.append(f"{config.name}: drive amplitude sized per run for a {config.peak_temp_setpoint_C:.6g} °C wire peak")
    if config.plant.chamber is not None:
        notes.append(f"{config.name}: chamber drive is an assumption (duty {duty_pct(pairs[0][1]):g} % at {pairs[0][0]:g} Hz)")
    provenance = {
        "config_hash": config.config_hash(),
        "plant_hash": config.plant.plant_hash(),
        "seed": config.noise_seed,
        "tool_version": __version__,
    }
    return CampaignResult(tuple(runs), provenance, tuple(notes), traces)


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def _trace_plots(label: str, trace: SimTrace, skip_s: float) -> dict:
    t = trace.time_s
    sel = (t >= t[0] + skip_s) & (t < t[0] + skip_s + TRACE_WINDOW_S)
    tt = t[sel]
    disp = line_plot(
        [Series(label, tt, trace.displacement_m[sel] * 1e3)], f"{label}: output displacement", "time (s)", "displacement (mm)"
    )
    power = line_plot([Series(label, tt, trace.power_W[sel])], f"{label}: instantaneous power", "time (s)", "P(t) (W)")
    return {f"trace_{label}_displacement.svg": disp, f"trace_{label}_power.svg": power}


def report(result: CampaignResult, out_dir, skip_s: float = 2.0) -> list:
    """Write campaign.csv, summary.json and SVG plots; returns the written paths.

    Everything is rendered in memory first, so a failure leaves no partial set.
    """
    if not result.runs:
        raise ParameterError("rows", "campaign result is empty; nothing to report")
    out = Path(out_dir)
    files = {
        "campaign.csv": result.to_csv(),
        "summary.json": json.dumps(result.summary(), indent=2, sort_keys=True) + "\n",
    }
    rows = result.rows
    for key, name, label in (("P_a", "power_average.svg", "average power"), ("P_p", "power_peak.svg", "peak power")):
        series = []
        for medium in result.media:
            mr = [r for r in rows if r.medium == medium]
            series.append(
                Series(
                    medium,
                    [r.f_hz for r in mr],
                    [getattr(r, key).mean for r in mr],
                    [getattr(r, key).esd for r in mr],
                    markers=True,
                )
            )
        files[name] = line_plot(
            series, f"{label} (mean ± ESD), config {result.provenance.get('config_hash')}", "PWM frequency (Hz)", f"{key} (W)"
        )
    for label in sorted(result.traces):
        files.update(_trace_plots(label, result.traces[label], skip_s))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create {out}: {exc.strerror}") from None
    written = []
    for name in sorted(files):
        _write(out / name, files[name])
        written.append(out / name)
    return written


def read_campaign_csv(path) -> CampaignResult:
    prov = {}
    notes = []
    runs = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    header_seen = False
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            key, val = key.strip(), val.strip()
            if key == "note":
                notes.append(val)
            elif key == "seed":
                prov[key] = int(val) if val.lstrip("-").isdigit() else val
            else:
                prov[key] = val
            continue
        parts = line.split(",")
        if not header_seen:
            if tuple(parts) != CSV_COLUMNS:
                raise ConfigError(f"{path}:{n}: expected header {','.join(CSV_COLUMNS)}")
            header_seen = True
            continue
        if len(parts) != len(CSV_COLUMNS):
            raise ConfigError(f"{path}:{n}: expected {len(CSV_COLUMNS)} fields, got {len(parts)}")
        try:
            runs.append(
                RunRecord(parts[0], float(parts[1]), float(parts[2]), int(parts[3]), float(parts[4]), float(parts[5]), float(parts[6]))
            )
        except ValueError as exc:
            raise ConfigError(f"{path}:{n}: {exc}") from None
    if not runs:
        raise ConfigError(f"{path}: no campaign rows")
    return CampaignResult(tuple(runs), prov, tuple(notes))


@dataclass(frozen=True)
class ComparisonRow:
    f_hz: float
    duty_pct: float
    base_P_a_W: float
    new_P_a_W: float
    P_a_increase_pct: float
    base_P_p_W: float
    new_P_p_W: float
    P_p_increase_pct: float


def compare(base: CampaignResult, new: CampaignResult, force: bool = False) -> list:
    """Percent increase of mean P_a and P_p from ``base`` to ``new``, pair by pair."""
    hb, hn = base.provenance.get("plant_hash"), new.provenance.get("plant_hash")
    if hb != hn and not force:
        raise ParameterError("plant_hash", f"campaigns use different plants ({hb} vs {hn}); pass --force to compare anyway")
    rb, rn = base.rows, new.rows
    if [(r.f_hz, r.duty_pct) for r in rb] != [(r.f_hz, r.duty_pct) for r in rn]:
        raise ParameterError("pairs", "campaigns cover different {f, DC} pairs")
    return [
        ComparisonRow(
            a.f_hz,
            a.duty_pct,
            a.P_a.mean,
            b.P_a.mean,
            percent_increase(b.P_a.mean, a.P_a.mean),
            a.P_p.mean,
            b.P_p.mean,
            percent_increase(b.P_p.mean, a.P_p.mean),
        )
        for a, b in zip(rb, rn)
    ]


def format_comparison(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO(newline="")
    buf.write("f_hz,duty_pct,base_P_a_W,new_P_a_W,P_a_increase_pct,base_P_p_W,new_P_p_W,P_p_increase_pct\n")
    for r in rows:
        buf.write(
            ",".join(
                [
                    "%.6g" % r.f_hz,
                    "%.6g" % r.duty_pct,
                    "%.6g" % r.base_P_a_W,
                    "%.6g" % r.new_P_a_W,
                    "%.6g" % r.P_a_increase_pct,
                    "%.6g" % r.base_P_p_W,
                    "%.6g" % r.new_P_p_W,
                    "%.6g" % r.P_p_increase_pct,
                ]
            )
            + "\n"
        )
    return buf.getvalue()
