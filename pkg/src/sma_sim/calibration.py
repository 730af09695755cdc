"""Bounded Nelder-Mead calibration of plant and drive parameters against scalar targets."""

from __future__ import annotations

import copy
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, ParameterError, SimulationError, SmaSimError
from .scenario import ScenarioConfig

log = logging.getLogger(__name__)

PROBLEM_SCHEMA = "sma-sim/calibration-1"
QUANTITIES = ("P_a", "P_p", "amplitude")
PLANT_SECTIONS = ("wire", "medium", "chamber", "kinetics", "transmission")


@dataclass(frozen=True)
class FreeParameter:
    """A calibrated value addressed as ``<scenario>.<section>.<field>``.

    ``<scenario>`` may be ``plant`` to hit the same field in every scenario.
    ``scale="log"`` applies the logistic mapping to log(value), which suits
    bounds spanning decades.
    """

    name: str
    lo: float
    hi: float
    scale: str = "linear"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ParameterError(self.name, f"bounds need lo < hi, got [{self.lo}, {self.hi}]")
        if self.scale not in ("linear", "log"):
            raise ParameterError(self.name, f"scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and self.lo <= 0:
            raise ParameterError(self.name, "log scale needs lo > 0")

    def _unit(self, value):
        if self.scale == "log":
            return (math.log(value) - math.log(self.lo)) / (math.log(self.hi) - math.log(self.lo))
        return (value - self.lo) / (self.hi - self.lo)

    def to_internal(self, value: float) -> float:
        u = min(max(self._unit(value), 1e-9), 1 - 1e-9)
        return math.log(u / (1.0 - u))

    def from_internal(self, z: float) -> float:
        u = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
        if self.scale == "log":
            v = math.exp(math.log(self.lo) + u * (math.log(self.hi) - math.log(self.lo)))
        else:
            v = self.lo + u * (self.hi - self.lo)
        return min(max(v, self.lo), self.hi)


@dataclass(frozen=True)
class Target:
    scenario: str
    quantity: str
    value: float
    weight: float = 1.0

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ParameterError("quantity", f"must be one of {QUANTITIES}, got {self.quantity!r}")
        if not self.weight > 0:
            raise ParameterError("weight", f"must be > 0, got {self.weight}")
        if self.value == 0 or not math.isfinite(self.value):
            raise ParameterError("value", "targets must be finite and non-zero (errors are relative)")


@dataclass(frozen=True)
class CalibrationProblem:
    scenarios: dict
    parameters: tuple
    targets: tuple
    max_evals: int = 400
    seed: int = 0
    notes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise ParameterError("targets", "need at least one target")
        if not self.parameters:
            raise ParameterError("parameters", "need at least one free parameter")
        for t in self.targets:
            if t.scenario not in self.scenarios:
                raise ParameterError("targets", f"unknown scenario {t.scenario!r}")
        docs = self._docs()
        for p in self.parameters:
            _get_path(docs, p.name, self.scenarios)  # validates the address
        if not self.max_evals >= 1:
            raise ParameterError("max_evals", f"must be >= 1, got {self.max_evals}")

    def _docs(self) -> dict:
        return {name: s.to_dict() for name, s in self.scenarios.items()}

    def initial_values(self) -> np.ndarray:
        docs = self._docs()
        vals = []
        for p in self.parameters:
            v = _get_path(docs, p.name, self.scenarios)
            vals.append(min(max(float(v), p.lo), p.hi) if v is not None else 0.5 * (p.lo + p.hi))
        return np.array(vals)

    def scenarios_at(self, params: Sequence[float]) -> dict:
        """Scenario configs with ``params`` written into them."""
        docs = self._docs()
        for p, v in zip(self.parameters, params):
            _set_path(docs, p.name, float(v), self.scenarios)
        out = {}
        for name, doc in docs.items():
            try:
                out[name] = ScenarioConfig.from_dict(doc)
            except ConfigError as exc:
                raise SimulationError(name, exc) from None
        return out

    def to_dict(self) -> dict:
        return {
            "schema": PROBLEM_SCHEMA,
            "scenarios": {k: v.to_dict() for k, v in self.scenarios.items()},
            "parameters": [p.__dict__.copy() for p in self.parameters],
            "targets": [t.__dict__.copy() for t in self.targets],
            "max_evals": self.max_evals,
            "seed": self.seed,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CalibrationProblem":
        if not isinstance(doc, dict):
            raise ConfigError("calibration problem must be a JSON object")
        if doc.get("schema", PROBLEM_SCHEMA) != PROBLEM_SCHEMA:
            raise ConfigError(f"unsupported calibration schema {doc.get('schema')!r}")
        try:
            template = doc.get("plant")
            scenarios = {}
            for name, sdoc in doc["scenarios"].items():
                sdoc = dict(sdoc)
                if "plant" not in sdoc:
                    if template is None:
                        raise ConfigError(f"scenario {name!r} has no plant and the problem no template")
                    plant = copy.deepcopy(template)
                    for section in ("medium", "chamber"):
                        if section in sdoc:
                            plant[section] = sdoc.pop(section)
                    sdoc["plant"] = plant
                scenarios[name] = ScenarioConfig.from_dict(sdoc)
            return cls(
                scenarios=scenarios,
                parameters=[FreeParameter(**p) for p in doc["parameters"]],
                targets=[Target(**t) for t in doc["targets"]],
                max_evals=int(doc.get("max_evals", 400)),
                seed=int(doc.get("seed", 0)),
                notes=tuple(doc.get("notes", ())),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(f"malformed calibration problem: {exc!r}") from None
        except ParameterError as exc:
            raise ConfigError(f"calibration problem: {exc}") from None


def _split(name: str, scenarios) -> tuple:
    parts = name.split(".")
    if len(parts) < 2:
        raise ParameterError(name, "expected <scenario>.<section>.<field>")
    scope, rest = parts[0], parts[1:]
    if scope != "plant" and scope not in scenarios:
        raise ParameterError(name, f"unknown scenario {scope!r}")
    if scope == "plant" and (len(rest) != 2 or rest[0] not in PLANT_SECTIONS):
        raise ParameterError(name, f"plant parameters are plant.<{'|'.join(PLANT_SECTIONS)}>.<field>")
    return scope, rest


def _locate(doc: dict, rest: list, name: str):
    """Return (container, key) for a scenario-relative path."""
    if len(rest) == 1:
        container, key = doc, rest[0]
    elif rest[0] == "drive":
        container, key = doc["drive"], rest[1]
    elif rest[0] in PLANT_SECTIONS:
        container, key = doc["plant"][rest[0]], rest[1]
    else:
        raise ParameterError(name, f"unknown section {rest[0]!r}")
    if container is None or key not in container:
        raise ParameterError(name, "no such field in the scenario")
    return container, key


def _get_path(docs: dict, name: str, scenarios):
    scope, rest = _split(name, scenarios)
    doc = docs[next(iter(docs))] if scope == "plant" else docs[scope]
    container, key = _locate(doc, rest, name)
    return container[key]


def _set_path(docs: dict, name: str, value: float, scenarios):
    scope, rest = _split(name, scenarios)
    for sname in docs if scope == "plant" else [scope]:
        container, key = _locate(docs[sname], rest, name)
        container[key] = value


def _quantity(outcome, quantity: str) -> float:
    if quantity == "P_a":
        return outcome.metrics.P_a_W
    if quantity == "P_p":
        return outcome.metrics.P_p_W
    return outcome.amplitude_m


def simulate_targets(problem: CalibrationProblem, params: Sequence[float]) -> list:
    """Simulated value of every target, one simulation per scenario involved."""
    scenarios = problem.scenarios_at(params)
    outcomes = {}
    values = []
    for t in problem.targets:
        if t.scenario not in outcomes:
            try:
                outcomes[t.scenario] = scenarios[t.scenario].run(warn=False)
            except SimulationError:
                raise
            except (SmaSimError, ArithmeticError, ValueError) as exc:
                raise SimulationError(t.scenario, exc) from exc
        values.append(_quantity(outcomes[t.scenario], t.quantity))
    return values


def objective(problem: CalibrationProblem, params: Sequence[float]) -> float:
    """Weighted RMS of relative target errors."""
    for p, v in zip(problem.parameters, params):
        if not p.lo <= v <= p.hi:
            raise ParameterError(p.name, f"{v} lies outside [{p.lo}, {p.hi}]")
    sims = simulate_targets(problem, params)
    num = 0.0
    den = 0.0
    for t, s in zip(problem.targets, sims):
        num += t.weight * ((s - t.value) / t.value) ** 2
        den += t.weight
    return math.sqrt(num / den)


@dataclass(frozen=True)
class CalibrationResult:
    params: dict
    residual: float
    evals: int
    converged: bool
    status: str
    initial_residual: float
    history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "params": dict(self.params),
            "residual": self.residual,
            "initial_residual": self.initial_residual,
            "evals": self.evals,
            "converged": self.converged,
            "status": self.status,
        }

    def history_csv(self) -> str:
        buf = io.StringIO(newline="")
        names = list(self.params)
        buf.write(",".join(["iteration", "evals", "best_residual"] + names) + "\n")
        for it, ev, best, vals in self.history:
            buf.write(",".join([str(it), str(ev), "%.17g" % best] + ["%.17g" % v for v in vals]) + "\n")
        return buf.getvalue()


def _threads() -> int:
    env = os.environ.get("SMA_SIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def nelder_mead(
    fun: Callable[[np.ndarray], float],
    x0: np.ndarray,
    max_evals: int,
    seed: int = 0,
    step: float = 0.5,
    xtol: float = 1e-6,
    pool: Optional[ThreadPoolExecutor] = None,
    on_iteration: Optional[Callable] = None,
):
    """Unconstrained Nelder-Mead with a seeded, randomly rotated initial simplex.

    Stops when the simplex diameter, relative to ``max(1, |x_best|)``, falls
    below ``xtol`` or after ``max_evals`` evaluations. Returns
    ``(x_best, f_best, evals, collapsed)``.
    """
    n = x0.size
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    simplex = np.vstack([x0] + [x0 + step * q[:, i] for i in range(n)])
    evals = 0

    def evaluate_many(points):
        nonlocal evals
        evals += len(points)
        if pool is not None and len(points) > 1:
            return list(pool.map(fun, list(points)))
        return [fun(p) for p in points]

    def evaluate(p):
        nonlocal evals
        evals += 1
        return fun(p)

    fvals = np.array(evaluate_many(simplex))
    collapsed = False
    iteration = 0
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        iteration += 1
        if on_iteration is not None:
            on_iteration(iteration, evals, fvals[0], simplex[0])
        diam = np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1))
        if diam / max(1.0, np.linalg.norm(simplex[0])) < xtol:
            collapsed = True
            break
        if evals >= max_evals:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = evaluate(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = evaluate(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = evaluate(xc)
            accept = fc <= fr
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = evaluate(xc)
            accept = fc < fvals[-1]
        if accept:
            simplex[-1], fvals[-1] = xc, fc
            continue
        shrunk = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
        simplex[1:] = shrunk
        fvals[1:] = evaluate_many(shrunk)
    best = int(np.argmin(fvals))
    return simplex[best], float(fvals[best]), evals, collapsed


def calibrate(problem: CalibrationProblem, pool_threads: Optional[int] = None) -> CalibrationResult:
    """Fit the free parameters by Nelder-Mead over logistic-transformed coordinates.

    Every evaluated point maps strictly inside the bounds. The best point ever
    evaluated is returned, so the residual never exceeds the starting one.
    """
    params = problem.parameters
    p0 = problem.initial_values()
    z0 = np.array([p.to_internal(v) for p, v in zip(params, p0)])

    def to_params(z):
        return np.array([p.from_internal(float(zi)) for p, zi in zip(params, z)])

    def fun(z):
        return objective(problem, to_params(z))

    history = []
    initial = objective(problem, to_params(z0))

    def record(it, evals, fbest, zbest):
        history.append((it, evals, float(fbest), tuple(float(v) for v in to_params(zbest))))

    threads = pool_threads if pool_threads is not None else _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            zb, fb, evals, collapsed = nelder_mead(fun, z0, problem.max_evals, problem.seed, pool=pool, on_iteration=record)
    else:
        zb, fb, evals, collapsed = nelder_mead(fun, z0, problem.max_evals, problem.seed, on_iteration=record)
    evals += 1  # the initial-point evaluation
    best = to_params(zb)
    if fb > initial:
        best, fb = to_params(z0), initial
    if collapsed:
        status = "converged"
    elif fb < initial:
        status = "max_evals"
    else:
        status = "no_improvement"
    log.info("calibration %s after %d evaluations, residual %.3g", status, evals, fb)
    return CalibrationResult(
        params={p.name: float(v) for p, v in zip(params, best)},
        residual=float(fb),
        evals=evals,
        converged=collapsed and fb <= initial,
        status=status,
        initial_residual=float(initial),
        history=tuple(history),
    )


def load_problem(path) -> CalibrationProblem:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return CalibrationProblem.from_dict(doc)


def apply_result(problem: CalibrationProblem, result: CalibrationResult) -> dict:
    """Scenario configs with the fitted values substituted."""
    return problem.scenarios_at([result.params[p.name] for p in problem.parameters])
