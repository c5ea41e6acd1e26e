"""Shared optimizer configuration and the uniform run record.

Every strategy appends one history entry per outer iteration carrying
the incumbent (best-so-far) design and its aero state, so best-so-far
objective traces are non-increasing by construction. Run files are
versioned JSON without wall time, which keeps reruns under identical
seeds bitwise identical; wall time lives only on the in-memory record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import FileFormatError, InvalidInputError
from ..geometry import DESIGN_VARIABLES

RUN_FORMAT = "chimera-run-v1"


@dataclass(frozen=True)
class OptConfig:
    """Hyperparameters for all five strategies plus the run seed."""

    # multi-start gradient
    n_starts: int = 20
    max_iter: int = 5000
    max_evals: int = 1_000_000
    step_tol: float = 1e-12
    optimality_tol: float = 1e-6
    constraint_tol: float = 1e-3
    # particle swarm
    swarm_size: int = 200
    pso_max_iter: int = 1000
    pso_stall: int = 20
    c1: float = 1.49
    c2: float = 1.49
    inertia_start: float = 0.9
    inertia_end: float = 0.4
    # genetic algorithm
    population: int = 200
    generations: int = 1000
    ga_stall: int = 20
    crossover_alpha: float = 0.5
    mutation_rate: float = 0.1
    mutation_sigma: float = 0.05
    elite: int = 1
    # bayesian optimization
    bo_seeds: int = 100
    bo_max_evals: int = 150
    bo_active_set: int = 200
    exploration: float = 0.8
    # lipschitz partitioning
    lip_budget: int = 500
    lip_tol: float = 1e-3
    lip_trigger: int = 6
    lip_reliability: float = 1.1
    lip_initial: float = 1e-32
    seed: int = 0

    def __post_init__(self):
        counts = (self.n_starts, self.max_iter, self.max_evals, self.swarm_size,
                  self.pso_max_iter, self.pso_stall, self.population,
                  self.generations, self.ga_stall, self.elite, self.bo_seeds,
                  self.bo_max_evals, self.bo_active_set, self.lip_budget,
                  self.lip_trigger)
        if min(counts) < 1:
            raise InvalidInputError("all optimizer counts must be >= 1")
        tols = (self.step_tol, self.optimality_tol, self.constraint_tol,
                self.lip_tol)
        if min(tols) <= 0.0:
            raise InvalidInputError("all tolerances must be > 0")
        if self.bo_seeds >= self.bo_max_evals:
            raise InvalidInputError("bo_seeds must be < bo_max_evals")
        if not 0.0 <= self.exploration <= 1.0:
            raise InvalidInputError("exploration must lie in [0, 1]")


@dataclass
class HistoryEntry:
    iteration: int
    x: np.ndarray
    f: float
    lift: float
    drag: float
    c_lift: float
    c_drag: float

    def as_list(self) -> list:
        return [self.iteration, [float(v) for v in self.x], self.f,
                self.lift, self.drag, self.c_lift, self.c_drag]

    @classmethod
    def from_list(cls, row) -> "HistoryEntry":
        return cls(int(row[0]), np.asarray(row[1], dtype=float),
                   float(row[2]), float(row[3]), float(row[4]),
                   float(row[5]), float(row[6]))


@dataclass
class OptRun:
    """Uniform result record for one optimizer invocation."""

    method: str
    x_best: np.ndarray
    f_best: float
    feasible: bool
    h_best: float
    history: list = field(default_factory=list)
    kkt: Optional[dict] = None
    stability: Optional[list] = None
    meta: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def best_trace(self) -> np.ndarray:
        return np.array([e.f for e in self.history])

    # -- persistence ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": RUN_FORMAT,
            "method": self.method,
            "x_best": [float(v) for v in self.x_best],
            "f_best": float(self.f_best),
            "feasible": bool(self.feasible),
            "h_best": float(self.h_best),
            "history": [e.as_list() for e in self.history],
            "kkt": self.kkt,
            "stability": self.stability,
            "meta": self.meta,
        }

    def save(self, path) -> None:
        blob = json.dumps(self.to_dict(), sort_keys=True, indent=1)
        Path(path).write_text(blob + "\n")

    @classmethod
    def from_dict(cls, record: dict) -> "OptRun":
        if not isinstance(record, dict):
            raise FileFormatError("run record must be a JSON object")
        if record.get("format") != RUN_FORMAT:
            raise FileFormatError(f"field 'format': expected {RUN_FORMAT!r}, "
                                  f"got {record.get('format')!r}")
        for name in ("method", "x_best", "f_best", "feasible", "h_best", "history"):
            if name not in record:
                raise FileFormatError(f"field {name!r}: missing")
        try:
            history = [HistoryEntry.from_list(row) for row in record["history"]]
            return cls(
                method=str(record["method"]),
                x_best=np.asarray(record["x_best"], dtype=float),
                f_best=float(record["f_best"]),
                feasible=bool(record["feasible"]),
                h_best=float(record["h_best"]),
                history=history,
                kkt=record.get("kkt"),
                stability=record.get("stability"),
                meta=dict(record.get("meta") or {}),
            )
        except (TypeError, ValueError, IndexError) as exc:
            raise FileFormatError(f"malformed run record: {exc}") from exc

    @classmethod
    def load(cls, path) -> "OptRun":
        try:
            record = json.loads(Path(path).read_text())
        except ValueError as exc:
            raise FileFormatError(f"{path}: not valid JSON: {exc}") from exc
        return cls.from_dict(record)

    def history_csv(self, path) -> None:
        """History as plain CSV: iteration, objective, aero state, design."""
        header = ["iteration", "f", "lift", "drag", "c_lift", "c_drag"]
        header += list(DESIGN_VARIABLES)
        rows = []
        for e in self.history:
            rows.append([e.iteration, e.f, e.lift, e.drag, e.c_lift, e.c_drag]
                        + [float(v) for v in e.x])
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join("%d" % v if i == 0 else "%.17g" % v
                                  for i, v in enumerate(row)) + "\n")


class IncumbentTracker:
    """Keeps the best-so-far point and appends history entries."""

    def __init__(self, spec):
        self.spec = spec
        self.x = None
        self.f = np.inf
        self.history: list = []

    def offer(self, x: np.ndarray, f: float) -> bool:
        if self.x is None or f < self.f:
            self.x = np.asarray(x, dtype=float).copy()
            self.f = float(f)
            return True
        return False

    def record(self, iteration: int) -> None:
        values = self.spec.aero(self.x[None, :])[0]
        self.history.append(HistoryEntry(
            iteration=iteration, x=self.x.copy(), f=self.f,
            lift=float(values[0]), drag=float(values[1]),
            c_lift=float(values[2]), c_drag=float(values[3])))
