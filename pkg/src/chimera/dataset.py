"""Dataset generation, outlier filtering, normalization and persistence.

A labeled sample is one row: the 8 design variables, the four aero targets
(L, D, C_L, C_D), the 24 dimensional stability derivatives, and the ten
3-class stability labels (0 = Unstable, 1 = SemiStable, 2 = Stable).

Files: CSV with a header row (floats printed with 17 significant digits so
reload is exact), or the compact binary layout
``b"CHD1" | uint32 n_cols | uint32 n_rows | float64 row-major data``
(little-endian). Both carry a JSON sidecar ``<path>.meta.json`` holding the
generating bounds, seed and provenance counters.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import FileFormatError, InvalidInputError
from .geometry import Bounds, DESIGN_VARIABLES, DesignVector, camber_line
from .stability import (DERIVATIVE_NAMES, DerivativeSet, FixedAirframe,
                        StabilityReport, TESTED_DERIVATIVES, analyze_design)

AERO_COLUMNS = ("lift", "drag", "c_lift", "c_drag")
LABEL_COLUMNS = tuple(f"stab_{name}" for name in TESTED_DERIVATIVES)
COLUMNS = DESIGN_VARIABLES + AERO_COLUMNS + DERIVATIVE_NAMES + LABEL_COLUMNS

_MAGIC = b"CHD1"


@dataclass(frozen=True)
class Sample:
    design: DesignVector
    aero: np.ndarray          # L, D, C_L, C_D
    derivatives: DerivativeSet
    report: StabilityReport

    def __post_init__(self):
        aero = np.asarray(self.aero, dtype=float)
        object.__setattr__(self, "aero", aero)
        if aero.shape != (4,) or not np.isfinite(aero).all():
            raise InvalidInputError("aero labels must be 4 finite values")

    def as_row(self) -> np.ndarray:
        return np.concatenate([
            self.design.as_array(), self.aero,
            self.derivatives.as_array(), self.report.as_array().astype(float)])

    @classmethod
    def from_row(cls, row) -> "Sample":
        row = np.asarray(row, dtype=float)
        if row.shape != (len(COLUMNS),):
            raise InvalidInputError(f"expected {len(COLUMNS)} columns, got {row.shape}")
        return cls(
            design=DesignVector.from_array(row[:8]),
            aero=row[8:12],
            derivatives=DerivativeSet.from_array(row[12:36]),
            report=StabilityReport(labels=tuple(int(v) for v in row[36:])),
        )


@dataclass
class WingDataset:
    """Row matrix + metadata. ``data`` columns follow ``COLUMNS``."""

    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != len(COLUMNS):
            raise InvalidInputError(
                f"dataset must have {len(COLUMNS)} columns, got shape {self.data.shape}")

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def design_matrix(self) -> np.ndarray:
        return self.data[:, :8]

    @property
    def aero_matrix(self) -> np.ndarray:
        return self.data[:, 8:12]

    @property
    def derivative_matrix(self) -> np.ndarray:
        return self.data[:, 12:36]

    @property
    def label_matrix(self) -> np.ndarray:
        return self.data[:, 36:].astype(int)

    def bounds(self) -> Optional[Bounds]:
        b = self.meta.get("bounds")
        if b is None:
            return None
        return Bounds(lb=np.asarray(b["lb"]), ub=np.asarray(b["ub"]))

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], meta: Optional[dict] = None) -> "WingDataset":
        if not samples:
            raise InvalidInputError("no samples")
        return cls(data=np.vstack([s.as_row() for s in samples]), meta=dict(meta or {}))

    def samples(self) -> list:
        return [Sample.from_row(row) for row in self.data]


def sample_designs(bounds: Bounds, n: int, seed: int) -> list:
    """n i.i.d. uniform designs in the box, deterministic per seed."""
    if n < 1:
        raise InvalidInputError("sample count must be >= 1")
    if bounds.dim != len(DESIGN_VARIABLES):
        raise InvalidInputError(f"bounds must have {len(DESIGN_VARIABLES)} dims")
    rng = np.random.default_rng(seed)
    x = bounds.lb + bounds.span * rng.random((n, bounds.dim))
    return [DesignVector.from_array(row) for row in x]


def _label_one(args):
    idx, x, airframe, altitude, n_chord, n_span, cambered = args
    from .errors import ChimeraError
    try:
        dv = DesignVector.from_array(x)
        an = analyze_design(dv, airframe, altitude=altitude, n_chord=n_chord,
                            n_span=n_span, camber=camber_line if cambered else None)
        sol = an.trim_solution
        sample = Sample(design=dv,
                        aero=np.array([sol.lift, sol.drag, sol.c_lift, sol.c_drag]),
                        derivatives=an.derivatives, report=an.report)
        return idx, sample, None
    except ChimeraError as exc:
        return idx, None, f"{type(exc).__name__}: {exc}"


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit argument, else CHIMERA_THREADS, else 1."""
    if threads is None:
        env = os.environ.get("CHIMERA_THREADS", "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise InvalidInputError("thread count must be >= 1")
    return threads


def label_samples(designs: Sequence[DesignVector], airframe: Optional[FixedAirframe] = None,
                  altitude: float = 1200.0, n_chord: int = 10, n_span: int = 20,
                  cambered: bool = True, threads: Optional[int] = None):
    """Run the combined VLM + stability analysis over designs.

    Returns (samples, failures); failures are (index, message) pairs and
    the corresponding designs are dropped. Deterministic regardless of the
    worker count (each sample is independent).
    """
    airframe = airframe or FixedAirframe()
    threads = resolve_threads(threads)
    jobs = [(i, dv.as_array(), airframe, altitude, n_chord, n_span, cambered)
            for i, dv in enumerate(designs)]
    if threads == 1 or len(jobs) < 4:
        results = [_label_one(job) for job in jobs]
    else:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(threads) as pool:
            results = pool.map(_label_one, jobs, chunksize=max(1, len(jobs) // (8 * threads)))
    samples, failures = [], []
    for idx, sample, err in sorted(results, key=lambda t: t[0]):
        if err is None:
            samples.append(sample)
        else:
            failures.append((idx, err))
    return samples, failures


# --- LOF ---------------------------------------------------------------------

def lof_scores(x: np.ndarray, k: int) -> np.ndarray:
    """Local outlier factor of every row of x with k neighbors.

    Classic definition: reach-dist_k(p, o) = max(kdist(o), d(p, o)),
    lrd(p) = k / sum of reach distances to the k nearest neighbors,
    LOF(p) = mean lrd of those neighbors / lrd(p). Neighbor sets of
    exactly k points, distance ties broken by input index. Coincident
    clusters (zero reach sums) get LOF 1 by the inf/inf convention.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if n <= k:
        raise InvalidInputError(f"need more than k={k} samples, got {n}")

    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, np.inf)

    order = np.argsort(dist, axis=1, kind="stable")
    neighbors = order[:, :k]
    rows = np.arange(n)[:, None]
    kdist = dist[rows, order[:, k - 1:k]]

    reach = np.maximum(kdist[neighbors, 0], dist[rows, neighbors])
    reach_sum = reach.sum(axis=1)
    with np.errstate(divide="ignore"):
        lrd = k / reach_sum
    mean_neighbor_lrd = lrd[neighbors].mean(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        lof = mean_neighbor_lrd / lrd
    lof[np.isinf(mean_neighbor_lrd) & np.isinf(lrd)] = 1.0
    return lof


def lof_feature_matrix(dataset: WingDataset) -> np.ndarray:
    """Feature space for outlier scoring: design variables scaled by the
    generating bounds, aero targets standardized."""
    bounds = dataset.bounds()
    if bounds is None:
        raise InvalidInputError("dataset has no bounds metadata for scaling")
    scaler = ScalingSpec.from_bounds(bounds)
    aero = dataset.aero_matrix
    std = aero.std(axis=0)
    std[std < 1e-30] = 1.0
    return np.hstack([scaler.normalize(dataset.design_matrix),
                      (aero - aero.mean(axis=0)) / std])


def lof_filter(dataset: WingDataset, k: int = 200, contamination: float = 1e-4):
    """Drop the ceil(contamination * n) highest-LOF rows.

    Returns (kept dataset, removed row indices). Ties in the score are
    broken by input index (earlier rows removed first).
    """
    if not 0.0 <= contamination < 1.0:
        raise InvalidInputError("contamination must be in [0, 1)")
    n = len(dataset)
    n_remove = math.ceil(contamination * n)
    if n_remove == 0:
        kept = WingDataset(dataset.data.copy(), dict(dataset.meta))
        kept.meta["lof"] = {"k": k, "contamination": contamination, "removed": []}
        return kept, np.array([], dtype=int)

    scores = lof_scores(lof_feature_matrix(dataset), k)
    order = np.argsort(-scores, kind="stable")
    removed = np.sort(order[:n_remove])
    mask = np.ones(n, dtype=bool)
    mask[removed] = False
    kept = WingDataset(dataset.data[mask], dict(dataset.meta))
    kept.meta["lof"] = {"k": k, "contamination": contamination,
                        "removed": [int(i) for i in removed]}
    return kept, removed


# --- normalization -------------------------------------------------------------

@dataclass(frozen=True)
class ScalingSpec:
    """Affine map sending [lb, ub] onto [lo, hi] exactly at the endpoints."""

    lb: np.ndarray
    ub: np.ndarray
    lo: float = -2.0
    hi: float = 2.0

    def __post_init__(self):
        lb = np.asarray(self.lb, dtype=float)
        ub = np.asarray(self.ub, dtype=float)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        if lb.shape != ub.shape or np.any(ub <= lb):
            raise InvalidInputError("scaling requires lb < ub componentwise")

    @classmethod
    def from_bounds(cls, bounds: Bounds, lo: float = -2.0, hi: float = 2.0) -> "ScalingSpec":
        return cls(lb=bounds.lb, ub=bounds.ub, lo=lo, hi=hi)

    def normalize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.lo + (self.hi - self.lo) * (x - self.lb) / (self.ub - self.lb)

    def denormalize(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.lb + (z - self.lo) / (self.hi - self.lo) * (self.ub - self.lb)

    def to_dict(self) -> dict:
        return {"lb": self.lb.tolist(), "ub": self.ub.tolist(), "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingSpec":
        return cls(lb=np.asarray(d["lb"]), ub=np.asarray(d["ub"]), lo=d["lo"], hi=d["hi"])


def variance_dropped_columns(matrix: np.ndarray, names: Sequence[str], tol: float = 1e-12):
    """Names of columns whose variance is below tol (near-constant targets)."""
    variances = np.asarray(matrix, dtype=float).var(axis=0)
    return [name for name, v in zip(names, variances) if v < tol]


# --- persistence ---------------------------------------------------------------

def _meta_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def _write_meta(dataset: WingDataset, path) -> None:
    meta = dict(dataset.meta)
    meta["columns"] = list(COLUMNS)
    meta["n_rows"] = int(len(dataset))
    with open(_meta_path(path), "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _read_meta(path) -> dict:
    mp = _meta_path(path)
    if not mp.exists():
        return {}
    with open(mp) as fh:
        meta = json.load(fh)
    meta.pop("columns", None)
    meta.pop("n_rows", None)
    return meta


def save_csv(dataset: WingDataset, path) -> None:
    np.savetxt(path, dataset.data, delimiter=",", comments="",
               header=",".join(COLUMNS), fmt="%.17g")
    _write_meta(dataset, path)


def load_csv(path) -> WingDataset:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path) as fh:
        header = fh.readline().strip()
    if header.split(",") != list(COLUMNS):
        raise FileFormatError(f"{path}: unexpected CSV header")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return WingDataset(data=data, meta=_read_meta(path))


def save_binary(dataset: WingDataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.array([dataset.data.shape[1], dataset.data.shape[0]],
                          dtype="<u4").tobytes())
        fh.write(dataset.data.astype("<f8").tobytes())
    _write_meta(dataset, path)


def load_binary(path) -> WingDataset:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:4] != _MAGIC:
        raise FileFormatError(f"{path}: not a CHD1 dataset file")
    n_cols, n_rows = np.frombuffer(raw[4:12], dtype="<u4")
    expected = 12 + 8 * int(n_cols) * int(n_rows)
    if len(raw) != expected:
        raise FileFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    if int(n_cols) != len(COLUMNS):
        raise FileFormatError(f"{path}: expected {len(COLUMNS)} columns, found {n_cols}")
    data = np.frombuffer(raw[12:], dtype="<f8").reshape(int(n_rows), int(n_cols)).copy()
    return WingDataset(data=data, meta=_read_meta(path))


def load_any(path) -> WingDataset:
    """Dispatch on the CHD1 magic, else parse as CSV."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    return load_binary(path) if head == _MAGIC else load_csv(path)
