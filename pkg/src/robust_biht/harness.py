"""Monte-Carlo recovery experiments and their CSV outputs.

A trial with id ``t`` draws everything from ``Rng(derive_seed(master_seed, t))``
in this order: the measurement matrix (row-major), the signal, the initial
estimate, then any randomness the adversary needs. Records therefore do not
depend on how trials are scheduled.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .adversary import CorruptionBudget, STRATEGIES, corrupt
from .biht import biht_run
from .ensemble import clean_responses, sample_gaussian_matrix, sample_sparse_unit
from .errors import InvalidArgument
from .linops import hamming_distance
from .rng import Rng, derive_seed
from .theory import closed_form_bound, constants, epsilon0, m0

__all__ = [
    "SCHEMA_VERSION",
    "DEFAULT_M0_FACTOR",
    "ExperimentConfig",
    "ExperimentRecord",
    "run_experiment",
    "run_trial",
    "sweep",
    "emit_plot_data",
    "dataset_csv",
    "summary_csv",
    "read_summary_csv",
    "DATASET_HEADER",
    "SUMMARY_HEADER",
]

SCHEMA_VERSION = 1
# scale on m0(epsilon/c); chosen so noiseless recovery succeeds at desk scale
DEFAULT_M0_FACTOR = 3e-4
DATASET_HEADER = ("trial", "seed", "t", "d_s", "flips", "degenerate")
SUMMARY_HEADER = ("t", "median", "q10", "q90", "theory")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    k: int
    m: int | None = None
    tau: float = 0.0
    adversary: str = "min_margin"
    trials: int = 10
    T: int = 15
    master_seed: int = 0
    epsilon_target: float = 0.1
    m_mode: str = "explicit"
    m_factor: float = DEFAULT_M0_FACTOR
    rho: float = 0.1
    recorrupt: bool = False

    def __post_init__(self):
        object.__setattr__(self, "adversary", self.adversary.replace("-", "_"))
        if self.k < 1:
            raise InvalidArgument("k: must be positive")
        if self.n < 2 * self.k:
            raise InvalidArgument(f"n: need n >= 2k, got n={self.n}, k={self.k}")
        if self.trials < 1:
            raise InvalidArgument("trials: must be at least 1")
        if self.T < 0:
            raise InvalidArgument("T: must be nonnegative")
        if not (0.0 <= self.tau <= 1.0):
            raise InvalidArgument("tau: must lie in [0, 1]")
        if self.adversary not in STRATEGIES:
            raise InvalidArgument(f"adversary: unknown strategy {self.adversary!r}")
        if self.m_mode not in ("explicit", "scaled-m0"):
            raise InvalidArgument(f"m_mode: unknown mode {self.m_mode!r}")
        if self.m_mode == "explicit" and (self.m is None or self.m < 1):
            raise InvalidArgument("m: required and positive when m_mode is explicit")
        if not (0.0 < self.epsilon_target <= 1.0):
            raise InvalidArgument("epsilon_target: must lie in (0, 1]")
        if self.m_mode == "scaled-m0" and self.m_factor <= 0:
            raise InvalidArgument("m_factor: must be positive")

    @property
    def resolved_m(self) -> int:
        if self.m_mode == "explicit":
            return int(self.m)
        delta = self.epsilon_target / constants().c
        return math.ceil(self.m_factor * m0(delta, self.n, self.k, self.rho))

    def to_json(self) -> str:
        return json.dumps({"schema": SCHEMA_VERSION, **asdict(self)}, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        schema = data.pop("schema", None)
        if schema != SCHEMA_VERSION:
            raise InvalidArgument(f"schema: expected {SCHEMA_VERSION}, got {schema!r}")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidArgument(f"{unknown[0]}: unknown config field")
        return cls(**data)


@dataclass
class ExperimentRecord:
    trial: int
    seed: int
    errors: list
    flips: int
    degenerate: bool
    wall_time: float = field(default=0.0, compare=False)

    @property
    def final(self) -> float:
        return self.errors[-1]


def run_trial(config: ExperimentConfig, trial: int) -> ExperimentRecord:
    start = time.perf_counter()
    seed = derive_seed(config.master_seed, trial)
    rng = Rng(seed)
    m = config.resolved_m
    A = sample_gaussian_matrix(m, config.n, rng).rows
    x = sample_sparse_unit(config.n, config.k, rng)
    init = sample_sparse_unit(config.n, config.k, rng)
    xd = x.dense()
    clean = clean_responses(A, xd)
    responses_for = None
    if config.tau > 0:
        budget = CorruptionBudget(config.tau, m)
        ctx = {"A": A, "x": xd, "x_prev": init.dense(), "k": config.k}
        y, _ = corrupt(clean, budget, config.adversary, ctx, rng)
        if config.recorrupt:
            def responses_for(t, x_prev):
                return corrupt(clean, budget, config.adversary, {**ctx, "x_prev": x_prev}, rng)[0]
    else:
        y = clean
    trace = biht_run(A, y, config.k, config.T, init, truth=xd, responses_for=responses_for)
    return ExperimentRecord(
        trial=trial,
        seed=seed,
        errors=[float(e) for e in trace.errors],
        flips=hamming_distance(y, clean),
        degenerate=trace.degenerate_at is not None,
        wall_time=time.perf_counter() - start,
    )


def _run_trial_args(args):
    return run_trial(*args)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list:
    """One record per trial, ordered by trial id."""
    jobs = [(config, t) for t in range(config.trials)]
    if workers <= 1:
        return [run_trial(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_trial_args, jobs))


GRID_KEYS = ("tau", "m", "k")


@dataclass
class SweepPoint:
    params: dict
    config: ExperimentConfig
    records: list


def sweep(base: ExperimentConfig, grid: dict, workers: int = 1) -> list:
    """Cross product over ``grid`` (keys among tau, m, k).

    Every point reuses ``base.master_seed``, so trial ``t`` sees the same
    seed at each point (common random numbers).
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise InvalidArgument("grid must be non-empty")
    bad = sorted(set(grid) - set(GRID_KEYS))
    if bad:
        raise InvalidArgument(f"{bad[0]}: not a sweepable field")
    keys = [key for key in GRID_KEYS if key in grid]
    out = []
    for values in itertools.product(*(grid[key] for key in keys)):
        params = dict(zip(keys, values))
        overrides = dict(params)
        if "m" in params:
            overrides["m_mode"] = "explicit"
        cfg = replace(base, **overrides)
        out.append(SweepPoint(params, cfg, run_experiment(cfg, workers)))
    return out


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _record_rows(rec):
    for t, e in enumerate(rec.errors):
        yield [rec.trial, rec.seed, t, repr(float(e)), rec.flips, int(rec.degenerate)]


def dataset_csv(records) -> str:
    """Long-format per-iteration dataset, header ``trial,seed,t,d_s,flips,degenerate``.

    A sweep (list of points) gets its grid columns prepended.
    """
    if records and isinstance(records[0], SweepPoint):
        keys = list(records[0].params)
        rows = [
            [p.params[key] for key in keys] + row
            for p in records
            for rec in p.records
            for row in _record_rows(rec)
        ]
        return _write_csv(tuple(keys) + DATASET_HEADER, rows)
    return _write_csv(DATASET_HEADER, [row for rec in records for row in _record_rows(rec)])


def emit_plot_data(records, epsilon: float, tau: float = 0.0) -> list:
    """Per-iteration ``{t, median, q10, q90, theory}`` rows.

    ``theory`` is the closed-form envelope evaluated at ``epsilon0(epsilon, tau)``.
    """
    if not records:
        raise InvalidArgument("empty dataset")
    E = np.array([r.errors for r in records], dtype=float)
    gamma = epsilon0(epsilon, tau)
    med = np.median(E, axis=0)
    q10, q90 = np.quantile(E, [0.1, 0.9], axis=0)
    return [
        {
            "t": t,
            "median": float(med[t]),
            "q10": float(q10[t]),
            "q90": float(q90[t]),
            "theory": closed_form_bound(gamma, t),
        }
        for t in range(E.shape[1])
    ]


def summary_csv(rows) -> str:
    return _write_csv(
        SUMMARY_HEADER,
        [[r["t"]] + [repr(float(r[key])) for key in SUMMARY_HEADER[1:]] for r in rows],
    )


def read_summary_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SUMMARY_HEADER:
        raise InvalidArgument(f"summary header must be {','.join(SUMMARY_HEADER)}")
    return [
        {"t": int(row["t"]), **{key: float(row[key]) for key in SUMMARY_HEADER[1:]}}
        for row in reader
    ]
