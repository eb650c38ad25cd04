"""Synthetic bivariate series (local level, linear trend, level + seasonal)
and a replication harness comparing the unknown-V filter (DLM1) with the
known-V Kalman filter (DLM3).
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PSPPError
from .filters import (ForecastMetrics, forecast_metrics, kalman_step_known_v,
                      pspp_dlm_step, pspp_initial_state)
from .linalg import check_pd, vech, vech_dim
from .statespace import FilterState, StateSpaceSpec

V_TRUE = np.array([[1.0, 2.0], [2.0, 5.0]])
_ANGLE = np.pi / 6
_ROT = np.array([[np.cos(_ANGLE), np.sin(_ANGLE)], [-np.sin(_ANGLE), np.cos(_ANGLE)]])

FAMILIES = {
    "LL": (np.eye(2), np.eye(2)),
    "LT": (np.eye(2), np.array([[1.0, 1.0], [0.0, 1.0]])),
    "LS": (np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
           np.block([[np.eye(1), np.zeros((1, 2))], [np.zeros((2, 1)), _ROT]])),
}
MODELS = ("DLM1", "DLM3")
V_ENTRIES = ("V11", "V12", "V22")


def family_matrices(family):
    try:
        b, c = FAMILIES[family]
    except KeyError:
        raise DomainError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}") from None
    return b.copy(), c.copy()


@dataclass(frozen=True)
class SimSpec:
    family: str = "LL"
    v_true: np.ndarray = field(default_factory=lambda: V_TRUE.copy())
    w_true: np.ndarray | None = None
    n_series: int = 200
    length: int = 500
    seed: int = 0

    def __post_init__(self):
        b, c = family_matrices(self.family)
        v = np.asarray(self.v_true, dtype=float)
        check_pd(v, "v_true")
        w = np.eye(c.shape[0]) if self.w_true is None else np.asarray(self.w_true, dtype=float)
        if w.shape != c.shape:
            raise DomainError(f"w_true must be {c.shape}")
        if np.linalg.eigvalsh(w)[0] < -1e-12:
            raise DomainError("w_true must be positive semi-definite")
        if self.length < 1 or self.n_series < 1:
            raise DomainError("length and n_series must be at least 1")
        object.__setattr__(self, "v_true", v)
        object.__setattr__(self, "w_true", w)

    @property
    def b(self):
        return FAMILIES[self.family][0]

    @property
    def c(self):
        return FAMILIES[self.family][1]


def replication_rng(seed, index):
    """Counter-based stream for one replication; independent of run order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), int(index)))))


def simulate_states_and_series(spec, index):
    rng = replication_rng(spec.seed, index)
    b, c = spec.b, spec.c
    m = c.shape[0]
    lw = np.linalg.cholesky(spec.v_true)
    # W may be singular (e.g. the noise-free override), so use eigh for its root
    ww, uw = np.linalg.eigh(spec.w_true)
    rw = uw * np.sqrt(np.clip(ww, 0, None))
    x = rng.standard_normal(m)
    xs = np.empty((spec.length, m))
    ys = np.empty((spec.length, b.shape[0]))
    for t in range(spec.length):
        x = c @ x + rw @ rng.standard_normal(m)
        xs[t] = x
        ys[t] = b @ x + lw @ rng.standard_normal(b.shape[0])
    return xs, ys


def simulate_series(spec, index):
    """Observations y_1..y_T of replication ``index``; deterministic in (seed, index)."""
    return simulate_states_and_series(spec, index)[1]


@dataclass(frozen=True)
class DLM1Priors:
    """Priors for the unknown-V filter in the experiments.

    ``k0_scale`` multiplies the identity for K_0.  It defaults to 0, which
    switches off the Kronecker term in P_t: with K_0 = I that term feeds
    back through P_t and every replication diverges within a few steps.
    """

    eta0: float = 1.0
    k0_scale: float = 0.0
    v0: np.ndarray | None = None
    p0_scale: float = 1.0
    m0: np.ndarray | None = None
    p0: np.ndarray | None = None
    k0: np.ndarray | None = None

    def initial_state(self, m, p):
        """Explicit m0 / P0 / V0 / K0 win over the scaled identities."""
        def pick(val, default):
            return default if val is None else np.asarray(val, dtype=float)
        return pspp_initial_state(pick(self.m0, np.zeros(m)),
                                  pick(self.p0, self.p0_scale * np.eye(m)),
                                  pick(self.v0, np.eye(p)), self.eta0,
                                  pick(self.k0, self.k0_scale * np.eye(vech_dim(p))))


@dataclass
class ReplicationResult:
    index: int
    metrics: dict
    snapshots: dict
    errors: dict


def run_replication(spec, index, models=MODELS, snapshot_times=(100, 200, 500),
                    priors=DLM1Priors()):
    ys = simulate_series(spec, index)
    b, c = spec.b, spec.c
    m, p = c.shape[0], b.shape[0]
    metrics, snaps, errors = {}, {}, {}
    wanted = set(snapshot_times)
    for model in models:
        try:
            if model == "DLM1":
                ss = StateSpaceSpec(b=b, c=c, w=spec.w_true)
                state = priors.initial_state(m, p)
                step = pspp_dlm_step
            elif model == "DLM3":
                ss = StateSpaceSpec(b=b, c=c, w=spec.w_true, v=spec.v_true)
                state = FilterState(np.zeros(m), np.eye(m))
                step = kalman_step_known_v
            else:
                raise DomainError(f"unknown model {model!r}")
            reports = []
            for y in ys:
                state, rep = step(state, ss, y)
                reports.append(rep)
                if model == "DLM1" and state.t in wanted:
                    snaps[state.t] = vech(rep.v_hat)
            metrics[model] = forecast_metrics(reports)
        except PSPPError as exc:
            errors[model] = f"{type(exc).__name__}: {exc}"
            if model == "DLM1":
                snaps = {}
    return ReplicationResult(index, metrics, snaps, errors)


@dataclass
class ExperimentResult:
    spec: SimSpec
    models: tuple
    snapshot_times: tuple
    metrics: dict
    snapshot_mean: dict
    snapshot_sd: dict
    n_ok: dict
    failures: dict
    priors: DLM1Priors

    @property
    def replications(self):
        return self.spec.n_series


def _job(args):
    spec, idx, models, snapshot_times, priors = args
    return run_replication(spec, idx, models, snapshot_times, priors)


def run_experiment(spec, models=MODELS, snapshot_times=(100, 200, 500),
                   priors=DLM1Priors(), workers=1):
    """Run every replication and average in index order.

    Replications whose filter raises are excluded from that model's averages
    and listed in ``failures``.
    """
    models = tuple(models)
    if not models:
        raise DomainError("no models requested")
    snapshot_times = tuple(t for t in snapshot_times if t <= spec.length)
    jobs = [(spec, i, models, snapshot_times, priors) for i in range(spec.n_series)]
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=8))
    else:
        results = [_job(j) for j in jobs]
    results.sort(key=lambda r: r.index)

    metrics, n_ok, failures = {}, {}, {}
    for model in models:
        ok = [r.metrics[model] for r in results if model in r.metrics]
        failures[model] = [(r.index, r.errors[model]) for r in results if model in r.errors]
        n_ok[model] = len(ok)
        if ok:
            metrics[model] = ForecastMetrics.mean_of(ok)
    snap_mean, snap_sd = {}, {}
    if "DLM1" in models:
        for t in snapshot_times:
            vals = np.array([r.snapshots[t] for r in results if t in r.snapshots])
            if len(vals):
                snap_mean[t] = vals.mean(axis=0)
                snap_sd[t] = vals.std(axis=0, ddof=1) if len(vals) > 1 else np.zeros(vals.shape[1])
    return ExperimentResult(spec, models, snapshot_times, metrics, snap_mean, snap_sd,
                            n_ok, failures, priors)


@dataclass(frozen=True)
class TableReport:
    metric_rows: list
    snapshot_rows: list
    missing: list


def aggregate_tables(results, families=tuple(FAMILIES), models=MODELS):
    """Lay results out as forecast-accuracy rows and V-estimate rows.

    Values are copied from the ExperimentResult fields without recomputation.
    """
    metric_rows, snapshot_rows, missing = [], [], []
    for fam in families:
        res = results.get(fam)
        if res is None:
            missing.append(fam)
            continue
        for model in models:
            met = res.metrics.get(model)
            if met is None:
                continue
            row = {"family": fam, "model": model}
            for name in ("msse", "mse", "mae", "me"):
                vals = getattr(met, name)
                for i, v in enumerate(vals, 1):
                    row[f"{name}_y{i}"] = float(v)
            metric_rows.append(row)
        if res.snapshot_mean:
            for k, entry in enumerate(V_ENTRIES):
                row = {"family": fam, "entry": entry,
                       "true": float(vech(res.spec.v_true)[k])}
                for t in res.snapshot_times:
                    if t in res.snapshot_mean:
                        row[f"t{t}"] = float(res.snapshot_mean[t][k])
                snapshot_rows.append(row)
    return TableReport(metric_rows, snapshot_rows, missing)
