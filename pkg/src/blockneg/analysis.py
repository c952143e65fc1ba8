"""Experiment drivers, the power-law-times-exponential fit, and data export."""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .blocks import mu_series
from .dmrg import DmrgConfig, GroundStateResult, run_dmrg
from .entanglement import negativity
from .model import ModelParams

log = logging.getLogger(__name__)

DEFAULT_WINDOW = (0.1, 3.0)
MIN_FIT_POINTS = 6

CSV_COLUMNS = (
    "n_sites",
    "gamma",
    "lambda",
    "kept_states",
    "block_len",
    "separation",
    "mu",
    "negativity",
    "log_negativity",
    "truncated_weight",
)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ScalingRecord:
    n_sites: int
    gamma: float
    lam: float
    kept_states: int
    block_len: int
    separation: int
    mu: float
    negativity: float
    log_negativity: float
    truncated_weight: float

    @property
    def mu_exact(self) -> Fraction:
        return Fraction(self.separation, self.block_len)

    def as_row(self) -> dict:
        row = asdict(self)
        row["lambda"] = row.pop("lam")
        return {k: row[k] for k in CSV_COLUMNS}


@dataclass(frozen=True)
class FitResult:
    """Fit of value ~ amplitude * mu**(-h) * exp(-alpha * mu).

    ``covariance`` is for (log amplitude, h, alpha), from the log-space
    linear least-squares problem.
    """

    h: float
    alpha: float
    amplitude: float
    fit_window: tuple
    residual_norm: float
    covariance: np.ndarray
    n_points: int
    log_negativity: bool = False

    def predict(self, mu):
        mu = np.asarray(mu, dtype=float)
        return self.amplitude * mu ** (-self.h) * np.exp(-self.alpha * mu)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["fit_window"] = list(self.fit_window)
        out["covariance"] = np.asarray(self.covariance).tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FitResult":
        data = dict(data)
        data["fit_window"] = tuple(data["fit_window"])
        data["covariance"] = np.array(data["covariance"])
        return cls(**data)


@dataclass
class SweepOutcome:
    records: list
    failures: list = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.failures)


def in_window(mu: float, window) -> bool:
    lo, hi = window
    return lo <= mu <= hi


def realize_mu(n_sites: int, mu: Fraction) -> Optional[tuple[int, int]]:
    """(block_len, separation) with 2*block_len + separation = N and ratio mu, if any."""
    mu = Fraction(mu)
    # block_len = N / (2 + mu) must be a positive integer
    delta = Fraction(n_sites) / (2 + mu)
    if delta.denominator != 1 or delta < 1:
        return None
    delta = int(delta)
    x = n_sites - 2 * delta
    if x < 2 or x % 2:
        return None
    return delta, x


def series_records(
    result: GroundStateResult,
    keep: Callable[[int, int], bool] = lambda delta, x: True,
    stop: Callable[[int, int], bool] = lambda delta, x: False,
) -> list:
    """Negativity records along the unnesting sequence of one DMRG run.

    ``keep(delta, x)`` selects which points are diagonalized; iteration ends
    as soon as ``stop(delta, x)`` is true.
    """
    p = result.params
    eps = result.max_truncated_weight(sweep=_last_sweep(result))
    out = []
    for point in mu_series(result.state, result.chains):
        if stop(point.block_len, point.separation):
            break
        if not keep(point.block_len, point.separation):
            continue
        res = negativity(point.rho)
        out.append(
            ScalingRecord(
                n_sites=p.n_sites,
                gamma=p.gamma,
                lam=p.lam,
                kept_states=result.config.max_kept_states,
                block_len=point.block_len,
                separation=point.separation,
                mu=point.separation / point.block_len,
                negativity=res.negativity,
                log_negativity=res.log_negativity,
                truncated_weight=eps,
            )
        )
    return out


def _last_sweep(result: GroundStateResult) -> int:
    return max((t[0] for t in result.truncations), default=-1)


def _window_run(args):
    params, config, window = args
    result = run_dmrg(params, config)
    if window is None:
        return series_records(result)
    lo, hi = window
    return series_records(
        result,
        keep=lambda d, x: lo <= x / d <= hi,
        stop=lambda d, x: x / d > hi,
    )


def _map(func, tasks, jobs: int):
    """Yield (task, result or exception) pairs, serially or on a process pool."""
    if jobs <= 1:
        for task in tasks:
            try:
                yield task, func(task)
            except Exception as exc:  # recorded, the sweep continues
                yield task, exc
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [(task, pool.submit(func, task)) for task in tasks]
        for task, fut in futures:
            try:
                yield task, fut.result()
            except Exception as exc:
                yield task, exc


def sort_records(records: Iterable[ScalingRecord]) -> list:
    return sorted(records, key=lambda r: (r.gamma, r.lam, r.n_sites, r.mu_exact, r.kept_states))


def mu_sweep(
    params_list: Sequence[ModelParams],
    config: DmrgConfig,
    window: Optional[tuple] = DEFAULT_WINDOW,
    jobs: int = 1,
) -> SweepOutcome:
    """DMRG + unnesting + negativity for every chain; records inside ``window``."""
    for p in params_list:
        if not p.symmetric:
            raise ValueError(f"chain length must be even, got {p.n_sites}")
    tasks = [(p, config, window) for p in params_list]
    outcome = SweepOutcome([])
    for (p, _, _), res in _map(_window_run, tasks, jobs):
        if isinstance(res, Exception):
            log.error("N=%d failed: %s", p.n_sites, res)
            outcome.failures.append((p.n_sites, repr(res)))
        else:
            outcome.records.extend(res)
    outcome.records = sort_records(outcome.records)
    return outcome


@dataclass(frozen=True)
class ScanRow:
    n_sites: int
    lam: float
    block_len: int
    separation: int
    negativity: float
    truncated_weight: float


def _scan_run(args):
    params, config, delta = args
    result = run_dmrg(params, config)
    recs = series_records(result, keep=lambda d, x: d == delta, stop=lambda d, x: d < delta)
    return recs[0]


def lambda_scan(
    gamma: float,
    mu_target,
    sizes: Sequence[int],
    lambdas: Sequence[float],
    config: DmrgConfig,
    jobs: int = 1,
) -> SweepOutcome:
    """Negativity at a fixed ratio mu for every (N, lambda) pair."""
    mu_target = Fraction(mu_target)
    tasks = []
    for n in sizes:
        realized = realize_mu(n, mu_target)
        if realized is None:
            log.warning("mu=%s cannot be realized at N=%d, skipped", mu_target, n)
            continue
        for lam in lambdas:
            tasks.append((ModelParams(n, gamma, lam), config, realized[0]))
    outcome = SweepOutcome([])
    for (p, _, delta), res in _map(_scan_run, tasks, jobs):
        if isinstance(res, Exception):
            log.error("N=%d lambda=%g failed: %s", p.n_sites, p.lam, res)
            outcome.failures.append((p.n_sites, p.lam, repr(res)))
            continue
        outcome.records.append(
            ScanRow(p.n_sites, p.lam, res.block_len, res.separation, res.negativity, res.truncated_weight)
        )
    outcome.records.sort(key=lambda r: (r.n_sites, r.lam))
    return outcome


def fit_ansatz(
    records: Sequence[ScalingRecord],
    window=DEFAULT_WINDOW,
    use_log_negativity: bool = False,
) -> FitResult:
    """Least-squares fit of log(value) = log A - h log(mu) - alpha mu."""
    pts = [r for r in records if in_window(r.mu, window)]
    if len(pts) < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} records in window {window}, got {len(pts)}")
    mu = np.array([r.mu for r in pts])
    y = np.array([r.log_negativity if use_log_negativity else r.negativity for r in pts])
    if np.any(y <= 0):
        raise FitError("non-positive values inside the fit window")
    design = np.column_stack([np.ones_like(mu), -np.log(mu), -mu])
    if np.linalg.matrix_rank(design) < 3:
        raise FitError("degenerate design: not enough distinct mu values")
    target = np.log(y)
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    dof = len(pts) - 3
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return FitResult(
        h=float(coef[1]),
        alpha=float(coef[2]),
        amplitude=float(np.exp(coef[0])),
        fit_window=tuple(float(w) for w in window),
        residual_norm=float(np.linalg.norm(resid)),
        covariance=cov,
        n_points=len(pts),
        log_negativity=use_log_negativity,
    )


def _log_curve(records, mu_min, mu_cut):
    """Sorted (mu, mean log negativity) for positive records with mu_min <= mu <= mu_cut."""
    groups: dict = {}
    for r in records:
        if r.negativity > 0 and mu_min <= r.mu <= mu_cut:
            groups.setdefault(r.mu_exact, []).append(math.log(r.negativity))
    keys = sorted(groups)
    return np.array([float(k) for k in keys]), np.array([np.mean(groups[k]) for k in keys])


def universality_compare(records_a, records_b, mu_cut: float = 2.5, mu_min: float = DEFAULT_WINDOW[0]) -> float:
    """Largest relative deviation between two negativity curves over their common mu range.

    Each curve is interpolated linearly in log(negativity) at the other's
    points; the result is max |N_a / N_b - 1| taken in both directions.
    """
    mu_a, la = _log_curve(records_a, mu_min, mu_cut)
    mu_b, lb = _log_curve(records_b, mu_min, mu_cut)
    if len(mu_a) == 0 or len(mu_b) == 0:
        raise ValueError("no records below the cut")
    lo, hi = max(mu_a[0], mu_b[0]), min(mu_a[-1], mu_b[-1])
    if lo > hi:
        raise ValueError("record sets have no overlapping mu range")
    worst = 0.0
    for mu_p, l_p, mu_q, l_q in ((mu_a, la, mu_b, lb), (mu_b, lb, mu_a, la)):
        sel = (mu_p >= lo) & (mu_p <= hi)
        other = np.interp(mu_p[sel], mu_q, l_q)
        if sel.any():
            worst = max(worst, float(np.max(np.abs(np.exp(l_p[sel] - other) - 1.0))))
    return worst


def provenance(extra: Optional[dict] = None) -> dict:
    import scipy

    from . import __version__

    out = {
        "package": "blockneg",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    if extra:
        out["config"] = extra
    return out


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def export(items, path, format: str = "csv", meta: Optional[dict] = None) -> Path:
    """Write ScalingRecords (csv or json) or FitResults (json)."""
    path = Path(path)
    items = list(items)
    fits = [i for i in items if isinstance(i, FitResult)]
    if fits and len(fits) != len(items):
        raise ValueError("cannot mix records and fits in one export")
    if format == "csv":
        if fits:
            raise ValueError("fits are exported as json")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for rec in sort_records(items):
                row = rec.as_row()
                writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    elif format == "json":
        payload = {"provenance": provenance(meta)}
        if fits:
            payload["fits"] = [f.as_dict() for f in fits]
        else:
            payload["records"] = [r.as_row() for r in sort_records(items)]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {format!r}")
    return path


_INT_FIELDS = {"n_sites", "kept_states", "block_len", "separation"}


def _record_from_row(row: dict) -> ScalingRecord:
    kw = {}
    for f in fields(ScalingRecord):
        key = "lambda" if f.name == "lam" else f.name
        kw[f.name] = int(row[key]) if f.name in _INT_FIELDS else float(row[key])
    return ScalingRecord(**kw)


def load_records(path) -> list:
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        return [_record_from_row(r) for r in json.loads(text)["records"]]
    with open(path, newline="") as fh:
        return [_record_from_row(r) for r in csv.DictReader(fh)]


def load_fits(path) -> list:
    return [FitResult.from_dict(f) for f in json.loads(Path(path).read_text())["fits"]]
