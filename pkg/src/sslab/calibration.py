"""Monte-Carlo pixel-scale statistics and local-resolution calibration.

The pixel-scale ratio PS_g/PS_l of a (global, local) view pair factors as
(gc/lc)^2 * (A_l/A_g), so one Monte-Carlo pass over crop areas gives the
mean ratio for every candidate local resolution by closed-form rescaling.
Calibration picks the integer lc whose mean ratio is closest to a target
(1.0: globals and locals see pixels of the same size).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .util import stable_seed, worker_count
from .viewgeom import ViewSetSpec, sample_crops

_CHUNK = 1 << 16

ESTIMATORS = ("mean_ratio", "ratio_of_means", "geometric")

CSV_COLUMNS = (
    "s_g", "s_l", "s_min_local", "gc", "lc", "n_g", "n_l",
    "aspect_lo", "aspect_hi", "max_retries", "mean_ratio", "std_err",
)


class CalibrationError(ValueError):
    """Calibration target unreachable or invalid estimator request."""


@dataclass(frozen=True)
class CalibrationReport:
    mean_ratio: float
    std_err: float
    n_samples: int
    spec: ViewSetSpec

    def csv_row(self) -> str:
        s = self.spec
        vals = (
            s.s_g, s.s_l, s.s_min_local, s.gc, s.lc, s.n_g, s.n_l,
            s.aspect_lo, s.aspect_hi, s.max_retries, self.mean_ratio, self.std_err,
        )
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in vals)

    def to_dict(self) -> dict:
        s = self.spec
        return {
            "mean_ratio": self.mean_ratio,
            "std_err": self.std_err,
            "n_samples": self.n_samples,
            "spec": {
                "s_g": s.s_g, "s_l": s.s_l, "s_min_local": s.s_min_local,
                "gc": s.gc, "lc": s.lc, "n_g": s.n_g, "n_l": s.n_l,
                "aspect_lo": s.aspect_lo, "aspect_hi": s.aspect_hi,
                "max_retries": s.max_retries,
            },
        }


@dataclass(frozen=True)
class SweepRow:
    s_g: float
    s_l: float
    lc: int
    mean_ratio: float


def _chunk_area_stats(spec: ViewSetSpec, src_w: int, src_h: int, n: int, seed: int):
    """Per-chunk sums of A_l/A_g moments plus 1/A_g and 1/A_l."""
    rng = np.random.default_rng(seed)
    g = sample_crops(
        rng, src_w, src_h, spec.s_g, 1.0, n, spec.aspect_lo, spec.aspect_hi, spec.max_retries
    )
    l = sample_crops(
        rng, src_w, src_h, spec.s_min_local, spec.s_l, n,
        spec.aspect_lo, spec.aspect_hi, spec.max_retries,
    )
    a_g = (g[:, 2] * g[:, 3]).astype(np.float64)
    a_l = (l[:, 2] * l[:, 3]).astype(np.float64)
    r = a_l / a_g
    return r.sum(), (r * r).sum(), np.log(r).sum(), (1.0 / a_g).sum(), (1.0 / a_l).sum()


@dataclass(frozen=True)
class _AreaStats:
    """lc-independent moments; mean_ratio(lc) = base(estimator) * (gc/lc)^2."""

    mean: float
    std_err: float
    log_mean: float
    inv_g_mean: float
    inv_l_mean: float

    def base(self, estimator: str) -> float:
        if estimator == "mean_ratio":
            return self.mean
        if estimator == "geometric":
            return math.exp(self.log_mean)
        return self.inv_g_mean / self.inv_l_mean


def _area_ratio_stats(spec, src_w, src_h, n_samples, seed, workers=None) -> _AreaStats:
    """Chunked, deterministically reduced moments of the pair-area statistics.

    Chunk seeds depend only on (seed, chunk index) and partial sums are
    combined in chunk order, so the result is independent of worker count.
    """
    sizes = [_CHUNK] * (n_samples // _CHUNK)
    if n_samples % _CHUNK:
        sizes.append(n_samples % _CHUNK)
    seeds = [stable_seed(seed, "calib", i) for i in range(len(sizes))]
    if workers is None:
        workers = worker_count()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda args: _chunk_area_stats(spec, src_w, src_h, *args),
                         zip(sizes, seeds))
            )
    else:
        parts = [_chunk_area_stats(spec, src_w, src_h, m, s) for m, s in zip(sizes, seeds)]
    tot = [0.0] * 5
    for p in parts:
        for i in range(5):
            tot[i] += p[i]
    n = float(n_samples)
    mean = tot[0] / n
    if n_samples > 1:
        var = max(0.0, (tot[1] - n * mean * mean) / (n - 1.0))
    else:
        var = 0.0
    return _AreaStats(mean, math.sqrt(var / n), tot[2] / n, tot[3] / n, tot[4] / n)


def estimate_ps_ratio(
    spec: ViewSetSpec,
    src_w: int = 224,
    src_h: int = 224,
    n_samples: int = 100_000,
    seed: int = 0,
    estimator: str = "mean_ratio",
    workers: int | None = None,
) -> CalibrationReport:
    """Estimate the pixel-scale ratio statistic over random (global, local) pairs.

    Draws n_samples independent pairs and reports the chosen statistic of
    PS_g/PS_l with its standard error. `mean_ratio` is the plain mean of
    per-pair ratios; `ratio_of_means` and `geometric` are alternative
    estimators of the same discrepancy, exposed for comparison.
    """
    if n_samples < 1:
        raise CalibrationError(f"n_samples must be >= 1, got {n_samples}")
    if estimator not in ESTIMATORS:
        raise CalibrationError(f"unknown estimator {estimator!r}, expected one of {ESTIMATORS}")
    stats = _area_ratio_stats(spec, src_w, src_h, n_samples, seed, workers)
    scale = (spec.gc / spec.lc) ** 2
    value = float(stats.base(estimator) * scale)
    err = float(stats.std_err * scale) if estimator == "mean_ratio" else float("nan")
    return CalibrationReport(mean_ratio=value, std_err=err, n_samples=n_samples, spec=spec)


def closed_form_mean_ratio(spec: ViewSetSpec) -> float:
    """Analytic mean(PS_g/PS_l) for idealized sampling.

    Assumes area fractions exactly uniform over their ranges with no
    rejection or rounding: mean = (gc/lc)^2 * E[s_l] * E[1/s_g]. Real
    crops match this only when every draw fits (e.g. square aspect).
    """
    e_sl = 0.5 * (spec.s_min_local + spec.s_l)
    e_inv_sg = 1.0 if spec.s_g == 1.0 else math.log(1.0 / spec.s_g) / (1.0 - spec.s_g)
    return (spec.gc / spec.lc) ** 2 * e_sl * e_inv_sg


def solve_local_resolution(
    spec: ViewSetSpec,
    src_w: int = 224,
    src_h: int = 224,
    target_ratio: float = 1.0,
    tol: float = 0.05,
    n_samples: int = 1_000_000,
    seed: int = 0,
    estimator: str = "mean_ratio",
    workers: int | None = None,
) -> int:
    """Find the integer local resolution whose mean PS ratio is closest to target.

    One Monte-Carlo pass estimates E[A_l/A_g]; mean_ratio(lc) then follows
    as (gc/lc)^2 * E[A_l/A_g], monotone decreasing in lc, so integer
    bisection over [1, gc] locates the minimizer without re-sampling.
    Fails if no lc in range lands within tol of the target. The lc stored
    in `spec` is ignored.
    """
    if target_ratio <= 0:
        raise CalibrationError(f"target_ratio must be positive, got {target_ratio}")
    if estimator not in ESTIMATORS:
        raise CalibrationError(f"unknown estimator {estimator!r}, expected one of {ESTIMATORS}")
    base = _area_ratio_stats(spec, src_w, src_h, n_samples, seed, workers).base(estimator)

    def ratio_at(lc: int) -> float:
        return (spec.gc / lc) ** 2 * base

    lo, hi = 1, spec.gc
    if ratio_at(hi) >= target_ratio:
        best = hi
    elif ratio_at(lo) <= target_ratio:
        best = lo
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ratio_at(mid) >= target_ratio:
                lo = mid
            else:
                hi = mid
        best = min((lo, hi), key=lambda lc: abs(ratio_at(lc) - target_ratio))
    if abs(ratio_at(best) - target_ratio) > tol:
        raise CalibrationError(
            f"no lc in [1, {spec.gc}] reaches target {target_ratio} within tol {tol}: "
            f"closest is lc={best} with mean_ratio={ratio_at(best):.4f}"
        )
    return best


def sweep_scales(
    grid: list[tuple[float, float, int]],
    gc: int = 224,
    src_w: int = 224,
    src_h: int = 224,
    n_samples: int = 100_000,
    seed: int = 0,
    s_min_local: float = 0.05,
    workers: int | None = None,
) -> list[SweepRow]:
    """Mean PS ratio at each (s_g, s_l, lc) grid point, one row per point.

    Each point gets its own stable sub-seed so the sweep is deterministic
    under a fixed seed and insensitive to grid order changes elsewhere.
    """
    if not grid:
        raise CalibrationError("sweep grid must be non-empty")
    rows = []
    for i, (s_g, s_l, lc) in enumerate(grid):
        spec = ViewSetSpec(s_g=s_g, s_l=s_l, gc=gc, lc=lc, s_min_local=s_min_local)
        rep = estimate_ps_ratio(
            spec, src_w, src_h, n_samples, seed=stable_seed(seed, "sweep", i), workers=workers
        )
        rows.append(SweepRow(s_g=s_g, s_l=s_l, lc=lc, mean_ratio=rep.mean_ratio))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    lines = ["s_g,s_l,lc,mean_ratio"]
    for r in rows:
        lines.append(f"{r.s_g!r},{r.s_l!r},{r.lc},{r.mean_ratio!r}")
    return "\n".join(lines) + "\n"


def report_csv(report: CalibrationReport) -> str:
    return ",".join(CSV_COLUMNS) + "\n" + report.csv_row() + "\n"
