"""Parameter scans, exponent fits and the phase-prediction table.

A scan walks a grid of (alpha, tau) points across a geometric N schedule
with several seeds per point, measures the mixing time by the cheapest
adequate method (exact TV, spectral relaxation proxy, or Monte Carlo), and
writes one CSV row per run.  Rows are keyed, so reruns resume; row content
is a pure function of the config and master seed, so reruns are
byte-identical regardless of worker count (wall-clock durations come from
an injectable clock for the same reason).
"""

from __future__ import annotations

import json
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import walk
from .graph import generate
from .params import ParameterError, PhaseParams, Topology

__all__ = [
    "PhasePrediction", "phase_predict", "ScanPoint", "ScanConfig",
    "run_scan", "fit_exponent", "ExponentFit", "load_rows", "CSV_COLUMNS",
]

CSV_COLUMNS = ("point_id", "alpha", "tau", "gamma", "N", "seed", "method",
               "tmix", "lower", "upper", "gap", "runtime_s", "error")


@dataclass(frozen=True)
class PhasePrediction:
    """Predicted log-log slope of the mixing time in N, with provenance."""

    label: str
    slope: float | None
    note: str = ""


def phase_predict(alpha: float, tau: float) -> PhasePrediction:
    """Phase-diagram lookup for the mixing-time exponent.

    Boundaries (gamma in {1, 2}, alpha in {1, 2}, tau = 2) are measure-zero
    and unclassified.  In the region 1 < alpha < 2, tau > 2 only a lower
    bound of exponent alpha - 1 is established; the matching upper bound is
    conjectural, and inside the triangle gamma < 2 an exponent gamma - 1
    upper bound is also available, so both candidates are reported there.
    """
    if alpha <= 0 or tau <= 1:
        raise ParameterError(f"need alpha > 0 and tau > 1, got ({alpha}, {tau})")
    gamma = alpha * (tau - 1.0)
    if gamma in (1.0, 2.0) or alpha in (1.0, 2.0) or tau == 2.0:
        return PhasePrediction("boundary", None, "measure-zero boundary; unclassified")
    if gamma < 1.0:
        return PhasePrediction("polylog", 0.0, "mixing bounded by a power of log N")
    if 1.0 < gamma < 2.0 and 1.0 < tau < 2.0:
        return PhasePrediction("hub-speedup", gamma - 1.0,
                               "two-sided up to slowly varying corrections")
    if 1.0 < alpha < 2.0 and tau > 2.0:
        if gamma < 2.0:
            note = ("lower bound only; conjectured exponent alpha-1, "
                    "while gamma-1 is a provable upper bound in this triangle")
        else:
            note = "lower bound; matching upper bound conjectured"
        return PhasePrediction("conjectured", alpha - 1.0, note)
    if alpha > 2.0 and gamma > 2.0:
        return PhasePrediction("diffusive", 2.0, "two-sided up to polylogs")
    # alpha < 1 with gamma > 1: unbounded mean degree, believed polylog,
    # not analysed
    return PhasePrediction("unclassified", None,
                           "alpha < 1, gamma > 1: believed polylogarithmic, "
                           "not analysed")


@dataclass(frozen=True)
class ScanPoint:
    point_id: str
    alpha: float
    tau: float


@dataclass
class ScanConfig:
    points: list
    n_schedule: list
    seeds_per_point: int
    master_seed: int = 0
    threshold: float = 0.25
    exact_below: int = 257        # N < exact_below -> exact TV
    spectral_below: int = 1 << 20  # N < spectral_below -> spectral proxy
    mc_replicas: int = 20_000
    out_name: str = "results.csv"

    def __post_init__(self):
        self.points = [p if isinstance(p, ScanPoint) else ScanPoint(**p)
                       for p in self.points]
        if not self.n_schedule:
            raise ParameterError("empty N schedule")
        if list(self.n_schedule) != sorted(set(self.n_schedule)):
            raise ParameterError("N schedule must be strictly increasing")
        if self.seeds_per_point < 3:
            raise ParameterError("need at least 3 seeds per point for slopes")
        ids = [p.point_id for p in self.points]
        if len(set(ids)) != len(ids):
            raise ParameterError("duplicate point_id")

    def method_for(self, n: int) -> str:
        if n < self.exact_below:
            return "exact"
        if n < self.spectral_below:
            return "spectral"
        return "mc"

    def to_json(self, path):
        data = asdict(self)
        data["points"] = [asdict(p) for p in self.points]
        Path(path).write_text(json.dumps(data, indent=2) + "\n")

    @classmethod
    def from_json(cls, path):
        return cls(**json.loads(Path(path).read_text()))


def _row_seed(master_seed: int, point_id: str, n: int, seed_idx: int) -> int:
    ent = np.random.SeedSequence([master_seed & ((1 << 64) - 1),
                                  zlib.crc32(point_id.encode("utf-8")),
                                  n, seed_idx])
    return int(ent.generate_state(1, np.uint64)[0] >> 1)


def _measure_row(config: ScanConfig, point: ScanPoint, n: int, seed_idx: int,
                 clock) -> dict:
    row = {"point_id": point.point_id, "alpha": point.alpha, "tau": point.tau,
           "gamma": point.alpha * (point.tau - 1.0), "N": n, "seed": seed_idx,
           "method": config.method_for(n), "tmix": "", "lower": "",
           "upper": "", "gap": "", "runtime_s": "", "error": ""}
    t0 = clock()
    try:
        params = PhaseParams(point.alpha, point.tau)
        graph = generate(params, Topology.torus(n),
                         _row_seed(config.master_seed, point.point_id, n,
                                   seed_idx))
        method = row["method"]
        if method == "exact":
            est = walk.exact_tmix(graph, threshold=config.threshold,
                                  exact_cap=max(n, 1))
            lam2, gap = walk.spectral_gap(graph)
            est.gap = gap
        elif method == "spectral":
            est = walk.spectral_estimate(graph, threshold=config.threshold)
        else:
            est = walk.mc_tmix(graph, replicas=config.mc_replicas,
                               threshold=config.threshold)
        row.update(tmix=est.value, lower=_fmt(est.lower), upper=_fmt(est.upper),
                   gap=_fmt(est.gap))
    except Exception as exc:  # per-row failure: record and continue
        row["error"] = type(exc).__name__
    row["runtime_s"] = _fmt(clock() - t0)
    return row


def _fmt(x):
    if x is None or x == "":
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run_scan(config: ScanConfig, out_dir, workers: int = 1,
             clock=time.perf_counter, plots: bool = True) -> Path:
    """Run (or resume) the scan; returns the CSV path.

    Row values depend only on (config, master_seed), never on scheduling,
    so rerunning with any worker count reproduces the file byte for byte
    (durations come from ``clock``, injectable for reproducibility tests).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / config.out_name
    existing = {}
    if csv_path.exists():
        for row in load_rows(csv_path):
            existing[(row["point_id"], int(row["N"]), int(row["seed"]))] = row
    tasks = [(p, n, s) for p in config.points for n in config.n_schedule
             for s in range(config.seeds_per_point)]
    todo = [t for t in tasks
            if (t[0].point_id, t[1], t[2]) not in existing]
    if todo:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(
                    lambda t: _measure_row(config, t[0], t[1], t[2], clock),
                    todo))
        else:
            rows = [_measure_row(config, p, n, s, clock) for p, n, s in todo]
        for row in rows:
            existing[(row["point_id"], int(row["N"]), int(row["seed"]))] = row
    ordered = [existing[(p.point_id, n, s)] for p in config.points
               for n in config.n_schedule for s in range(config.seeds_per_point)
               if (p.point_id, n, s) in existing]
    tmp = csv_path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in ordered:
            fh.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")
    tmp.replace(csv_path)
    if plots:
        _emit_plots(config, ordered, out_dir)
    return csv_path


def load_rows(csv_path) -> list:
    lines = Path(csv_path).read_text().splitlines()
    if not lines:
        return []
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:] if ln]


@dataclass
class ExponentFit:
    slope: float
    stderr: float
    r2: float
    n_values: list
    medians: list


def fit_exponent(rows, value_key: str = "tmix") -> ExponentFit:
    """Least squares of log(median value per N) against log N.

    Medians over seeds damp the heavy-tailed run-to-run variation in the
    hub phases.  Needs >= 4 distinct N with >= 3 values each.
    """
    per_n = {}
    for row in rows:
        if row.get("error"):
            continue
        v = float(row[value_key])
        per_n.setdefault(int(row["N"]), []).append(v)
    ns = sorted(per_n)
    if len(ns) < 4 or any(len(per_n[n]) < 3 for n in ns):
        raise ParameterError(
            f"need >= 4 distinct N with >= 3 values each, got "
            f"{ {n: len(per_n[n]) for n in ns} }")
    medians = [float(np.median(per_n[n])) for n in ns]
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(medians))
    a = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(a, y, rcond=None)
    slope = float(coef[0])
    yhat = a @ coef
    ss_res = float(((y - yhat) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(len(ns) - 2, 1)
    sx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(ss_res / dof / sx) if sx > 0 else math.inf
    return ExponentFit(slope, stderr, r2, ns, medians)


def _emit_plots(config: ScanConfig, rows, out_dir: Path):
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "sfp-mixlab"
    import matplotlib.pyplot as plt

    for point in config.points:
        mine = [r for r in rows if r["point_id"] == point.point_id
                and not r.get("error")]
        if not mine:
            continue
        ns = np.array([int(r["N"]) for r in mine], dtype=float)
        vals = np.array([float(r["tmix"]) for r in mine])
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(ns, vals, "o", ms=4, alpha=0.6, label="runs")
        try:
            fit = fit_exponent(mine)
            xs = np.array(sorted(set(ns)))
            ys = np.exp(np.interp(np.log(xs), np.log(np.array(fit.n_values, float)),
                                  np.log(np.array(fit.medians))))
            ax.loglog(xs, ys, "-", label=f"median, slope {fit.slope:.2f}")
        except ParameterError:
            pass
        pred = phase_predict(point.alpha, point.tau)
        title = f"{point.point_id}: alpha={point.alpha}, tau={point.tau}"
        if pred.slope is not None:
            title += f" (predicted slope {pred.slope:.2f}, {pred.label})"
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("N")
        ax.set_ylabel("mixing-time measure")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out_dir / f"{point.point_id}.svg", metadata={"Date": None})
        plt.close(fig)
