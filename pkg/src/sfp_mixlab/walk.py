"""Lazy simple random walk: stationary law, TV mixing, spectral gap, hitting.

The walk holds with probability 1/2 and otherwise moves to a uniform
neighbour, so the kernel is P = I/2 + D^{-1}A/2: row stochastic, reversible
for pi(x) = D_x / D_G, and with nonnegative spectrum.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import eigvalsh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .graph import SfpGraph
from .rng import RngStream

__all__ = [
    "MixingEstimate", "DisconnectedGraphError", "ExactCapExceeded",
    "SpectralConvergenceError", "lazy_matrix", "stationary", "tv_curve",
    "exact_tmix", "spectral_gap", "spectral_tmix_bounds", "spectral_estimate",
    "mc_tmix", "max_hitting_time", "hitting_tmix_bound",
]

DEFAULT_EXACT_CAP = 4096
DEFAULT_DENSE_EIG_CAP = 2048


class DisconnectedGraphError(RuntimeError):
    """Mixing quantities are undefined on a disconnected graph."""


class ExactCapExceeded(RuntimeError):
    """Exact TV iteration refused; use the Monte Carlo estimator instead."""


class SpectralConvergenceError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass
class MixingEstimate:
    """A mixing time value with method tag and bracket.

    ``method`` is one of "exact", "spectral", "mc".  For the exact method
    the bracket collapses onto the value.  ``resolved`` is False when a
    Monte Carlo bracket failed to close within the step cap.
    """

    value: int
    method: str
    lower: float
    upper: float
    threshold: float = 0.25
    runtime_s: float = 0.0
    gap: float | None = None
    resolved: bool = True

    def __post_init__(self):
        if not (0.0 < self.threshold < 0.5):
            raise ValueError(f"threshold must lie in (0, 1/2), got {self.threshold}")
        if self.resolved and not (self.lower <= self.value <= self.upper):
            raise ValueError(
                f"bracket [{self.lower}, {self.upper}] does not contain {self.value}")


def _require_connected(graph: SfpGraph):
    if not graph.is_connected():
        raise DisconnectedGraphError(
            "graph is disconnected; stationary measure and mixing undefined")


def lazy_matrix(graph: SfpGraph) -> sparse.csr_matrix:
    """P = I/2 + D^{-1}A/2 as a sparse CSR matrix."""
    n = graph.n
    deg = graph.degrees.astype(float)
    data = np.repeat(0.5 / deg, graph.degrees)
    off = sparse.csr_matrix((data, graph.indices, graph.indptr), shape=(n, n))
    return (off + sparse.identity(n, format="csr") * 0.5).tocsr()


def stationary(graph: SfpGraph) -> np.ndarray:
    """pi(x) = D_x / D_G for the lazy walk; requires connectivity."""
    _require_connected(graph)
    deg = graph.degrees.astype(float)
    return deg / deg.sum()


def _symmetrized(graph: SfpGraph) -> sparse.csr_matrix:
    """D^{1/2} P D^{-1/2}: symmetric, same spectrum as P."""
    n = graph.n
    deg = graph.degrees.astype(float)
    inv_sqrt = 1.0 / np.sqrt(deg)
    rows = np.repeat(np.arange(n), graph.degrees)
    data = 0.5 * inv_sqrt[rows] * inv_sqrt[graph.indices]
    off = sparse.csr_matrix((data, graph.indices, graph.indptr), shape=(n, n))
    return (off + sparse.identity(n, format="csr") * 0.5).tocsr()


def tv_curve(graph: SfpGraph, n_max: int, exact_cap: int = DEFAULT_EXACT_CAP
             ) -> np.ndarray:
    """d(n) = max_x TV(P^n(x, .), pi) for n = 0..n_max, by exact iteration.

    Iterates all N start rows at once; memory and time are O(N^2), hence
    the cap."""
    _require_connected(graph)
    if graph.n > exact_cap:
        raise ExactCapExceeded(
            f"n={graph.n} exceeds exact-TV cap {exact_cap}; use mc_tmix")
    pi = stationary(graph)
    P = lazy_matrix(graph)
    rows = np.eye(graph.n)
    out = np.empty(n_max + 1)
    out[0] = _worst_tv(rows, pi)
    for step in range(1, n_max + 1):
        rows = rows @ P
        out[step] = _worst_tv(rows, pi)
    return out


def _worst_tv(rows: np.ndarray, pi: np.ndarray) -> float:
    return float(0.5 * np.abs(rows - pi).sum(axis=1).max())


def exact_tmix(graph: SfpGraph, threshold: float = 0.25,
               exact_cap: int = DEFAULT_EXACT_CAP,
               step_cap: int | None = None) -> MixingEstimate:
    """Smallest n with d(n) < threshold, by exact TV iteration."""
    _require_connected(graph)
    if graph.n > exact_cap:
        raise ExactCapExceeded(
            f"n={graph.n} exceeds exact-TV cap {exact_cap}; use mc_tmix")
    t0 = time.perf_counter()
    pi = stationary(graph)
    P = lazy_matrix(graph)
    cap = step_cap if step_cap is not None else max(100, 20 * graph.n ** 2)
    rows = np.eye(graph.n)
    d_prev = _worst_tv(rows, pi)
    n = 0
    while d_prev >= threshold:
        n += 1
        if n > cap:
            raise RuntimeError(f"no TV crossing below cap {cap}")
        rows = rows @ P
        d = _worst_tv(rows, pi)
        if d > d_prev + 1e-12:
            raise AssertionError(f"TV distance increased at step {n}: "
                                 f"{d_prev} -> {d}")
        d_prev = d
    return MixingEstimate(n, "exact", n, n, threshold,
                          time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Spectral gap


def spectral_gap(graph: SfpGraph, dense_cap: int = DEFAULT_DENSE_EIG_CAP,
                 rel_tol: float = 1e-8) -> tuple[float, float]:
    """(lambda_2, 1 - lambda_2) of the lazy kernel.

    Dense symmetric eigensolve up to ``dense_cap`` vertices; above that, a
    shift-inverted Lanczos solve anchored just above 1, re-targeted until
    the shift is within a few gaps of lambda_2 so that the back-transform
    stays accurate to ``rel_tol``.
    """
    _require_connected(graph)
    S = _symmetrized(graph)
    if graph.n <= dense_cap:
        vals = eigvalsh(S.toarray())
        lam2 = float(vals[-2])
        return lam2, 1.0 - lam2
    pi = stationary(graph)
    u = np.sqrt(pi)
    v0 = u + 0.01 * RngStream(graph.seed, "eig-v0").uniforms(graph.n)
    Sc = S.tocsc()
    delta = 1e-4
    lam2 = None
    for _ in range(4):
        try:
            vals, vecs = eigsh(Sc, k=2, sigma=1.0 + delta, which="LM",
                               v0=v0, tol=0)
        except ArpackNoConvergence as exc:
            raise SpectralConvergenceError(
                f"shift-inverted Lanczos failed at shift {1 + delta}",
                residual=getattr(exc, "eigenvalues", None)) from exc
        align = np.abs(vecs.T @ u)
        lam2 = float(vals[np.argmin(align)])
        gap = 1.0 - lam2
        if delta <= 8.0 * gap:
            break
        delta = max(gap / 4.0, 1e-10)
    gap = 1.0 - lam2
    if not (0.0 < gap <= 1.0):
        raise SpectralConvergenceError(
            f"implausible spectral gap {gap}", residual=gap)
    return lam2, gap


def spectral_tmix_bounds(graph: SfpGraph, **kw) -> tuple[float, float, float]:
    """(lower, upper, gap): the relaxation-time sandwich around t_mix."""
    lam2, gap = spectral_gap(graph, **kw)
    pi = stationary(graph)
    lower = (1.0 / gap - 1.0) * math.log(2.0)
    upper = (1.0 / gap) * math.log(4.0 / pi.min())
    return lower, upper, gap


def spectral_estimate(graph: SfpGraph, threshold: float = 0.25,
                      **kw) -> MixingEstimate:
    """Mixing estimate with the relaxation time 1/gap as the value and the
    spectral sandwich as the bracket."""
    t0 = time.perf_counter()
    lower, upper, gap = spectral_tmix_bounds(graph, **kw)
    value = int(round(1.0 / gap))
    return MixingEstimate(value, "spectral", lower, upper, threshold,
                          time.perf_counter() - t0, gap=gap)


# ---------------------------------------------------------------------------
# Monte Carlo estimator


def _kahan_sum(values) -> float:
    total = 0.0
    comp = 0.0
    for v in values:
        y = float(v) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def binned_tv(counts: np.ndarray, replicas: int, pi_binned: np.ndarray) -> float:
    """TV between the binned empirical law and binned pi; a lower bound on
    the unbinned TV by the data-processing inequality."""
    diffs = np.abs(counts / replicas - pi_binned)
    return 0.5 * _kahan_sum(diffs)


def _simulate_binned(graph, start, steps, replicas, bins, stream):
    """Walk ``replicas`` lazy walkers ``steps`` steps; return bin counts."""
    g = stream.generator()
    pos = np.full(replicas, start, dtype=np.int64)
    indptr = graph.indptr
    indices = graph.indices
    deg = graph.degrees
    for _ in range(steps):
        u = g.random(replicas)
        move = u >= 0.5
        if move.any():
            r = (u[move] - 0.5) * 2.0
            p = pos[move]
            pos[move] = indices[indptr[p] + (r * deg[p]).astype(np.int64)]
    return np.bincount(np.searchsorted(bins, pos, side="right") - 1,
                       minlength=len(bins))


def mc_tmix(graph: SfpGraph, replicas: int = 10_000, seed: int | None = None,
            threshold: float = 0.25, step_cap: int = 1 << 20,
            n_random_starts: int = 8) -> MixingEstimate:
    """Monte Carlo mixing bracket from arc-binned TV distances.

    The torus is split into ceil(sqrt(N)) arcs; binned empirical TV lower
    bounds the true TV, so the first step where the worst sampled start
    drops below threshold - 2 SE is reported as the value, with a
    conservative bracket: ``lower`` from binned TV still above threshold,
    ``upper`` from the spectral bound.  Starts are the top-degree vertex,
    the bottom-degree vertex and ``n_random_starts`` random ones.
    """
    if replicas < 1000:
        raise ValueError(f"need at least 10^3 replicas, got {replicas}")
    _require_connected(graph)
    t0 = time.perf_counter()
    n = graph.n
    seed = graph.seed if seed is None else seed
    pi = stationary(graph)
    b = math.ceil(math.sqrt(n))
    bins = np.linspace(0, n, b + 1).astype(np.int64)[:-1]  # arc left edges
    pi_binned = np.add.reduceat(pi, bins)
    se = 0.5 * math.sqrt(len(bins) / replicas)
    margin = threshold - 2.0 * se
    if margin <= 0:
        raise ValueError(f"replicas={replicas} too few for threshold "
                         f"{threshold} at N={n} (SE={se:.4f})")
    rng = RngStream(seed, "mc-walk")
    starts = _mc_starts(graph, n_random_starts, RngStream(seed, "mc-starts"))

    def worst_tv_at(steps: int) -> float:
        vals = [binned_tv(_simulate_binned(graph, s, steps, replicas, bins,
                                           rng.child(int(s), int(steps))),
                          replicas, pi_binned) for s in starts]
        return max(vals)

    lower = 1 if worst_tv_at(0) >= threshold else 0
    hi = 1
    tv_hi = worst_tv_at(hi)
    while tv_hi >= margin:
        if tv_hi >= threshold:
            lower = hi + 1
        if 2 * hi > step_cap:
            try:
                _, s_up, gap = spectral_tmix_bounds(graph)
            except Exception:
                s_up, gap = math.inf, None
            return MixingEstimate(hi, "mc", lower, max(s_up, hi), threshold,
                                  time.perf_counter() - t0, gap=gap,
                                  resolved=False)
        hi *= 2
        tv_hi = worst_tv_at(hi)
    lo = max(hi // 2, 1)
    while lo + 1 < hi:  # first step below the margin, up to MC noise
        mid = (lo + hi) // 2
        tv_mid = worst_tv_at(mid)
        if tv_mid < margin:
            hi = mid
        else:
            if tv_mid >= threshold:
                lower = max(lower, mid + 1)
            lo = mid
    try:
        _, s_up, gap = spectral_tmix_bounds(graph)
    except SpectralConvergenceError:
        s_up, gap = math.inf, None
    upper = max(math.ceil(s_up), hi)
    return MixingEstimate(hi, "mc", lower, upper, threshold,
                          time.perf_counter() - t0, gap=gap)


def _mc_starts(graph, n_random, stream):
    starts = [int(np.argmax(graph.degrees)), int(np.argmin(graph.degrees))]
    g = stream.generator()
    starts += [int(v) for v in g.choice(graph.n, size=min(n_random, graph.n),
                                        replace=False)]
    seen = []
    for s in starts:
        if s not in seen:
            seen.append(s)
    return seen


# ---------------------------------------------------------------------------
# Hitting times


def max_hitting_time(graph: SfpGraph, cap: int = 4096) -> float:
    """max_{x,y} E_x[time to hit y] via the fundamental matrix.

    Solves Z = (I - P + 1 pi^T)^{-1} once; then E_x[tau_y] =
    (Z_yy - Z_xy) / pi_y."""
    _require_connected(graph)
    if graph.n > cap:
        raise ExactCapExceeded(f"n={graph.n} exceeds hitting-time cap {cap}")
    pi = stationary(graph)
    P = lazy_matrix(graph).toarray()
    A = np.eye(graph.n) - P + np.outer(np.ones(graph.n), pi)
    Z = np.linalg.inv(A)
    hit = (np.diag(Z)[None, :] - Z) / pi[None, :]
    return float(hit.max())


def hitting_tmix_bound(graph: SfpGraph, cap: int = 4096) -> float:
    """Upper bound 4 * t_hit + 1 on the mixing time."""
    return 4.0 * max_hitting_time(graph, cap=cap) + 1.0
