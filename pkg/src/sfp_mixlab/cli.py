"""Command line interface: sfp-mixlab <subcommand>.

Subcommands: generate, mix, cheeger, flows, coarse, cutpoints, stats,
bounds, scan.  See README.md for the file formats.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import cheeger, coarse, concentration, flows, harness, stats, walk
from .graph import (SfpGraph, deserialize, generate, generate_long_range,
                    generate_simplified, sample_weights, serialize)
from .params import PhaseParams, Topology
from .rng import RngStream


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _dump(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def cmd_generate(args):
    topo = (Topology.segment if args.topology == "segment"
            else Topology.torus)(args.n)
    if args.variant == "standard":
        g = generate(PhaseParams(args.alpha, args.tau), topo, args.seed)
    elif args.variant == "longrange":
        g = generate_long_range(args.alpha, topo, args.seed)
    else:
        if args.tau is None:
            raise SystemExit("--tau is required for the simplified variant")
        w = sample_weights(args.n, args.tau, RngStream(args.seed, "weights"))
        g = generate_simplified(args.n, args.alpha, w, tau=args.tau,
                                seed=args.seed)
    serialize(g, args.out)
    print(f"wrote {args.out}: variant={g.variant} N={g.n} edges={g.num_edges}")


def cmd_mix(args):
    g = deserialize(args.graph)
    if args.method == "exact":
        est = walk.exact_tmix(g, threshold=args.threshold,
                              exact_cap=max(g.n, 1))
        lam2, gap = walk.spectral_gap(g)
        est.gap = gap
    elif args.method == "spectral":
        est = walk.spectral_estimate(g, threshold=args.threshold)
    else:
        est = walk.mc_tmix(g, replicas=args.replicas,
                           threshold=args.threshold)
    header = "N,alpha,tau,seed,method,tmix,lower,upper,gap,runtime_s"
    row = (f"{g.n},{g.params.alpha!r},{g.params.tau!r},{g.seed},{est.method},"
           f"{est.value},{est.lower!r},{est.upper!r},"
           f"{'' if est.gap is None else repr(est.gap)},{est.runtime_s!r}")
    new = not Path(args.out).exists()
    with open(args.out, "a") as fh:
        if new:
            fh.write(header + "\n")
        fh.write(row + "\n")
    print(row)


def cmd_cheeger(args):
    g = deserialize(args.graph)
    if args.slices:
        rep = cheeger.slice_cheeger_certificate(g, c0=args.exponent)
        payload = {
            "mode": "slices",
            "family_min": rep.family_min,
            "threshold": rep.threshold,
            "passes": rep.passes,
            "family": [dataclasses.asdict(e) for e in rep.family],
            "skipped": rep.skipped,
        }
    else:
        phi, arg = cheeger.exact_cheeger(g)
        pi_min = float(walk.stationary(g).min())
        lo, up = cheeger.cheeger_tmix_bounds(phi, pi_min)
        payload = {
            "mode": "exact",
            "phi_star": phi,
            "argmin": arg.indices.tolist(),
            "tmix_lower": lo,
            "tmix_upper": up,
        }
    _dump(payload, args.out)
    print(f"wrote {args.out}")


def cmd_flows(args):
    g = deserialize(args.graph)
    f = flows.geodesic_flow(g)
    f.check_feasible()
    payload = {
        "n": g.n,
        "edges": g.num_edges,
        "congestion": flows.congestion(f),
        "comb_tmix_bound": flows.comb_tmix_bound(f),
    }
    if args.chunking:
        ch = coarse.Chunking(g.n, args.chunking)
        eps = math.log(args.chunking) / math.log(g.n) - (g.params.gamma - 1.0)
        triple = coarse.couple_tilde(g, ch, eps)
        twin = triple.dominated_twin()
        base = flows.geodesic_flow(twin)
        cf = flows.chunk_transfer_flow(g, ch, twin, base)
        cf.check_feasible()
        diag = coarse.diagnostics(triple)
        payload["chunk_flow"] = {
            "L": ch.length, "K": ch.k, "eps": eps,
            "congestion": flows.congestion(cf),
            "comb_tmix_bound": flows.comb_tmix_bound(cf),
            "delta_g": diag.delta_g,
            "edge_ratio": diag.edge_ratio,
            "r_ratio": diag.r_ratio,
            "pi_max": diag.pi_max,
        }
    _dump(payload, args.out)
    print(f"wrote {args.out}")


def cmd_coarse(args):
    g = deserialize(args.graph)
    ch = coarse.make_chunking(g.n, g.params, args.eps)
    triple = coarse.couple_tilde(g, ch, args.eps)
    diag = coarse.diagnostics(triple)
    payload = {
        "n": g.n, "L": ch.length, "K": ch.k, "eps": args.eps,
        "tilde_params": {"alpha": triple.gamma_tilde.params.alpha,
                         "tau": triple.gamma_tilde.params.tau,
                         "gamma": triple.gamma_tilde.params.gamma},
        "gamma_edges": triple.gamma.graph.edge_array().tolist(),
        "gamma_tilde_edges": triple.gamma_tilde.edge_array().tolist(),
        "gamma_tilde_weights": triple.gamma_tilde.weights.tolist(),
        "representatives": triple.gamma.rep.tolist(),
        "report": {
            "weight_clamps": triple.report.weight_clamps,
            "condition_failures": triple.report.condition_failures,
            "domination_violations": triple.report.domination_violations,
            "condition_failure_fraction":
                triple.report.condition_failure_fraction,
        },
        "diagnostics": {
            "delta_g": diag.delta_g, "edge_ratio": diag.edge_ratio,
            "r_ratio": diag.r_ratio, "pi_max": diag.pi_max,
            "chunk_diameters": diag.chunk_diameters.tolist(),
        },
    }
    _dump(payload, args.out)
    print(f"wrote {args.out}")


def cmd_cutpoints(args):
    g = deserialize(args.graph)
    rep = stats.cut_points(g)
    print(f"N={rep.n} cut_points={rep.cut_points.size} "
          f"good={rep.good_cut_points.size} density={rep.density:.4f} "
          f"good_density={rep.good_density:.4f}")
    if args.out:
        _dump({"n": rep.n, "cut_points": rep.cut_points.tolist(),
               "good_cut_points": rep.good_cut_points.tolist(),
               "density": rep.density, "good_density": rep.good_density},
              args.out)


def cmd_stats(args):
    g = deserialize(args.graph)
    summ = stats.degree_summary(g)
    payload = {
        "n": g.n, "edges": g.num_edges, "total_degree": summ.total,
        "max_degree": summ.max, "hill_tail_index": summ.hill,
        "hill_top_fraction": summ.hill_top_fraction,
        "mean_degree_by_weight": summ.mean_degree_by_weight,
    }
    if g.n <= args.diameter_cap:
        try:
            payload["diameter"] = stats.diameter(g)
        except ValueError:
            payload["diameter"] = None
    _dump(payload, args.out)
    print(f"wrote {args.out}")


def cmd_bounds(args):
    cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.which == "bernstein":
        cmp_ = concentration.bernstein_coin_audit(**cfg)
        payload = dataclasses.asdict(cmp_)
    elif args.which == "fuknagaev":
        cmp_, c = concentration.fuk_nagaev_pareto_audit(**cfg)
        payload = dataclasses.asdict(cmp_)
        payload["calibrated_c"] = c
    else:
        raise SystemExit("--which audit requires the library API; see README")
    _dump(payload, args.out)
    print(f"wrote {args.out}")


def cmd_scan(args):
    config = harness.ScanConfig.from_json(args.config)
    path = harness.run_scan(config, args.out, workers=args.workers)
    print(f"wrote {path}")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sfp-mixlab")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a graph and write it to a file")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--variant", choices=["standard", "simplified", "longrange"],
                   default="standard")
    p.add_argument("--topology", choices=["torus", "segment"], default="torus")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("mix", help="measure the mixing time of a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", choices=["exact", "spectral", "mc"],
                   default="spectral")
    p.add_argument("--threshold", type=float, default=0.25)
    p.add_argument("--replicas", type=int, default=20_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("cheeger", help="exact Cheeger constant or slice audit")
    p.add_argument("--graph", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--slices", action="store_true")
    p.add_argument("--exponent", type=float, default=6.0,
                   help="certificate exponent c0 in (log N)^-c0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cheeger)

    p = sub.add_parser("flows", help="geodesic-flow congestion report")
    p.add_argument("--graph", required=True)
    p.add_argument("--chunking", type=int, default=None, metavar="L")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_flows)

    p = sub.add_parser("coarse", help="chunk, collapse and couple a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coarse)

    p = sub.add_parser("cutpoints", help="cut-point report for a segment graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cutpoints)

    p = sub.add_parser("stats", help="degree and distance statistics")
    p.add_argument("--graph", required=True)
    p.add_argument("--diameter-cap", type=int, default=4096)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bounds", help="tail-bound audits")
    p.add_argument("--which", choices=["bernstein", "fuknagaev", "audit"],
                   required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("scan", help="run a parameter scan from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    args = ap.parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
