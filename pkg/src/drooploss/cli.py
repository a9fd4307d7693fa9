"""Command line interface.

Subcommands::

    drooploss analyze NETWORK.json      spectrum, H2 norms and bounds (JSON)
    drooploss scaling-sweep             norm vs network size (CSV)
    drooploss transient                 complete vs line relaxation (CSV)
    drooploss alpha-sweep               cross-coupling error vs alpha (CSV)

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .coupled import fit_alpha_exponent, gamma, gamma_series_complete, GammaCurve
from .dynamics import InverterParams, assemble_coupled, assemble_decoupled, assemble_full
from .errors import NumericalError, UnstableModelError, ValidationError
from .h2 import (
    complete_graph_asymptote,
    complete_graph_bounds,
    h2_norm_analytic,
    h2_norm_gramian,
    path_graph_bound,
)
from .io import load_network, params_from_dict, render_csv
from .network import (
    DEFAULT_B_RANGE,
    complete_graph,
    is_complete,
    is_path,
    laplacian_eigenvalues,
    path_graph,
    require_connected,
)
from .sim import SimConfig, settling_time, simulate
from .spectral import certify_stability

log = logging.getLogger("drooploss")

SEED_ENV = "DROOPLOSS_SEED"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
TOPOLOGIES = ("complete", "line")


@dataclass(frozen=True)
class ParamSet:
    k_p: float = 1.0
    k_q: float = 1.0
    tau_p: float = 1.0
    tau_q: float = 1.0
    c_q: float = 1.0
    alpha: float = 0.2

    def inverter(self) -> InverterParams:
        return InverterParams.from_cq(self.c_q, k_p=self.k_p, k_q=self.k_q,
                                      tau_p=self.tau_p, tau_q=self.tau_q, alpha=self.alpha)


# figure-caption defaults
FIG2_PARAMS = ParamSet(k_p=1.0, k_q=1.0, tau_p=1.0, tau_q=1.0, c_q=1.0, alpha=0.2)
FIG3_PARAMS = FIG2_PARAMS
FIG4_PARAMS = ParamSet(k_p=1.0, k_q=2.0, tau_p=0.5, tau_q=0.5, c_q=1.0, alpha=0.2)
FIG4_SUSCEPTANCE = 1 / 0.2  # line reactance x = 0.2


@dataclass(frozen=True)
class ScalingConfig:
    topologies: tuple[str, ...] = TOPOLOGIES
    n_values: tuple[int, ...] = tuple(range(2, 101))
    b_range: tuple[float, float] = DEFAULT_B_RANGE
    params: ParamSet = FIG2_PARAMS
    seed: int = 0


@dataclass(frozen=True)
class TransientConfig:
    topologies: tuple[str, str] = TOPOLOGIES
    n: int = 5
    susceptance: float = 1.0
    params: ParamSet = FIG3_PARAMS
    horizon: float = 20.0
    dt: float = 1e-3
    stride: int = 10
    noise: float = 0.0
    envelope: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class AlphaSweepConfig:
    topologies: tuple[str, ...] = TOPOLOGIES
    n: int = 50
    susceptance: float = FIG4_SUSCEPTANCE
    alphas: tuple[float, ...] = tuple(np.round(np.linspace(0.01, 0.5, 50), 10).tolist())
    params: ParamSet = FIG4_PARAMS
    seed: int = 0


def make_graph(topology: str, n: int, *, susceptance=1.0, b_range=None, seed=None, alpha=0.2):
    if topology == "complete":
        return complete_graph(n, susceptance, alpha, b_range=b_range, seed=seed)
    if topology in ("line", "path"):
        return path_graph(n, susceptance, alpha, b_range=b_range, seed=seed)
    raise ValidationError(f"unknown topology {topology!r}")


# ---------------------------------------------------------------- experiments

def analyze(graph, params: InverterParams) -> dict:
    """Results record for one network."""
    require_connected(graph)
    out = {"n_nodes": graph.n_nodes, "n_edges": graph.n_edges, "alpha_graph": graph.alpha,
           "params": params.to_dict()}
    uniform = params.is_uniform and (params.alpha is not None or graph.alpha is not None)
    if uniform:
        p = params.uniform().with_alpha(params.resolve_alpha(graph))
        model = assemble_decoupled(graph, p)
        out["spectrum"] = certify_stability(model).to_dict()
        analytic = h2_norm_analytic(p, laplacian_eigenvalues(graph))
        gram = h2_norm_gramian(model)
        out["h2"] = {"analytic": analytic.to_dict(), "gramian": gram.to_dict(),
                     "relative_difference": abs(gram.total - analytic.total) / analytic.total
                     if analytic.total else 0.0}
        coupled = assemble_coupled(graph, p)
        crep = certify_stability(coupled)
        out["coupled"] = {"stable_observable": crep.stable_observable,
                          "certified_by": crep.certified_by}
        if crep.stable_observable:
            cg = h2_norm_gramian(coupled)
            out["coupled"]["gramian"] = cg.to_dict()
            out["coupled"]["gamma"] = (cg.total - analytic.total) / analytic.total if analytic.total else 0.0
        if is_complete(graph):
            out["bounds"] = complete_graph_bounds(p, graph).to_dict()
            out["bounds"]["asymptote"] = complete_graph_asymptote(p, graph.n_nodes)
        elif is_path(graph):
            out["bounds"] = path_graph_bound(p, graph).to_dict()
    else:
        model = assemble_full(graph, params)
        out["spectrum"] = certify_stability(model).to_dict()
        out["h2"] = {"gramian": h2_norm_gramian(model).to_dict()}
    return out


def scaling_sweep(cfg: ScalingConfig):
    """Rows ``(topology, N, h2_exact, upper, lower, asymptote)``."""
    p = cfg.params.inverter()
    columns = ["topology", "N", "h2_exact", "h2_bound_upper", "h2_bound_lower", "h2_asymptote"]
    rows = []
    for t_idx, topo in enumerate(cfg.topologies):
        for n in sorted(cfg.n_values):
            g = make_graph(topo, n, b_range=cfg.b_range, seed=(cfg.seed, t_idx, n), alpha=p.alpha)
            exact = h2_norm_analytic(p, laplacian_eigenvalues(g)).total
            if topo == "complete":
                b = complete_graph_bounds(p, g)
                rows.append([topo, n, exact, b.upper, b.lower, complete_graph_asymptote(p, n)])
            else:
                b = path_graph_bound(p, g)
                rows.append([topo, n, exact, b.upper, None, None])
    return columns, rows, {}


def transient(cfg: TransientConfig):
    """Zero-noise (by default) relaxation from one shared random disturbance."""
    p = cfg.params.inverter()
    n = cfg.n
    rng = np.random.default_rng(cfg.seed)
    x0 = np.concatenate([rng.normal(0, 0.1, n), np.zeros(n), rng.normal(0, 0.05, n)])
    sim_cfg = SimConfig(dt=cfg.dt, horizon=cfg.horizon, burn_in=0.0, seed=cfg.seed,
                        noise_intensity=cfg.noise, initial_state=x0, record_stride=cfg.stride)
    trajs = {}
    summary = {}
    for topo in cfg.topologies:
        g = make_graph(topo, n, susceptance=cfg.susceptance, alpha=p.alpha)
        tr = simulate(assemble_decoupled(g, p), sim_cfg)
        trajs[topo] = tr
        summary[topo] = {
            "settling_time": settling_time(tr.times, tr.loss_series, cfg.envelope),
            "cumulative_loss": float(tr.cumulative_loss[-1]),
            "peak_loss": float(tr.loss_series.max()),
        }
    columns = ["t"]
    for topo in cfg.topologies:
        columns += [f"loss_{topo}", f"cumulative_{topo}"]
    first = trajs[cfg.topologies[0]]
    rows = []
    for k, t in enumerate(first.times):
        row = [float(t)]
        for topo in cfg.topologies:
            row += [trajs[topo].loss_series[k], trajs[topo].cumulative_loss[k]]
        rows.append(row)
    return columns, rows, {"summary": summary, "trajectories": trajs}


def alpha_sweep(cfg: AlphaSweepConfig):
    """Rows ``(alpha, gamma_<topology>..., gamma_series)``; unstable rows are skipped."""
    p = cfg.params.inverter()
    graphs = {t: make_graph(t, cfg.n, susceptance=cfg.susceptance, alpha=p.alpha) for t in cfg.topologies}
    columns = ["alpha"] + [f"gamma_{t}" for t in cfg.topologies] + ["gamma_series"]
    rows, skipped = [], []
    for a in sorted(cfg.alphas):
        try:
            vals = [gamma(graphs[t], p, a) for t in cfg.topologies]
            series = gamma_series_complete(p, a)
        except (UnstableModelError, ValidationError) as exc:
            log.warning("alpha=%s skipped: %s", a, exc)
            skipped.append({"alpha": a, "reason": str(exc)})
            continue
        rows.append([a, *vals, series])
    summary = {"skipped": skipped}
    small = [r for r in rows if 0.01 <= r[0] <= 0.05]
    for j, t in enumerate(cfg.topologies):
        if len(small) >= 3:
            curve = GammaCurve(tuple(r[0] for r in small), tuple(r[1 + j] for r in small))
            try:
                summary[f"slope_{t}"] = fit_alpha_exponent(curve)
            except ValidationError:
                pass
    return columns, rows, summary


# ---------------------------------------------------------------- argparse

def _int_range(text: str) -> tuple[int, ...]:
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return tuple(range(start, stop + 1, step))
        return tuple(int(v) for v in text.split(","))
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}; use START:STOP[:STEP] or a,b,c")


def _float_range(text: str) -> tuple[float, ...]:
    try:
        if ":" in text:
            parts = text.split(":")
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2]) if len(parts) > 2 else 50
            return tuple(np.round(np.linspace(start, stop, count), 12).tolist())
        return tuple(float(v) for v in text.split(","))
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use START:STOP[:COUNT] or a,b,c")


def _pair(text: str) -> tuple[float, float]:
    vals = _float_range(text.replace(":", ","))
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected LO:HI")
    return vals


def _topologies(text: str) -> tuple[str, ...]:
    out = tuple(t.strip() for t in text.split(",") if t.strip())
    for t in out:
        if t not in ("complete", "line", "path"):
            raise argparse.ArgumentTypeError(f"unknown topology {t!r}")
    return tuple("line" if t == "path" else t for t in out)


def _add_params(p: argparse.ArgumentParser):
    g = p.add_argument_group("inverter parameters")
    g.add_argument("--kp", type=float, help="frequency droop gain k_P")
    g.add_argument("--kq", type=float, help="voltage droop gain k_Q")
    g.add_argument("--taup", type=float, help="active power filter constant tau_P [s]")
    g.add_argument("--tauq", type=float, help="reactive power filter constant tau_Q [s]")
    g.add_argument("--cq", type=float, help="voltage-loop constant c_Q = 1 + 2 k_Q shunt_b")
    g.add_argument("--shunt-b", type=float, help="uniform shunt susceptance (alternative to --cq)")
    g.add_argument("--alpha", type=float, help="conductance/susceptance ratio")
    p.add_argument("--seed", type=int, help=f"random seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--defaults", action="store_true",
                   help="use the figure-caption defaults, ignoring parameter flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drooploss", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"drooploss {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="spectrum, H2 norms and bounds of a network file")
    p.add_argument("network", type=Path)
    _add_params(p)

    p = sub.add_parser("scaling-sweep", help="H2 norm against network size")
    p.add_argument("--topology", type=_topologies, default=TOPOLOGIES)
    p.add_argument("--n-range", type=_int_range, default=ScalingConfig.n_values)
    p.add_argument("--n", type=int, help="single network size")
    p.add_argument("--b-range", type=_pair, default=DEFAULT_B_RANGE)
    _add_params(p)

    p = sub.add_parser("transient", help="relaxation of complete vs line graph")
    p.add_argument("--topology", type=_topologies, default=TOPOLOGIES)
    p.add_argument("--n", type=int, default=TransientConfig.n)
    p.add_argument("--b", type=float, default=TransientConfig.susceptance, help="line susceptance")
    p.add_argument("--horizon", type=float, default=TransientConfig.horizon)
    p.add_argument("--dt", type=float, default=TransientConfig.dt)
    p.add_argument("--stride", type=int, default=TransientConfig.stride)
    p.add_argument("--noise", type=float, default=TransientConfig.noise, help="noise intensity")
    _add_params(p)

    p = sub.add_parser("alpha-sweep", help="cross-coupling error gamma against alpha")
    p.add_argument("--topology", type=_topologies, default=TOPOLOGIES)
    p.add_argument("--n", type=int, default=AlphaSweepConfig.n)
    p.add_argument("--b", type=float, default=FIG4_SUSCEPTANCE, help="line susceptance")
    p.add_argument("--alpha-range", type=_float_range, default=AlphaSweepConfig.alphas)
    _add_params(p)
    return parser


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"${SEED_ENV} must be an integer, got {env!r}")
    return 0


def _param_set(args, base: ParamSet) -> ParamSet:
    if args.defaults:
        return base
    upd = {k: v for k, v in (("k_p", args.kp), ("k_q", args.kq), ("tau_p", args.taup),
                             ("tau_q", args.tauq), ("c_q", args.cq), ("alpha", args.alpha))
           if v is not None}
    ps = replace(base, **upd)
    if args.shunt_b is not None:
        c_q = 1 + 2 * ps.k_q * args.shunt_b
        if args.cq is not None and not np.isclose(c_q, args.cq):
            raise ValidationError("--cq and --shunt-b disagree")
        ps = replace(ps, c_q=c_q)
    ps.inverter()  # validate before computing anything
    return ps


def _emit(args, text: str, sidecar: dict | None = None):
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text)
    if sidecar is not None:
        side = args.out.with_suffix(args.out.suffix + ".json")
        side.write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


def _config_dict(command, cfg) -> dict:
    d = json.loads(json.dumps(asdict(cfg), default=_jsonable))
    d["command"] = command
    return d


def _analyze_params(args, graph, file_params: dict) -> InverterParams:
    """Command-line flags override the file's params block, which overrides the graph shunts."""
    over = {}
    if not args.defaults:
        over = {"k_p": args.kp, "k_q": args.kq, "tau_p": args.taup, "tau_q": args.tauq,
                "c_q": args.cq, "shunt_b": args.shunt_b, "alpha": args.alpha}
    merged = dict(file_params)
    if not {"shunt_b", "c_q"} & set(merged) and np.any(graph.shunt_b != 0):
        merged["shunt_b"] = graph.shunt_b.tolist()
    # a flag for one of the two shunt representations replaces both file entries
    if over.get("c_q") is not None:
        merged.pop("shunt_b", None)
    if over.get("shunt_b") is not None:
        merged.pop("c_q", None)
    return params_from_dict(merged, **over)


def _cmd_analyze(args) -> int:
    graph, file_params = load_network(args.network)
    record = analyze(graph, _analyze_params(args, graph, file_params))
    record["network_file"] = str(args.network)
    record["version"] = __version__
    _emit(args, json.dumps(record, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return EXIT_OK


def _cmd_scaling(args) -> int:
    n_values = (args.n,) if args.n is not None else args.n_range
    if min(n_values) < 2:
        raise ValidationError("network sizes must be >= 2")
    cfg = ScalingConfig(topologies=args.topology, n_values=tuple(n_values),
                        b_range=tuple(args.b_range), params=_param_set(args, FIG2_PARAMS),
                        seed=_resolve_seed(args))
    columns, rows, _ = scaling_sweep(cfg)
    config = _config_dict("scaling-sweep", cfg)
    _emit(args, render_csv(columns, rows, config), {"config": config})
    return EXIT_OK


def _cmd_transient(args) -> int:
    if len(args.topology) != 2:
        raise ValidationError("transient compares exactly two topologies")
    cfg = TransientConfig(topologies=args.topology, n=args.n, susceptance=args.b,
                          params=_param_set(args, FIG3_PARAMS), horizon=args.horizon, dt=args.dt,
                          stride=args.stride, noise=args.noise, seed=_resolve_seed(args))
    columns, rows, extra = transient(cfg)
    config = _config_dict("transient", cfg)
    _emit(args, render_csv(columns, rows, config), {"config": config, "summary": extra["summary"]})
    if args.out is not None:
        for topo, s in extra["summary"].items():
            log.info("%s: settling %.3f s, cumulative loss %.6g", topo, s["settling_time"], s["cumulative_loss"])
    return EXIT_OK


def _cmd_alpha(args) -> int:
    cfg = AlphaSweepConfig(topologies=args.topology, n=args.n, susceptance=args.b,
                           alphas=tuple(args.alpha_range), params=_param_set(args, FIG4_PARAMS),
                           seed=_resolve_seed(args))
    columns, rows, summary = alpha_sweep(cfg)
    config = _config_dict("alpha-sweep", cfg)
    _emit(args, render_csv(columns, rows, config), {"config": config, "summary": summary})
    return EXIT_OK


COMMANDS = {
    "analyze": _cmd_analyze,
    "scaling-sweep": _cmd_scaling,
    "transient": _cmd_transient,
    "alpha-sweep": _cmd_alpha,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BrokenPipeError:
        # downstream reader (e.g. head) closed the pipe; not an error
        sys.stderr.close()
        return EXIT_OK
