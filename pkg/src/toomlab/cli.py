"""Command-line entry point.

Every run writes its resolved configuration next to the numbers: a ``# {json}``
first line for CSV and a ``metadata`` key for JSON. ``toomlab replay FILE``
re-runs a configuration taken from such a file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .errors import ConfigError, Infeasible, IoError, ToomlabError

STOCHASTIC = {"simulate", "sample"}
NAMED_POLARS = {
    "toom": ((-3, 0), (0, -3), (3, 3)),
    "triangular": ((-1, -1), (2, -1), (-1, 2)),
    "coop": ((1, 1), (-1, -1)),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _num(text: str):
    from .automaton import parse_number

    try:
        return parse_number(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "square"):
        return f"sqrt({x.square})"
    if hasattr(x, "item"):
        return x.item()
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toomlab", description="Monotone probabilistic cellular automata toolkit.")
    parser.add_argument("--version", action="version", version=f"toomlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt):
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        p.add_argument("--threads", type=int, default=None,
                       help="worker count (default from TOOMLAB_THREADS, else 1)")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("simulate", help="density of the maximal trajectory on a torus")
    p.add_argument("--model", required=True)
    p.add_argument("--r", type=_num, default=None, help="intrinsic-randomness weight")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--L", type=int, default=64)
    p.add_argument("--T", type=int, default=500)
    p.add_argument("--replicas", type=int, default=4)
    common(p, "csv")

    p = sub.add_parser("speeds", help="exact edge speeds for a polar function")
    p.add_argument("--model", required=True)
    p.add_argument("--r", type=_num, default=None)
    p.add_argument("--polar", required=True,
                   help=f"one of {sorted(NAMED_POLARS)} or a JSON list of forms")
    p.add_argument("--drift", action="store_true", help="also search for a drift")
    common(p, "json")

    p = sub.add_parser("certify", help="Peierls-bound certificate for a preset")
    p.add_argument("--preset", required=True)
    p.add_argument("--model", default=None, help="must match the preset's model if given")
    p.add_argument("--theta", type=_num, default=None)
    p.add_argument("--phat", type=_num, default=None)
    p.add_argument("--theta-grid", default=None, help="comma-separated grid; enables optimization")
    p.add_argument("--phat-grid", default=None)
    p.add_argument("--p", type=float, default=None, help="also bound the density at this p")
    common(p, "json")

    p = sub.add_parser("sample", help="draw contours from the extension chain")
    p.add_argument("--preset", required=True)
    p.add_argument("--theta", type=_num, default=None)
    p.add_argument("--phat", type=_num, default=None, help="chain parameter p-hat")
    p.add_argument("--pcirc", type=_num, default=None, help="chain parameter p-circ")
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--top", type=int, default=50, help="number of contours listed")
    common(p, "json")

    p = sub.add_parser("enumerate", help="partial Peierls sums by contour size")
    p.add_argument("--preset", required=True)
    p.add_argument("--theta", type=_num, default=None)
    p.add_argument("--phat", type=_num, default=None)
    p.add_argument("--p", type=_num, required=True)
    p.add_argument("--cap", type=int, default=6)
    common(p, "csv")

    p = sub.add_parser("diverge", help="growth of the diverging cycle family")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--nmax", type=int, default=2000)
    common(p, "csv")

    p = sub.add_parser("replay", help="re-run the configuration stored in an output file")
    p.add_argument("file")
    p.add_argument("--out", default="-")
    return parser


# -- subcommands ---------------------------------------------------------------

def _threads(cfg) -> int:
    from .sim import default_threads

    n = cfg.get("threads") or default_threads()
    if n < 1:
        raise ConfigError("--threads must be at least 1")
    return n


def _spec(cfg):
    from .certify import PRESET_DEFAULTS, PRESETS

    name = cfg["preset"]
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    theta, phat = PRESET_DEFAULTS[name]
    if cfg.get("theta") is not None:
        theta = cfg["theta"]
    if cfg.get("phat") is not None:
        phat = cfg["phat"]
    cfg["theta"], cfg["phat"] = theta, phat
    return PRESETS[name](theta, phat)


def run_simulate(cfg):
    from .automaton import load_model
    from .sim import run_max_trajectory

    family = load_model(cfg["model"], cfg.get("r"))
    rep = run_max_trajectory(family, cfg["p"], cfg["L"], cfg["T"], cfg["replicas"], cfg["seed"],
                             _threads(cfg))
    summary = {"final_mean": rep.final_mean, "final_stderr": rep.final_stderr}
    return summary, rep.rows()


def run_speeds(cfg):
    from .automaton import load_model
    from .geometry import SpatialPolar, check_shrinker, check_worst_case_condition, find_drift, speed_table

    family = load_model(cfg["model"], cfg.get("r"))
    spec = cfg["polar"]
    if spec in NAMED_POLARS:
        forms = NAMED_POLARS[spec]
    else:
        try:
            forms = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--polar is neither a name nor JSON: {exc}") from exc
    polar = SpatialPolar(tuple(tuple(_num(str(c)) for c in f) for f in forms))
    if polar.dimension != family.dimension:
        raise ConfigError("polar and model dimensions differ")
    table = speed_table(family, polar)
    wc = check_worst_case_condition(family, polar)
    summary = {
        "forms": [[str(c) for c in f.coeffs] for f in polar],
        "maps": [phi.name for phi in family.maps],
        "speeds": [[str(e) for e in row] for row in table],
        "worst_case_sum": str(wc.total),
        "worst_case_holds": wc.holds,
        "shrinker": [check_shrinker(phi, polar) for phi in family.maps],
    }
    if cfg.get("drift"):
        try:
            d = find_drift(family, polar)
        except Infeasible as exc:
            summary["drift"] = {"feasible": False, "reason": str(exc)}
        else:
            summary["drift"] = {"feasible": True, "directions": list(d.indices),
                                "drift": [str(c) for c in d.drift],
                                "compensated_speeds": [[str(e) for e in row] for row in d.speeds]}
    rows = [{"direction": s, "map": family.maps[k].name or str(k + 1), "speed": str(e)}
            for s, row in enumerate(table) for k, e in enumerate(row)]
    return summary, rows


def run_certify(cfg):
    from .automaton import builtin_model
    from .certify import PRESETS, certificate, optimize, rho_lower_bound

    spec = _spec(cfg)
    if cfg.get("model") is not None:
        if builtin_model(cfg["model"]).name != spec.family.name:
            raise ConfigError(f"preset {cfg['preset']!r} does not use model {cfg['model']!r}")
    if cfg.get("theta_grid") or cfg.get("phat_grid"):
        tg = [_num(x) for x in (cfg.get("theta_grid") or str(cfg["theta"])).split(",")]
        pg = [_num(x) for x in (cfg.get("phat_grid") or str(cfg["phat"])).split(",")]
        report = optimize(PRESETS[cfg["preset"]], tg, pg)
    else:
        report = certificate(spec)
    out = report.to_json()
    if cfg.get("p") is not None:
        out["rho_lower_bound"] = rho_lower_bound(report, cfg["p"])
    return out, None


def run_sample(cfg):
    from .contours import Cemetery, nu_value, sample_many

    spec = _spec(cfg)
    phat = cfg["phat"]
    pcirc = cfg.get("pcirc")
    if pcirc is None:
        from .certify import certificate

        report = certificate(spec)
        if report.failed:
            raise ConfigError("the preset's certificate failed; pass --pcirc explicitly")
        pcirc = report.p_circ
        cfg["pcirc"] = pcirc
    counts = sample_many(spec, phat, pcirc, cfg["runs"], cfg["seed"], cfg["max_steps"],
                         threads=_threads(cfg))
    runs = cfg["runs"]
    cemetery = {c.cause: n for c, n in counts.items() if isinstance(c, Cemetery)}
    contours = sorted(((c, n) for c, n in counts.items() if not isinstance(c, Cemetery)),
                      key=lambda cn: (-cn[1], json.dumps(cn[0].to_json(), sort_keys=True)))
    rows = [{"count": n, "frequency": n / runs, "nu": float(nu_value(c, spec, phat, pcirc)),
             "n_vertices": c.n_vertices, "contour": json.dumps(c.to_json(), sort_keys=True)}
            for c, n in contours[:cfg["top"]]]
    summary = {"runs": runs, "distinct_contours": len(contours), "cemetery": cemetery}
    return summary, rows


def run_enumerate(cfg):
    from .contours import partial_peierls_sum

    spec = _spec(cfg)
    sums = partial_peierls_sum(spec, cfg["cap"], cfg["p"])
    return {"cap": cfg["cap"]}, [{"cap": c, "partial_sum": _jsonable(s), "partial_sum_float": float(s)}
                                 for c, s in enumerate(sums)]


def run_diverge(cfg):
    from .divergence import growth_and_verdict

    rep = growth_and_verdict(cfg["p"], cfg["r"], cfg["nmax"])
    summary = {"verdict": rep.verdict, "rate": rep.ld_rate, "exact_rate": rep.exact_rate,
               "n0": rep.n0, "nth_root_at_nmax": rep.nth_roots[-1]}
    return summary, rep.rows()


HANDLERS = {
    "simulate": run_simulate,
    "speeds": run_speeds,
    "certify": run_certify,
    "sample": run_sample,
    "enumerate": run_enumerate,
    "diverge": run_diverge,
}


# -- output --------------------------------------------------------------------

def _metadata(cfg) -> dict:
    return {"tool": "toomlab", "version": __version__, "config": _jsonable(cfg), "seed": cfg.get("seed")}


def render(cfg, summary, rows) -> str:
    meta = _metadata(cfg)
    if cfg["format"] == "json":
        body = {"metadata": meta, "result": _jsonable(summary)}
        if rows is not None:
            body["rows"] = _jsonable(rows)
        return json.dumps(body, indent=2, sort_keys=True) + "\n"
    if rows is None:
        raise ConfigError(f"{cfg['command']} produces a report; use --format json")
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    if summary:
        buf.write("# " + json.dumps({"result": _jsonable(summary)}, sort_keys=True) + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(_jsonable(rows))
    return buf.getvalue()


def _resolve(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "out"}
    cmd = cfg["command"]
    if cmd in STOCHASTIC and cfg.get("seed") is None:
        if os.environ.get("CI"):
            raise ConfigError(f"--seed is required for {cmd} when CI is set")
        cfg["seed"] = 0
    return cfg


def _load_replay(path: str) -> dict:
    try:
        text = open(path).read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if text.startswith("# "):
            meta = json.loads(text.splitlines()[0][2:])
        else:
            meta = json.loads(text)["metadata"]
        cfg = meta["config"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path} carries no run metadata") from exc
    for key in ("theta", "phat", "pcirc", "r", "p"):
        if isinstance(cfg.get(key), str):
            cfg[key] = _num(cfg[key])
    return cfg


def dispatch(cfg: dict, out: str = "-") -> int:
    if cfg["command"] not in HANDLERS:
        raise ConfigError(f"unknown subcommand {cfg['command']!r}")
    summary, rows = HANDLERS[cfg["command"]](cfg)
    text = render(cfg, summary, rows)
    if out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(str(exc)) from exc
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "replay":
            return dispatch(_load_replay(args.file), args.out)
        cfg = _resolve(args)
        return dispatch(cfg, args.out)
    except ToomlabError as exc:
        record = {"error": exc.code, "type": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(record) + "\n")
        if isinstance(exc, ConfigError):
            return 2
        return 3 if isinstance(exc, IoError) else 1


if __name__ == "__main__":
    sys.exit(main())
