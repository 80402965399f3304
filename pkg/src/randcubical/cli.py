"""Command line interface: ``randcubical <subcommand> [flags]``.

Every flag may also come from ``--config FILE``, a flat ``key = value`` file
using the flag names (``n-list = 8,16,32``); flags given on the command line win.
Exit codes: 0 success, 1 property failure, 2 invalid plan or input.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import experiments as ex
from .cubes import CubicalSet, Window, format_cube, parse_cube
from .errors import CubicalError, PlanError, PropertyViolation
from .filtration import Configuration, betti_curve, build_filtration, persistence_diagram
from .homology import compare_fields, euler_characteristic
from .models import ModelSpec, SampleSeed, sample_configuration


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        # start:stop:count
        a, b, k = text.split(":")
        return tuple(float(x) for x in np.linspace(float(a), float(b), int(k)))
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PlanError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _write(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_cubes(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        return [parse_cube(s) for s in (line.split("#", 1)[0].strip() for line in fh) if s]


def _read_configuration(path: str) -> Configuration:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                cube_s, val_s = line.rsplit(None, 1)
                values[parse_cube(cube_s)] = float(val_s)
    return Configuration.from_mapping(values)


def _plan(a) -> ex.ExperimentPlan:
    model = ModelSpec.parse(a.model)
    n_list = a.n_list if a.n_list is not None else ((a.n,) if a.n is not None else None)
    return ex.ExperimentPlan(
        model=model,
        q=a.q,
        t_grid=a.t_grid if a.t_grid is not None else ex.DEFAULT_T_GRID,
        n_list=n_list,
        samples_per_n=a.samples,
        seed=a.seed,
        output=a.out,
        format=a.format,
        workers=a.workers,
    ).validate()


# --------------------------------------------------------------------------- subcommands


def cmd_sample(a) -> int:
    model = ModelSpec.parse(a.model)
    region = Window(a.n, model.ambient_dim)
    omega = sample_configuration(model, region, SampleSeed(a.seed))
    _write("".join(f"{format_cube(q)} {v!r}\n" for q, v in omega.items()), a.out)
    return 0


def cmd_betti(a) -> int:
    cubes = _read_cubes(a.input)
    if not cubes:
        raise PlanError("empty cube list")
    X = CubicalSet.closure(cubes) if a.close else CubicalSet(cubes)
    b2, bq, alarm = compare_fields(X)
    values = {"rational": bq, "gf2": b2}[a.field]
    rows = [(k, b) for k, b in enumerate(values)] + [("euler", euler_characteristic(X))]
    _write(_csv(("k", "beta_k"), rows), a.out)
    if alarm:
        print(f"warning: GF(2) {b2.values} and Q {bq.values} Betti numbers differ", file=sys.stderr)
    return 0


def cmd_persist(a) -> int:
    omega = _read_configuration(a.input)
    n = a.window_n if a.window_n is not None else omega.region.n - 1
    F = build_filtration(omega, Window(n, omega.ambient_dim))
    D = persistence_diagram(F, a.q)
    B = betti_curve(F, a.q)
    diagram = _csv(("birth", "death"), [(b, d) for b, d in D.intervals])
    curve = _csv(("t", "beta"), zip(B.times.tolist(), B.values.tolist()))
    if a.out:
        _write(diagram, a.out)
        _write(curve, a.curve_out or a.out + ".curve.csv")
    else:
        _write(diagram + "\n" + curve, None)
    return 0


def cmd_lln(a) -> int:
    res = ex.run_lln(_plan(a))
    ex.emit(res, a.format, a.out) if a.out else _write(ex.render(res, a.format), None)
    return 0


def cmd_lifetime_lln(a) -> int:
    res = ex.run_lifetime_lln(_plan(a))
    ex.emit(res, a.format, a.out) if a.out else _write(ex.render(res, a.format), None)
    return 0


def cmd_clt(a) -> int:
    target = "lifetime" if a.lifetime else a.t
    if target is None:
        raise PlanError("clt needs --t or --lifetime")
    res = ex.run_clt(_plan(a), target)
    ex.emit(res, a.format, a.out) if a.out else _write(ex.render(res, a.format), None)
    return 0


def cmd_positivity(a) -> int:
    if a.t is None:
        raise PlanError("positivity needs --t")
    model = ModelSpec.parse(a.model)
    res = ex.estimate_positivity(model, a.q, a.t, a.K, a.samples, a.n if a.n is not None else 16, a.seed)
    ex.emit(res, a.format, a.out) if a.out else _write(ex.render(res, a.format), None)
    return 0


def cmd_checks(a) -> int:
    model = ModelSpec.parse(a.model) if a.model else None
    lines = []
    ok = True
    if a.check in ("lemmas", "all"):
        rep = ex.check_lemma_bounds(a.trials, a.seed)
        lines.append(ex.render(rep, a.format))
        ok &= rep.passed
    if a.check in ("resampling", "all"):
        m = model or ModelSpec.uniform(2)
        rep = ex.check_resampling_bound(m, Window(a.n or 3, m.ambient_dim), a.trials, a.seed)
        lines.append(ex.render(rep, a.format))
        ok &= rep.passed
    if a.check in ("stabilization", "all"):
        m = model or ModelSpec.uniform(2)
        n_list = a.n_list or tuple(range(2, 9))
        t = 0.5 if a.t is None else a.t
        freq, reports = ex.stabilization_frequency(m, n_list, a.trials, a.seed, a.q, t)
        rows = [(i, r.stable_from, int(r.tail_constant), " ".join(map(str, r.differences)))
                for i, r in enumerate(reports)]
        lines.append(_csv(("pair", "stable_from", "tail_constant", "differences"), rows))
        lines.append(f"# tail-constant fraction {freq!r}\n")
        ok &= freq >= a.min_fraction
    _write("".join(lines), a.out)
    return 0 if ok else 1


# --------------------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, model_required=True):
    p.add_argument("--config", help="key = value file with default flag values")
    p.add_argument("--model", required=False, default=None,
                   help="e.g. bernoulli:d=3,k=2 | uniform:d=2 | costafarber:d=2,p=1,0.5,0.25")
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--t-grid", type=_floats, default=None, help="comma list or start:stop:count")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--n-list", type=_ints, default=None)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(_model_required=model_required)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randcubical", description="Random cubical sets: homology and Monte Carlo checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="dump a sampled configuration as 'cube value' lines")
    _common(p)
    p.set_defaults(func=cmd_sample, n=2)

    p = sub.add_parser("betti", help="Betti numbers of a cube-list file")
    _common(p, model_required=False)
    p.add_argument("input")
    p.add_argument("--field", choices=("rational", "gf2"), default="rational")
    p.add_argument("--close", action="store_true", help="take the face closure of the input cubes")
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("persist", help="persistence diagram and Betti curve of a configuration file")
    _common(p, model_required=False)
    p.add_argument("input")
    p.add_argument("--window-n", type=int, default=None)
    p.add_argument("--curve-out", default=None)
    p.set_defaults(func=cmd_persist)

    for name, fn in (("lln", cmd_lln), ("lifetime-lln", cmd_lifetime_lln)):
        p = sub.add_parser(name, help="normalized Betti curves across window sizes" if name == "lln"
                           else "normalized lifetime sums across window sizes")
        _common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("clt", help="variance and normality of Betti numbers or lifetime sums")
    _common(p)
    p.add_argument("--lifetime", action="store_true", help="use the lifetime sum instead of beta_q(t)")
    p.set_defaults(func=cmd_clt, samples=200)

    p = sub.add_parser("positivity", help="count isolated hollow cubes and bound the limit from below")
    _common(p)
    p.add_argument("--K", type=int, default=2)
    p.set_defaults(func=cmd_positivity, samples=100)

    p = sub.add_parser("checks", help="lemma bounds, resampling bound, stabilization")
    _common(p, model_required=False)
    p.add_argument("--check", choices=("lemmas", "resampling", "stabilization", "all"), default="all")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--min-fraction", type=float, default=0.95)
    p.set_defaults(func=cmd_checks)
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # re-parse with the file's values as defaults so explicit flags win
        sub = parser._subparsers._group_actions[0].choices[args.command]
        conf = _read_config(args.config)
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, val in conf.items():
            act = known.get(key)
            if act is None:
                raise PlanError(f"unknown config key {key!r}")
            if act.const is not None and act.nargs == 0:
                defaults[key] = val.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = act.type(val) if act.type else val
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args._model_required and not args.model:
        raise PlanError(f"{args.command} needs --model")
    return args


def main(argv=None) -> int:
    try:
        args = _parse(argv)
        return args.func(args)
    except PropertyViolation as exc:
        print(f"property failure: {exc}", file=sys.stderr)
        return 1
    except (CubicalError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
