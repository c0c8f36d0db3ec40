"""Command-line interface: ``garchmimic <command> [options]``.

Exit codes
----------
0 success; 1 unexpected failure; 2 invalid specification or usage;
3 nonstationary specification; 4 solver nonconvergence; 5 unreadable data;
6 invalid d-vine specification.
"""
import argparse
import json
import os
import sys

import numpy as np

SCHEMA = "garchmimic/1"

EXIT_OK, EXIT_FAIL, EXIT_SPEC, EXIT_NONSTATIONARY = 0, 1, 2, 3
EXIT_NONCONVERGENCE, EXIT_DATA, EXIT_DVINE = 4, 5, 6


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ----------------------------------------------------------------------
# formatting
# ----------------------------------------------------------------------
def fmt(v):
    """Number formatted with 12 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.12g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def write_csv(out, header, rows, meta):
    """Write '#'-prefixed metadata lines, a header and formatted rows."""
    lines = [f"# {k}: {dumps(v)}" for k, v in meta.items()]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    _emit(out, "\n".join(lines) + "\n")


def write_json(out, payload):
    payload = dict(payload)
    payload["schema"] = SCHEMA
    _emit(out, json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")


def _emit(out, text):
    if out in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def read_table(path):
    """Numeric table from a CSV with optional '#' metadata and header line.

    Returns
    -------
    names : list of str or None
    data : numpy.ndarray of shape (rows, cols)
    """
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_DATA) from exc
    if not lines:
        raise CliError(f"{path} contains no data", EXIT_DATA)
    names = None
    first = [t.strip() for t in lines[0].split(",")]
    try:
        [float(t) for t in first]
    except ValueError:
        names, lines = first, lines[1:]
    try:
        data = np.array([[float(t) for t in ln.split(",")] for ln in lines], dtype=float)
    except ValueError as exc:
        raise CliError(f"non-numeric data in {path}: {exc}", EXIT_DATA) from exc
    if data.ndim != 2 or data.size == 0 or not np.all(np.isfinite(data)):
        raise CliError(f"{path} must hold a finite rectangular numeric table", EXIT_DATA)
    return names, data


# ----------------------------------------------------------------------
# shared option groups
# ----------------------------------------------------------------------
def _add_spec_flags(p):
    g = p.add_argument_group("process specification")
    g.add_argument("--alpha0", type=float, default=0.4)
    g.add_argument("--alpha1", type=float, default=0.6)
    g.add_argument("--beta1", type=float, default=0.0)
    g.add_argument("--gamma1", type=float, default=0.0)
    g.add_argument("--phi", type=float, default=0.0, help="AR(1) mean coefficient")
    g.add_argument("--dist", choices=["gauss", "t", "skewt"], default="gauss")
    g.add_argument("--nu", type=float, default=4.0, help="degrees of freedom")
    g.add_argument("--lam", type=float, default=0.8, help="skewness of the skew-t")


def _spec_from_args(a):
    from .garch import GarchSpec, gaussian, skew_t, student_t
    try:
        if a.dist == "gauss":
            inn = gaussian()
        elif a.dist == "t":
            inn = student_t(a.nu)
        else:
            inn = skew_t(a.nu, a.lam)
        return GarchSpec(a.alpha0, a.alpha1, a.beta1, a.gamma1, a.phi, inn)
    except ValueError as exc:
        raise CliError(f"invalid specification: {exc}", EXIT_SPEC) from exc


def _add_out(p):
    p.add_argument("--out", "-o", default="-", help="output path ('-' for stdout)")


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_simulate(a):
    from .garch import NonStationaryError, SimulationOverflow, check_stationarity, simulate, tail_index
    spec = _spec_from_args(a)
    st = check_stationarity(spec)
    if not st:
        raise CliError(f"specification is not strictly stationary "
                       f"(log moment {st.log_moment:.6g})", EXIT_NONSTATIONARY)
    try:
        res = simulate(spec, a.n, burn_in=a.burn_in, seed=a.seed)
    except NonStationaryError as exc:
        raise CliError(str(exc), EXIT_NONSTATIONARY) from exc
    except SimulationOverflow as exc:
        raise CliError(str(exc), EXIT_NONCONVERGENCE) from exc
    try:
        zeta = tail_index(spec)
    except Exception:  # noqa: BLE001 (metadata only)
        zeta = None
    meta = {"schema": SCHEMA, "command": "simulate", "spec": spec.to_dict(), "seed": a.seed,
            "n": a.n, "burn_in": a.burn_in, "stationary": bool(st),
            "log_moment": st.log_moment, "tail_index": zeta}
    rows = zip(range(1, a.n + 1), res.x, res.sigma)
    write_csv(a.out, ["t", "x", "sigma"], rows, meta)
    return EXIT_OK


def cmd_copula_grid(a):
    from ._numerics import ConvergenceError
    from .garch import NonStationaryError
    from .implied import ImpliedModel, independence_distance, symmetry_report
    spec = _spec_from_args(a)
    try:
        model = ImpliedModel(spec, n_sim=a.n_sim, seed=a.seed)
        if a.kind == "c1":
            grid = model.c1_grid(a.resolution or 200)
        else:
            grid = model.c2_grid(a.w, a.resolution or 100)
    except NonStationaryError as exc:
        raise CliError(str(exc), EXIT_NONSTATIONARY) from exc
    except ConvergenceError as exc:
        raise CliError(f"solver did not converge: {exc}", EXIT_NONCONVERGENCE) from exc
    except ValueError as exc:
        raise CliError(f"invalid specification: {exc}", EXIT_SPEC) from exc
    dist = independence_distance(grid)
    meta = {"schema": SCHEMA, "command": "copula-grid", "spec": spec.to_dict(), "kind": a.kind,
            "resolution": grid.m, "seed": a.seed,
            ("D1" if a.kind == "c1" else "D2"): dist, "symmetry": symmetry_report(grid)}
    if a.kind == "c2":
        meta["w"] = a.w
    u = grid.u
    rows = ((u[i], u[j], grid.values[i, j]) for i in range(grid.m) for j in range(grid.m))
    write_csv(a.out, ["u", "v", "c"], rows, meta)
    return EXIT_OK


def _series(a):
    names, data = read_table(a.data)
    if a.column is not None:
        if names is not None and a.column in names:
            idx = names.index(a.column)
        else:
            try:
                idx = int(a.column)
            except ValueError:
                raise CliError(f"no column {a.column!r} in {a.data}", EXIT_DATA) from None
    elif names is not None and "x" in names:
        idx = names.index("x")
    elif data.shape[1] == 1:
        idx = 0
    else:
        raise CliError("several columns present; choose one with --column", EXIT_DATA)
    if not 0 <= idx < data.shape[1]:
        raise CliError(f"column index {idx} out of range", EXIT_DATA)
    return data[:, idx]


def cmd_fit(a):
    from .fit import compare_models, fit_pml, pseudo_observations, table_zoo, template
    x = _series(a)
    try:
        sample = pseudo_observations(x, a.lag)
    except ValueError as exc:
        raise CliError(f"unusable data: {exc}", EXIT_DATA) from exc
    try:
        if a.zoo:
            zoo = table_zoo(a.zoo)
        else:
            zoo = {n: template(n) for n in a.template}
    except ValueError as exc:
        raise CliError(str(exc), EXIT_SPEC) from exc
    if len(zoo) == 1:
        r = fit_pml(sample, next(iter(zoo.values())))
        rows = [(r, 0.0)]
    else:
        rows = compare_models(sample, zoo, max_workers=a.threads)
    if a.format == "json":
        write_json(a.out, {"command": "fit", "lag": a.lag, "n_pairs": len(sample),
                           "results": [dict(r.to_dict(), delta_aic=d) for r, d in rows]})
        return EXIT_OK
    meta = {"schema": SCHEMA, "command": "fit", "data": os.path.basename(a.data), "lag": a.lag,
            "n_pairs": len(sample)}
    failed = {r.name: r.error for r, _ in rows if r.error}
    if failed:
        meta["failures"] = failed
    out = [(r.name, r.n_params, r.loglik, r.aic, d,
            ";".join(f"{k}={fmt(v)}" for k, v in r.params.items())) for r, d in rows]
    write_csv(a.out, ["name", "p", "loglik", "aic", "delta_aic", "params"], out, meta)
    return EXIT_OK


def _load_dvine(path):
    from .dvine import DVineSpec
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read d-vine spec {path}: {exc}", EXIT_DVINE) from exc
    try:
        return DVineSpec.from_dict(doc.get("dvine", doc))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"invalid d-vine spec: {exc}", EXIT_DVINE) from exc


def cmd_dvine_build(a):
    from .dvine import build_garch_mimic, kpacf_arma11
    try:
        alpha, movavg = (float(t) for t in a.arma.split(","))
    except ValueError:
        raise CliError("--arma expects two comma-separated numbers", EXIT_DVINE) from None
    try:
        taus = kpacf_arma11(alpha, movavg, a.truncation)
        spec = build_garch_mimic(taus, a.family, a.delta1, a.delta2, a.truncation)
    except ValueError as exc:
        raise CliError(f"invalid d-vine spec: {exc}", EXIT_DVINE) from exc
    write_json(a.out, {"command": "dvine build-mimic", "arma": [alpha, movavg],
                       "family": a.family, "kendall_taus": list(taus), "dvine": spec.to_dict()})
    return EXIT_OK


def cmd_dvine_simulate(a):
    from scipy import stats
    from .dvine import simulate
    spec = _load_dvine(a.spec)
    u = simulate(spec, a.n, seed=a.seed, n_paths=a.paths)
    u = np.atleast_2d(u)
    ks = stats.kstest(u.ravel(), "uniform")
    meta = {"schema": SCHEMA, "command": "dvine simulate", "seed": a.seed, "n": a.n,
            "paths": u.shape[0], "truncation": spec.truncation,
            "ks_uniform": {"statistic": ks.statistic, "pvalue": ks.pvalue}}
    header = ["t"] + (["u"] if u.shape[0] == 1 else [f"u{i + 1}" for i in range(u.shape[0])])
    rows = ((t + 1, *u[:, t]) for t in range(a.n))
    write_csv(a.out, header, rows, meta)
    return EXIT_OK


def cmd_dvine_density(a):
    from .dvine import log_density
    spec = _load_dvine(a.spec)
    _, data = read_table(a.data)
    if np.any((data <= 0) | (data >= 1)):
        raise CliError("d-vine density needs values strictly inside (0, 1)", EXIT_DATA)
    if data.shape[1] < 2:
        raise CliError("each row must hold a vector of length at least 2", EXIT_DATA)
    lp = log_density(spec, data)
    meta = {"schema": SCHEMA, "command": "dvine density", "rows": data.shape[0],
            "truncation": spec.truncation}
    write_csv(a.out, ["row", "log_density"], zip(range(1, len(lp) + 1), lp), meta)
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
def _threads_default():
    env = os.environ.get("GARCHMIMIC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults (flags take precedence)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $GARCHMIMIC_THREADS or all cores)")

    parser = argparse.ArgumentParser(prog="garchmimic", parents=[common],
                                     description="Serial-dependence copulas of GARCH-type processes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a GARCH-type process")
    _add_spec_flags(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    _add_out(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("copula-grid", parents=[common], help="implied copula density on a grid")
    _add_spec_flags(p)
    p.add_argument("--kind", choices=["c1", "c2"], default="c1")
    p.add_argument("--w", type=float, default=0.5, help="conditioning value for c2")
    p.add_argument("--resolution", type=int, default=None,
                   help="grid points per axis (default 200 for c1, 100 for c2)")
    p.add_argument("--n-sim", type=int, default=2_000_000,
                   help="simulation length for the GARCH volatility density")
    p.add_argument("--seed", type=int, default=20240101)
    _add_out(p)
    p.set_defaults(func=cmd_copula_grid)

    p = sub.add_parser("fit", parents=[common], help="PML fit and AIC comparison")
    p.add_argument("data", help="CSV file holding the series")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--zoo", choices=["table1", "table2", "table3"])
    g.add_argument("--template", action="append", help="model name; repeat for several")
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--column", default=None, help="column name or index (default 'x')")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_out(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("dvine", parents=[common], help="d-vine copula processes")
    dsub = p.add_subparsers(dest="dvine_command", required=True)
    q = dsub.add_parser("build-mimic", parents=[common],
                        help="d-vine with ARMA(1,1) Kendall partial autocorrelations")
    q.add_argument("--arma", required=True, help="autoregressive,moving-average coefficients")
    q.add_argument("--family", choices=["joe", "clayton180", "ast"], default="joe")
    q.add_argument("--delta1", type=float, default=0.5)
    q.add_argument("--delta2", type=float, default=0.5)
    q.add_argument("--truncation", type=int, default=30)
    _add_out(q)
    q.set_defaults(func=cmd_dvine_build)
    q = dsub.add_parser("simulate", parents=[common], help="simulate from a d-vine spec")
    q.add_argument("--spec", required=True, help="JSON d-vine specification")
    q.add_argument("--n", type=int, default=1000)
    q.add_argument("--paths", type=int, default=None, help="number of independent paths")
    q.add_argument("--seed", type=int, default=1)
    _add_out(q)
    q.set_defaults(func=cmd_dvine_simulate)
    q = dsub.add_parser("density", parents=[common], help="log-density of each row vector")
    q.add_argument("data", help="CSV file, one vector per row")
    q.add_argument("--spec", required=True, help="JSON d-vine specification")
    _add_out(q)
    q.set_defaults(func=cmd_dvine_density)
    return parser


def _subparser_for(parser, argv):
    """The innermost subparser selected by ``argv`` (for config defaults)."""
    node = parser
    for tok in argv:
        actions = [a for a in node._actions if isinstance(a, argparse._SubParsersAction)]
        if not actions or tok not in actions[0].choices:
            continue
        node = actions[0].choices[tok]
    return node


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    config_path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif tok.startswith("--config="):
            config_path = tok.split("=", 1)[1]
    if config_path:
        try:
            with open(config_path) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {config_path}: {exc}", EXIT_SPEC) from exc
        if not isinstance(config, dict):
            raise CliError("config file must hold a JSON object", EXIT_SPEC)
        target = _subparser_for(parser, argv)
        target.set_defaults(**{k.replace("-", "_"): v for k, v in config.items()})
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = _threads_default()
    if args.threads < 1:
        raise CliError("--threads must be positive", EXIT_SPEC)
    return args


def main(argv=None):
    try:
        args = parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"garchmimic: error: {exc}", file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
