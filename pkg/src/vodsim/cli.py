"""Command-line entry point: ``vodsim <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import analytics
from .admission import CascadeMode, OnReject, Scan
from .core import (
    DEFAULT_COLUMN_TOLERANCE,
    ConfigurationError,
    ControlMatrix,
    PolicyVector,
    load_table1,
    read_matrix,
    select_policy_vector,
    validate_control_matrix,
    write_matrix,
)
from .engine import (
    DEFAULT_POLICY_COLUMN,
    SWEEP_AXES,
    HoldingDistribution,
    Scenario,
    run,
    sweep,
)
from .metrics import blocking_probability, throughput, traffic_intensity
from .reporting import F5_F8, F9_F10, F11, F12, emit_plot_series, write_results_csv
from .traffic import RateMapping, cluster_rates, generate_matrix

EXIT_OK, EXIT_INVALID, EXIT_CONFIG = 0, 1, 2

_FLOAT_KEYS = {
    "min_rate", "max_rate", "playback_rate", "scale", "rate_scale",
    "population_multiplier", "holding_time", "sim_time", "warmup",
}
_INT_KEYS = {"sections", "ports_per_section", "clusters", "seed", "matrix_seed", "matrix_columns", "jobs"}
_STR_KEYS = {"matrix", "out", "axis", "values", "scenario_id", "cascade_scan",
             "on_policy_reject", "holding_distribution", "capacities", "policy_column"}
_BOOL_KEYS = {"no_policy", "paired"}
CONFIG_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _BOOL_KEYS


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _INT_KEYS:
                out[key] = int(value)
            elif key in _BOOL_KEYS:
                if value.lower() not in ("true", "false", "yes", "no", "1", "0"):
                    raise ValueError(value)
                out[key] = value.lower() in ("true", "yes", "1")
            else:
                out[key] = value
        except ValueError:
            raise ConfigurationError(f"line {lineno}: bad value {value!r} for {key}") from None
    return out


@dataclass
class RunConfig:
    scenario: Scenario
    matrix: ControlMatrix
    out: Path
    axis: str | None = None
    values: list = field(default_factory=list)
    jobs: int = 1
    paired: bool = False


def _int_list(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"bad {what} list {text!r}") from None


def _float_list(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"bad {what} list {text!r}") from None


def _enum(cls, value: str, key: str):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigurationError(f"bad {key} {value!r}; choose from {choices}") from None


def _sweep_values(axis: str, text: str) -> list:
    vals = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if axis == "policy-column" and tok.lower() == "none":
            vals.append(None)
            continue
        try:
            vals.append(int(tok) if axis in ("policy-column", "seed") else float(tok))
        except ValueError:
            raise ConfigurationError(f"bad value {tok!r} for axis {axis}") from None
    return vals


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file and command-line flags."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc.strerror}") from None
        cfg = parse_config(text)
    for key in ("seed", "matrix", "out", "axis", "values", "jobs"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "policy_column", None) is not None:
        cfg["policy_column"] = str(args.policy_column)
    if getattr(args, "no_policy", False):
        cfg["no_policy"] = True
    if getattr(args, "paired", False):
        cfg["paired"] = True

    if "capacities" in cfg:
        capacities = tuple(_int_list(cfg["capacities"], "capacities"))
    else:
        capacities = (cfg.get("ports_per_section", 10),) * cfg.get("sections", 20)
    if not capacities or any(c < 0 for c in capacities):
        raise ConfigurationError(f"invalid capacities {capacities}")
    k = len(capacities)

    if "matrix" in cfg:
        matrix = read_matrix(cfg["matrix"])
    elif "matrix_seed" in cfg:
        matrix = generate_matrix(k, cfg.get("matrix_columns", 10), cfg["matrix_seed"])
    else:
        matrix = load_table1()

    column_text = str(cfg.get("policy_column", DEFAULT_POLICY_COLUMN))
    if cfg.get("no_policy") or column_text.lower() == "none":
        policy, column = None, None
    else:
        try:
            column = int(column_text)
        except ValueError:
            raise ConfigurationError(f"bad policy_column {column_text!r}") from None
        if matrix.k != k:
            raise ConfigurationError(f"matrix has {matrix.k} rows but there are {k} sections")
        policy = select_policy_vector(matrix, column)

    clusters = cfg.get("clusters", k)
    ladder = cluster_rates(cfg.get("min_rate", 1.0), cfg.get("max_rate", 10.5), clusters)
    scenario = Scenario(
        capacities=capacities,
        policy=policy,
        policy_column=column,
        cascade=CascadeMode(
            _enum(Scan, cfg.get("cascade_scan", "wrap"), "cascade_scan"),
            _enum(OnReject, cfg.get("on_policy_reject", "continue"), "on_policy_reject"),
        ),
        ladder=ladder,
        mapping=RateMapping(cfg.get("playback_rate", 4.0), cfg.get("scale", 1.0)),
        rate_scale=cfg.get("rate_scale", 1.0),
        population_multiplier=cfg.get("population_multiplier", 1.0),
        holding_time=cfg.get("holding_time", 140.0),
        holding_distribution=_enum(
            HoldingDistribution, cfg.get("holding_distribution", "deterministic"), "holding_distribution"
        ),
        sim_time=cfg.get("sim_time", 460.0),
        warmup=cfg.get("warmup", 0.0),
        seed=cfg.get("seed", 42),
        scenario_id=cfg.get("scenario_id", "run"),
    )
    scenario.validate()

    axis = cfg.get("axis")
    values = []
    if axis is not None:
        if axis not in SWEEP_AXES:
            raise ConfigurationError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
        values = _sweep_values(axis, cfg.get("values", ""))
    return RunConfig(
        scenario=scenario,
        matrix=matrix,
        out=Path(cfg.get("out", "out")),
        axis=axis,
        values=values,
        jobs=cfg.get("jobs", 1),
        paired=cfg.get("paired", False),
    )


def _kv(key, value) -> str:
    if value is None:
        value = "NA"
    return f"{key}={value}"


def _out_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {path}: {exc.strerror}") from None
    return path


def cmd_run(args) -> int:
    rc = resolve_config(args)
    report = run(rc.scenario)
    out = _out_dir(rc.out)
    write_results_csv([report], out / "results.csv")
    if report.policy_enabled:
        emit_plot_series([report], F5_F8, out)
    thr = throughput(report)
    print(_kv("arrivals", report.total_arrivals))
    print(_kv("admissions", report.total_admissions))
    print(_kv("blocks_full", report.total_blocks_full))
    print(_kv("blocks_policy", report.total_blocks_policy))
    print(_kv("blocking_prob", blocking_probability(report).overall))
    print(_kv("throughput_fraction", thr.fraction))
    print(_kv("throughput_rate", thr.rate))
    print(_kv("intensity", traffic_intensity(report)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    rc = resolve_config(args)
    if rc.axis is None:
        raise ConfigurationError("sweep needs --axis and --values")
    reports = sweep(rc.scenario, rc.axis, rc.values, matrix=rc.matrix, jobs=rc.jobs)
    if rc.paired and rc.scenario.policy is not None and rc.axis != "policy-column":
        base = replace(rc.scenario, policy=None, policy_column=None)
        reports += sweep(base, rc.axis, rc.values, matrix=rc.matrix, jobs=rc.jobs)
    out = _out_dir(rc.out)
    write_results_csv(reports, out / "results.csv")
    figures = {
        "rate-scale": [F12] + ([F9_F10] if rc.paired else []),
        "population-multiplier": [F11],
        "policy-column": [F5_F8],
        "seed": [],
    }[rc.axis]
    for fig in figures:
        if reports:
            emit_plot_series(reports, fig, out)
    print(_kv("runs", len(reports)))
    print(_kv("results", out / "results.csv"))
    return EXIT_OK


def cmd_gen_matrix(args) -> int:
    matrix = generate_matrix(args.k, args.n, args.seed)
    if args.out:
        write_matrix(matrix, args.out)
    else:
        sys.stdout.write(matrix.to_csv())
    return EXIT_OK


def cmd_validate_matrix(args) -> int:
    matrix = read_matrix(args.path)
    violations = validate_control_matrix(matrix, args.tolerance)
    for v in violations:
        print(v)
    print(_kv("violations", len(violations)))
    return EXIT_INVALID if violations else EXIT_OK


def _emit(pairs, as_csv: bool):
    if as_csv:
        print(",".join(k for k, _ in pairs))
        print(",".join("NA" if v is None else str(v) for _, v in pairs))
    else:
        for k, v in pairs:
            print(_kv(k, v))


def _mode(args) -> CascadeMode:
    return CascadeMode(_enum(Scan, args.scan, "scan"), _enum(OnReject, args.on_reject, "on-reject"))


def cmd_analytic(args) -> int:
    kind = args.analytic
    if kind == "erlang-b":
        pairs = [("blocking", analytics.erlang_b(args.servers, args.load))]
    elif kind == "max-streams":
        pairs = [("streams", analytics.max_streams(args.disk_rate, args.playback_rate))]
    elif kind == "reserved-bw":
        res = analytics.reserved_bandwidth(analytics.ReservedBandwidthParams(
            args.links, args.active, args.burst, args.volume, args.duration,
            tuple(_float_list(args.link_bandwidths or "", "link bandwidth")),
        ))
        pairs = [
            ("reserved_rate", res.rate),
            ("feasible", str(not res.infeasible_links).lower()),
            ("infeasible_links", ";".join(str(j) for j in res.infeasible_links)),
        ]
    elif kind == "cascade":
        avail = _float_list(args.availability, "availability")
        res = analytics.cascade_admit_probability(
            avail, PolicyVector(tuple(_float_list(args.policy, "policy"))), args.start, _mode(args)
        )
        pairs = [(f"step_{j}", p) for j, p in res.steps] + [("total", res.total)]
    else:
        caps = _int_list(args.capacities, "capacities")
        res = analytics.ctmc_blocking(
            caps,
            PolicyVector(tuple(_float_list(args.policy, "policy"))),
            _float_list(args.rates, "rates"),
            args.mu,
            _mode(args),
        )
        pairs = [(f"class_{i}_blocking", b) for i, b in enumerate(res.class_blocking)]
        pairs += [("blocking", res.blocking), ("states", len(res.states)), ("residual", res.residual)]
    _emit(pairs, args.csv)
    return EXIT_OK


def cmd_compare(args) -> int:
    rc = resolve_config(args)
    sc = rc.scenario
    policy = sc.policy if sc.policy is not None else PolicyVector.uniform(len(sc.capacities))
    oracle = analytics.ctmc_blocking(
        sc.capacities, policy, sc.arrival_rates(), 1.0 / sc.holding_time, sc.cascade
    )
    report = run(sc)
    sim = blocking_probability(report)
    print(_kv("holding_distribution", sc.holding_distribution.value))
    for i, (s, o) in enumerate(zip(sim.per_class, oracle.class_blocking)):
        gap = None if s is None else abs(s - o)
        print(f"class={i} simulated={'NA' if s is None else s!r} oracle={o!r} gap={'NA' if gap is None else gap!r}")
    gap = None if sim.overall is None else abs(sim.overall - oracle.blocking)
    print(_kv("simulated", sim.overall))
    print(_kv("oracle", oracle.blocking))
    print(_kv("gap", gap))
    return EXIT_OK


def _scenario_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--policy-column", type=int, help="1-based control matrix column")
    p.add_argument("--no-policy", action="store_true", help="admit whenever a port is free")
    p.add_argument("--matrix", help="control matrix CSV (default: bundled reference table)")
    p.add_argument("--out", help="output directory")
    return p


def _cascade_flags(p: argparse.ArgumentParser):
    p.add_argument("--scan", default="wrap", choices=[s.value for s in Scan])
    p.add_argument("--on-reject", default="continue", choices=[m.value for m in OnReject])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vodsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = _scenario_flags()

    p = sub.add_parser("run", parents=[common], help="simulate one scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="sweep one scenario parameter")
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", help="comma-separated values")
    p.add_argument("--jobs", type=int)
    p.add_argument("--paired", action="store_true", help="also run every point without the policy")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-matrix", help="write a random control matrix")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_matrix)

    p = sub.add_parser("validate-matrix", help="check a control matrix CSV")
    p.add_argument("path")
    p.add_argument("--tolerance", type=float, default=DEFAULT_COLUMN_TOLERANCE)
    p.set_defaults(func=cmd_validate_matrix)

    p = sub.add_parser("analytic", help="closed-form and exact oracle calculations")
    p.set_defaults(func=cmd_analytic)
    asub = p.add_subparsers(dest="analytic", required=True)
    csv_flag = argparse.ArgumentParser(add_help=False)
    csv_flag.add_argument("--csv", action="store_true", help="print a CSV header and row")

    a = asub.add_parser("erlang-b", parents=[csv_flag])
    a.add_argument("--servers", type=int, required=True)
    a.add_argument("--load", type=float, required=True)

    a = asub.add_parser("max-streams", parents=[csv_flag])
    a.add_argument("--disk-rate", type=float, required=True)
    a.add_argument("--playback-rate", type=float, required=True)

    a = asub.add_parser("reserved-bw", parents=[csv_flag])
    a.add_argument("--links", type=int, required=True)
    a.add_argument("--active", type=int, required=True)
    a.add_argument("--burst", type=float, required=True)
    a.add_argument("--volume", type=float, required=True)
    a.add_argument("--duration", type=float, required=True)
    a.add_argument("--link-bandwidths")

    a = asub.add_parser("cascade", parents=[csv_flag])
    a.add_argument("--availability", required=True)
    a.add_argument("--policy", required=True)
    a.add_argument("--start", type=int, default=0)
    _cascade_flags(a)

    a = asub.add_parser("ctmc", parents=[csv_flag])
    a.add_argument("--capacities", required=True)
    a.add_argument("--policy", required=True)
    a.add_argument("--rates", required=True)
    a.add_argument("--mu", type=float, required=True)
    _cascade_flags(a)

    p = sub.add_parser("compare", parents=[common], help="simulation against the exact Markov chain")
    p.set_defaults(func=cmd_compare)
    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigurationError, OSError, IndexError) as exc:
        print(f"vodsim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
