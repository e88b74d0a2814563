"""Command-line front end.

Every run writes its payload files plus ``run.json`` (schema version and
the resolved configuration) into the output directory.  Wall-clock and
machine-dependent values go to ``timing.json`` so that all other files
are byte-identical across reruns with the same configuration.

Settings resolve as command-line flag > ``--config`` JSON file > default.
``LOBFLUCT_OUTPUT_DIR`` only changes the default output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

from . import analytics as A
from . import verify as V
from .estimate import EventLogError, estimate_rates, parse_event_log
from .model import BookState, HcParams, ModelError, RegimeSpec
from .simulate import SimulationError, simulate_book

SCHEMA_VERSION = 1
COMMANDS = ("simulate", "analyze", "estimate", "ldp", "verify")
OUTPUT_ENV = "LOBFLUCT_OUTPUT_DIR"

EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR = 0, 1, 2


class ConfigError(ValueError):
    pass


def _default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "lobfluct-out")


@dataclass(frozen=True)
class RunConfig:
    command: str
    regime: dict = field(default_factory=lambda: RegimeSpec.hc(5, 3, 2, 4).to_dict())
    horizon: float = 900.0
    steps: int = 100_000
    replicas: int = 1000
    seed: int = 0
    initial_bid: int = 0
    initial_ask: int = 1
    x: float = 0.2
    checks: tuple[str, ...] = ("all",)
    quick: bool = False
    events: str | None = None
    t_obs: float | None = None
    tolerances: dict = field(default_factory=dict)
    # environment, not part of the reproducible payload
    output_dir: str = field(default_factory=_default_output_dir, compare=False)
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1, compare=False)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}")
        object.__setattr__(self, "checks", tuple(self.checks))
        unknown = set(self.tolerances) - set(V.DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerances {sorted(unknown)}; known: {sorted(V.DEFAULT_TOLERANCES)}")
        for c in self.checks:
            if c != "all" and c not in V.CHECKS:
                raise ConfigError(f"unknown check {c!r}; choose from {V.CHECKS} or 'all'")
        if int(self.jobs) < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            self.regime_spec()
        except ModelError as exc:
            raise ConfigError(str(exc)) from None

    def regime_spec(self) -> RegimeSpec:
        return RegimeSpec.from_dict(self.regime)

    def to_dict(self) -> dict:
        """Reproducible part of the configuration (no output dir or jobs)."""
        d = asdict(self)
        d.pop("output_dir")
        d.pop("jobs")
        d["checks"] = list(self.checks)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "command" not in data:
            raise ConfigError("config needs a 'command'")
        return cls(**data)


# --------------------------------------------------------------------------- #
# Argument parsing
# --------------------------------------------------------------------------- #

_BASE_RATES = ("alpha_plus", "alpha_minus", "beta_plus", "beta_minus")
_REGIME_FLAGS = {
    "alpha_plus": float,
    "alpha_minus": float,
    "beta_plus": float,
    "beta_minus": float,
    "mu_exp": float,
    "kappa_a": float,
    "kappa_b": float,
    "theta": float,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with any of the settings below")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    g = common.add_argument_group("regime")
    g.add_argument("--regime", choices=("hc", "nc", "llg"))
    for name, typ in _REGIME_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest="regime." + name, type=typ)
    g.add_argument("--catastrophe", choices=("uniform", "two_part"), dest="regime.catastrophe.kind")
    g.add_argument("--cat-split", type=float, dest="regime.catastrophe.split")
    g.add_argument("--cat-weight", type=float, dest="regime.catastrophe.weight")

    parser = argparse.ArgumentParser(prog="lobfluct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS, help="simulate one book path to events.csv")
    p.add_argument("--horizon", type=float)
    p.add_argument("--initial-bid", dest="initial_bid", type=int)
    p.add_argument("--initial-ask", dest="initial_ask", type=int)

    sub.add_parser("analyze", parents=[common], argument_default=argparse.SUPPRESS, help="closed-form analytics (HC only)")

    p = sub.add_parser("estimate", parents=[common], argument_default=argparse.SUPPRESS, help="estimate HC rates from an event CSV")
    p.add_argument("--events", help="event log CSV")
    p.add_argument("--t-obs", dest="t_obs", type=float, help="sample length in seconds")

    p = sub.add_parser("ldp", parents=[common], argument_default=argparse.SUPPRESS, help="rate function and optimal trajectories")
    p.add_argument("--x", type=float)
    p.add_argument("--horizon", type=float, help="report the exact tail probability at this T")

    p = sub.add_parser("verify", parents=[common], argument_default=argparse.SUPPRESS, help="Monte Carlo checks")
    p.add_argument("--check", dest="checks", action="append", choices=V.CHECKS + ("all",))
    p.add_argument("--quick", action="store_true")
    p.add_argument("--tolerance", dest="tolerances", action="append", metavar="NAME=VALUE")
    return parser


def _merge_regime(base: dict, flat: dict) -> dict:
    regime = dict(base)
    cat = dict(regime.get("catastrophe", {"kind": "uniform"}))
    if "regime" in flat and flat["regime"] != regime.get("regime"):
        # switching regime drops fields of the other parameterization
        regime = {"regime": flat["regime"], **{k: regime[k] for k in _BASE_RATES if k in regime}}
    for key, val in flat.items():
        if key.startswith("regime.catastrophe."):
            cat[key.rsplit(".", 1)[1]] = val
        elif key.startswith("regime."):
            regime[key.split(".", 1)[1]] = val
    if regime.get("regime", "hc") == "hc":
        regime["catastrophe"] = cat
    else:
        regime.pop("catastrophe", None)
    return regime


def resolve_config(argv: Sequence[str] | None = None) -> RunConfig:
    """Parse flags and merge them over the optional config file."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    data: dict[str, Any] = {}
    path = ns.pop("config", None)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        if "schema_version" in data and isinstance(data.get("config"), dict):
            data = dict(data["config"])  # metadata of an earlier run
        if data.get("command", command) != command:
            raise ConfigError(f"config is for {data['command']!r}, not {command!r}")
    data["command"] = command
    flat_regime = {k: ns.pop(k) for k in list(ns) if k.startswith("regime")}
    if flat_regime:
        default_regime = RunConfig.__dataclass_fields__["regime"].default_factory()
        data["regime"] = _merge_regime(data.get("regime", default_regime), flat_regime)
    if "tolerances" in ns:
        tols = dict(data.get("tolerances", {}))
        for item in ns.pop("tolerances"):
            name, _, val = item.partition("=")
            try:
                tols[name] = float(val)
            except ValueError:
                raise ConfigError(f"bad tolerance {item!r}; use NAME=VALUE") from None
        data["tolerances"] = tols
    data.update(ns)
    return RunConfig.from_dict(data)


# --------------------------------------------------------------------------- #
# Output helpers
# --------------------------------------------------------------------------- #


def _dumps(obj) -> str:
    return json.dumps(V._jsonable(obj), indent=2, sort_keys=True) + "\n"


class Output:
    def __init__(self, config: RunConfig):
        self.dir = Path(config.output_dir)
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
            probe = self.dir / ".write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output directory {self.dir} is not writable: {exc}") from None
        self.config = config
        self.files: list[str] = []

    def json(self, name: str, payload: dict) -> None:
        self._write(name, _dumps({"schema_version": SCHEMA_VERSION, "config": self.config.to_dict(), **payload}))

    def csv(self, name: str, header: Sequence[str], rows) -> None:
        path = self.dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        self.files.append(name)

    def _write(self, name: str, text: str) -> None:
        (self.dir / name).write_text(text)
        self.files.append(name)

    def finish(self, elapsed: float, extra: dict | None = None) -> None:
        self._write("run.json", _dumps({"schema_version": SCHEMA_VERSION, "config": self.config.to_dict(), "files": sorted(self.files)}))
        timing = {"wall_seconds": elapsed, "jobs": self.config.jobs, "output_dir": str(self.dir), **(extra or {})}
        (self.dir / "timing.json").write_text(_dumps(timing))


def _hc_params(config: RunConfig) -> HcParams:
    regime = config.regime_spec()
    if not isinstance(regime.params, HcParams):
        raise ConfigError(
            f"closed-form analytics exist only for the hc regime, not {regime.name!r}; "
            "use 'simulate' or the Monte Carlo checks instead"
        )
    return regime.params


# --------------------------------------------------------------------------- #
# Commands
# --------------------------------------------------------------------------- #


def cmd_simulate(config: RunConfig, out: Output) -> int:
    path = simulate_book(config.regime_spec(), BookState(config.initial_bid, config.initial_ask), config.horizon, config.seed)
    with open(out.dir / "events.csv", "w", newline="") as fh:
        path.write_csv(fh)
    out.files.append("events.csv")
    fin = path.final_state
    out.json("summary.json", {"events": len(path), "final_state": {"bid": fin.bid, "ask": fin.ask}})
    return EXIT_OK


def cmd_analyze(config: RunConfig, out: Output) -> int:
    params = _hc_params(config)
    if not params.is_ergodic:
        raise ConfigError("stationary analytics need gamma_plus < gamma_minus")
    mu = A.stationary_mu(params)
    pi = A.stationary_pi(params)
    report = {
        "mu": mu.to_list(),
        "pi": pi.to_list(),
        "truncation": {"K": mu.K, "tail_bound_mu": mu.tail_bound, "tail_bound_pi": pi.tail_bound},
        "mean_spread": A.mean_spread(params),
        "v": A.embedded_drift_v(params),
        "D": {m: A.drift_D(params, m) for m in A.DRIFT_METHODS},
        "mean_jump_rate": A.mean_jump_rate(params),
        "var_embedded": A.clt_variance_embedded(params),
        "var_embedded_mu_variant": A.clt_variance_embedded(params, first_state="mu"),
        "var_embedded_longrun": A.longrun_variance_embedded(params),
        "var_continuous": A.clt_variance_continuous(params),
        "var_continuous_longrun": A.longrun_variance_continuous(params),
        "next_move_prob": A.next_move_prob(params),
    }
    out.json("analysis.json", report)
    out.csv("stationary.csv", ("k", "mu", "pi"), ((int(k), repr(float(m)), repr(float(p))) for k, m, p in zip(mu.support, mu.values, pi.values)))
    return EXIT_OK


def cmd_estimate(config: RunConfig, out: Output) -> int:
    if config.events is None:
        raise ConfigError("estimate needs --events")
    try:
        with open(config.events, newline="") as fh:
            log = parse_event_log(fh, T_obs=config.t_obs)
    except OSError as exc:
        raise ConfigError(f"cannot read events: {exc}") from None
    est = estimate_rates(log)
    out.json("rates.json", est.to_dict())
    return EXIT_OK


def _trajectory_rows(f: A.PiecewiseLinearTrajectory):
    return ((repr(float(t)), repr(float(y))) for t, y in zip(f.t, f.y))


def cmd_ldp(config: RunConfig, out: Output) -> int:
    params = _hc_params(config)
    x = config.x
    f = A.optimal_spread_trajectory(x, params)
    bid, ask = A.optimal_price_trajectories(x, params)
    report = {
        "x": x,
        "ldp_exponent": A.ldp_exponent(x, params),
        "rate_function_of_optimal": A.rate_function(f, params).value,
        "bifurcation_time": A.bifurcation_time(x, params),
        "limit_decay_rate": V.spread_tail_decay_rate(x, params),
    }
    report["exact_tail"] = {"T": config.horizon, "probability": A.spread_tail_exact(params, x, config.horizon)}
    out.json("ldp.json", report)
    out.csv("spread_trajectory.csv", ("t", "y"), _trajectory_rows(f))
    out.csv("bid_trajectory.csv", ("t", "y"), _trajectory_rows(bid))
    out.csv("ask_trajectory.csv", ("t", "y"), _trajectory_rows(ask))
    return EXIT_OK


def cmd_verify(config: RunConfig, out: Output) -> int:
    params = _hc_params(config)
    names = V.CHECKS if "all" in config.checks else tuple(dict.fromkeys(config.checks))
    reports: list[V.CheckReport] = []
    runtimes = {}
    for name in names:
        for rep in V.run_check(name, params, config.seed, config.quick, config.jobs, config.tolerances):
            reports.append(rep)
            runtimes[rep.name] = rep.runtime_s
            print(rep.line(), flush=True)
    for rep in reports:
        out.json(_report_file(rep.name), {"report": rep.payload()})
    out.csv(
        "summary.csv",
        ("check", "verdict", "expected", "ok", "estimate", "target", "tolerance"),
        ((r.name, r.verdict, r.expected, r.ok, json.dumps(V._jsonable(r.estimate), sort_keys=True),
          json.dumps(V._jsonable(r.target), sort_keys=True), r.tolerance) for r in reports),
    )
    out.timing_extra = {"check_runtime_seconds": runtimes}
    return EXIT_OK if all(r.ok for r in reports) else EXIT_CHECK_FAILED


def _report_file(name: str) -> str:
    safe = "".join(c if c.isalnum() or c in "-_.=" else "_" for c in name).strip("_")
    return f"check_{safe}.json"


HANDLERS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "estimate": cmd_estimate,
    "ldp": cmd_ldp,
    "verify": cmd_verify,
}


def run(config: RunConfig) -> int:
    t0 = time.perf_counter()
    try:
        out = Output(config)
        out.timing_extra = None
        status = HANDLERS[config.command](config, out)
        out.finish(time.perf_counter() - t0, out.timing_extra)
        return status
    except (ConfigError, ModelError, EventLogError, SimulationError) as exc:
        return _fail(exc)


def _fail(exc: Exception) -> int:
    err = {"error": type(exc).__name__, "message": str(exc)}
    line = getattr(exc, "line", None)
    if line is not None:
        err["line"] = line
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return EXIT_ERROR


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config = resolve_config(argv)
    except (ConfigError, ModelError) as exc:
        return _fail(exc)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
