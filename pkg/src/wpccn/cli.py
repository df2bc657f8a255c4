"""Command-line front end.

Configuration is merged in the order: built-in defaults, the key=value
config file (``--config`` or ``$WPCCN_CONFIG``), then explicit flags.
Exit status is 0 on success, 1 when ``validate`` finds a failing check and
2 for configuration errors.
"""

import argparse
import csv
import dataclasses
import math
import os
import sys
from pathlib import Path

from . import __version__, analytic, montecarlo, optimize
from .analytic import Scheme, SystemParams
from .channel import Topology, variances_from_topology
from .errors import DomainError, SchemeMismatchError

CONFIG_ENV = "WPCCN_CONFIG"
NUM_FMT = "{:.9e}"

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


@dataclasses.dataclass
class RunConfig:
    pa_dbm: float = 35.0
    n0_dbm: float = -80.0
    eta: float = 0.5
    tau: float = 1.0 / 3.0
    rate: float = 1.0
    n_relays: int = 1
    d_as: float = 10.0
    d_sr: float = 3.0
    chi: float = 2.0
    scheme: tuple = ()
    evaluator: str = "analytic"
    trials: int = 1_000_000
    seed: int = 1
    workers: int = 0  # 0: one per CPU
    out: str = ""
    tau_lo: float = optimize.REPORT_GRID.lo
    tau_hi: float = optimize.REPORT_GRID.hi
    tau_step: float = optimize.REPORT_GRID.step
    vary: str = "pa_dbm"
    start: float = 20.0
    stop: float = 45.0
    step: float = 1.0
    optimize_tau: bool = False
    fast: bool = False

    def params(self):
        return SystemParams(
            pa_dbm=self.pa_dbm, n0_dbm=self.n0_dbm, eta=self.eta, tau=self.tau,
            rate=self.rate, n_relays=self.n_relays,
        )

    def topology(self):
        return Topology(d_as=self.d_as, d_sr=self.d_sr, chi=self.chi)

    def schemes(self, n_relays=None):
        if self.scheme:
            return [Scheme.parse(s) for s in self.scheme]
        n = self.n_relays if n_relays is None else n_relays
        if n == 0:
            return [Scheme.HTT]
        if n == 1:
            return [Scheme.HTT, Scheme.HTC_SINGLE]
        return [Scheme.HTT, Scheme.HTC_OR, Scheme.HTC_PRS1, Scheme.HTC_PRS2]

    def n_workers(self):
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
# Config-file spellings that differ from the attribute names.
_KEY_ALIASES = {"from": "start", "to": "stop", "schemes": "scheme"}


def _coerce(name, raw):
    kind = type(_FIELDS[name].default)
    if kind is tuple:
        parts = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
        return tuple(p.strip() for p in parts if str(p).strip())
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if kind is str:
        return str(raw).strip()
    try:
        value = kind(raw) if kind is not int else int(str(raw).strip())
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}") from None
    return value


def _normalise_key(key):
    key = key.strip().lower().replace("-", "_")
    key = _KEY_ALIASES.get(key, key)
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def load_config_file(path):
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = line.split("=", 1)
        key = _normalise_key(key)
        values[key] = _coerce(key, raw.strip())
    return values


def _add_common(p):
    g = p.add_argument_group("system")
    g.add_argument("--pa-dbm", type=float)
    g.add_argument("--n0-dbm", type=float)
    g.add_argument("--eta", type=float)
    g.add_argument("--tau", type=float)
    g.add_argument("--rate", type=float)
    g.add_argument("--n-relays", type=int)
    g.add_argument("--d-as", type=float)
    g.add_argument("--d-sr", type=float)
    g.add_argument("--chi", type=float)
    g.add_argument("--scheme", action="append",
                   help="htt, htc-single, or, prs1, prs2 (repeatable)")
    r = p.add_argument_group("run")
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out")
    r.add_argument("--config", help=f"key=value file (default: ${CONFIG_ENV})")


def _add_tau_grid(p):
    p.add_argument("--tau-lo", type=float)
    p.add_argument("--tau-hi", type=float)
    p.add_argument("--tau-step", type=float)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wpccn",
        description="Outage and throughput of harvest-then-cooperate networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form outage and throughput")
    _add_common(p)
    p = sub.add_parser("simulate", help="Monte Carlo outage and throughput")
    _add_common(p)
    p = sub.add_parser("optimize-tau", help="throughput-optimal tau per scheme")
    _add_common(p)
    _add_tau_grid(p)
    p.add_argument("--evaluator", choices=("analytic", "montecarlo"))
    p = sub.add_parser("sweep", help="write a CSV sweep over one parameter")
    _add_common(p)
    _add_tau_grid(p)
    p.add_argument("--vary", choices=("pa-dbm", "n-relays", "d-sr", "tau"))
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--evaluator", choices=("analytic", "montecarlo"))
    p.add_argument("--optimize-tau", action="store_true", default=None)
    p = sub.add_parser("validate", help="run every oracle cross-check")
    _add_common(p)
    p.add_argument("--fast", action="store_true", default=None,
                   help="use one tenth of the Monte Carlo budgets")
    return parser


def resolve_config(args, environ=None):
    environ = os.environ if environ is None else environ
    values = {}
    path = getattr(args, "config", None) or environ.get(CONFIG_ENV)
    if path:
        values.update(load_config_file(path))
    for name in _FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = _coerce(name, flag)
    if "vary" in values:
        values["vary"] = values["vary"].replace("-", "_")
    cfg = RunConfig(**values)
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.step <= 0:
        raise ConfigError("step must be > 0")
    return cfg


def _checked_schemes(cfg, params):
    return [analytic.check_scheme(s, params.n_relays) for s in cfg.schemes()]


def _fmt(v):
    return NUM_FMT.format(v)


def cmd_analytic(cfg, out):
    params, stats = cfg.params(), variances_from_topology(cfg.topology())
    schemes = _checked_schemes(cfg, params)
    print(f"# mu={_fmt(analytic.snr_scale_mu(params))} "
          f"nu={_fmt(analytic.snr_threshold_nu(params.rate))}", file=out)
    print("scheme outage throughput outage_asymptotic throughput_asymptotic", file=out)
    for scheme in schemes:
        p_out = analytic.outage_approximate(scheme, params, stats)
        thr = analytic.throughput(scheme, params, stats)
        if scheme is Scheme.HTT:
            asym = "- -"
        else:
            asym = (f"{_fmt(analytic.outage_asymptotic(scheme, params, stats))} "
                    f"{_fmt(analytic.throughput(scheme, params, stats, asymptotic=True))}")
        print(f"{scheme.value} {_fmt(p_out)} {_fmt(thr)} {asym}", file=out)
    return EXIT_OK


def cmd_simulate(cfg, out):
    params, stats = cfg.params(), variances_from_topology(cfg.topology())
    schemes = _checked_schemes(cfg, params)
    print(f"# trials={cfg.trials} seed={cfg.seed}", file=out)
    print("scheme outage outage_ci95 throughput throughput_ci95", file=out)
    for scheme in schemes:
        est = montecarlo.estimate_throughput(
            params, stats, scheme, cfg.trials, cfg.seed, workers=cfg.n_workers()
        )
        print(f"{scheme.value} {_fmt(est.outage.p_hat)} {_fmt(est.outage.ci_halfwidth)} "
              f"{_fmt(est.value)} {_fmt(est.ci_halfwidth)}", file=out)
    return EXIT_OK


def _tau_grid(cfg):
    return optimize.TauGrid(cfg.tau_lo, cfg.tau_hi, cfg.tau_step)


def cmd_optimize_tau(cfg, out):
    params, stats = cfg.params(), variances_from_topology(cfg.topology())
    grid = _tau_grid(cfg)
    schemes = _checked_schemes(cfg, params)
    print(f"# tau grid lo={cfg.tau_lo} hi={cfg.tau_hi} step={cfg.tau_step} "
          f"evaluator={cfg.evaluator}", file=out)
    print("scheme tau_star throughput_star", file=out)
    for scheme in schemes:
        opt = optimize.optimal_tau(
            scheme, params, stats, grid=grid, evaluator=cfg.evaluator,
            trials=cfg.trials, seed=cfg.seed, workers=cfg.n_workers(),
        )
        print(f"{scheme.value} {_fmt(opt.tau)} {_fmt(opt.throughput)}", file=out)
    return EXIT_OK


def sweep_values(start, stop, step):
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        raise ConfigError(f"empty range from {start} to {stop}")
    return [round(start + k * step, 12) for k in range(n)]


def write_sweep_csv(rows, schemes, fh, with_tau=False):
    writer = csv.writer(fh, lineterminator="\n")
    header = [rows[0].swept_name]
    header += [f"throughput_{s.value}" for s in schemes]
    header += [f"outage_{s.value}" for s in schemes]
    if with_tau:
        header += [f"tau_star_{s.value}" for s in schemes]
    writer.writerow(header)
    for row in rows:
        rec = [_fmt(row.swept_value)]
        rec += [_fmt(row.throughput[s]) for s in schemes]
        rec += [_fmt(row.outage[s]) for s in schemes]
        if with_tau:
            rec += [_fmt(row.tau_star[s]) for s in schemes]
        writer.writerow(rec)


def sweep_metadata(cfg, schemes):
    meta = {
        "tool": "wpccn",
        "version": __version__,
        "command": "sweep",
        "schemes": ",".join(s.value for s in schemes),
    }
    skip = {"scheme", "workers", "out", "fast"}
    for name in _FIELDS:
        if name not in skip:
            meta[name] = getattr(cfg, name)
    if not cfg.optimize_tau:
        for name in ("tau_lo", "tau_hi", "tau_step"):
            meta.pop(name)
    else:
        meta["tau_resolution"] = cfg.tau_step
    return meta


def cmd_sweep(cfg, out):
    # A relay-count sweep spans N >= 2, so default to the selection schemes.
    schemes = cfg.schemes(n_relays=2 if cfg.vary == "n_relays" else None)
    values = sweep_values(cfg.start, cfg.stop, cfg.step)
    grid = _tau_grid(cfg) if cfg.optimize_tau else optimize.SWEEP_GRID
    rows = optimize.sweep(
        cfg.vary, values, schemes, params=cfg.params(), topology=cfg.topology(),
        evaluator=cfg.evaluator, optimize_tau=cfg.optimize_tau, tau_grid=grid,
        trials=cfg.trials, seed=cfg.seed, workers=cfg.n_workers(),
    )
    if not cfg.out:
        write_sweep_csv(rows, schemes, out, with_tau=cfg.optimize_tau)
        return EXIT_OK
    path = Path(cfg.out)
    with path.open("w", newline="") as fh:
        write_sweep_csv(rows, schemes, fh, with_tau=cfg.optimize_tau)
    meta = sweep_metadata(cfg, schemes)
    with path.with_suffix(".meta").open("w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"{key}={value}\n")
    print(f"wrote {len(rows)} rows to {path}", file=out)
    return EXIT_OK


def cmd_validate(cfg, out):
    from . import validation

    results = validation.run_all(scale=0.1 if cfg.fast else 1.0, stream=out)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=out)
    return EXIT_VALIDATION if failed else EXIT_OK


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "optimize-tau": cmd_optimize_tau,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    out = sys.stdout
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, DomainError, SchemeMismatchError, ValueError, OverflowError) as exc:
        print(f"wpccn: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
