"""Exhaustive search over the energy-transfer fraction and parameter sweeps."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import analytic, montecarlo
from .analytic import Scheme, check_scheme
from .channel import Topology, variances_from_topology

__all__ = [
    "TauGrid",
    "TauOptimum",
    "SweepRow",
    "SWEEP_GRID",
    "REPORT_GRID",
    "SWEEP_VARIABLES",
    "make_evaluator",
    "optimal_tau",
    "sweep",
]

SWEEP_VARIABLES = ("pa_dbm", "n_relays", "d_sr", "tau")


@dataclass(frozen=True)
class TauGrid:
    """Uniform grid ``lo, lo + step, ...`` not exceeding `hi`, inside (0, 1)."""

    lo: float = 0.01
    hi: float = 0.99
    step: float = 0.01

    def __post_init__(self):
        if not (0.0 < self.lo < self.hi < 1.0):
            raise ValueError(f"need 0 < lo < hi < 1, got lo={self.lo}, hi={self.hi}")
        if not self.step > 0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if len(self) < 2:
            raise ValueError("grid must contain at least two points")

    def __len__(self):
        return int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1

    def points(self):
        # Rounding keeps grid members exact decimals (0.07, not 0.07000000000000001).
        return [round(self.lo + k * self.step, 12) for k in range(len(self))]


SWEEP_GRID = TauGrid(0.01, 0.99, 0.01)
REPORT_GRID = TauGrid(0.001, 0.999, 0.001)


@dataclass(frozen=True)
class TauOptimum:
    tau: float
    throughput: float


@dataclass(frozen=True)
class SweepRow:
    swept_name: str
    swept_value: float
    throughput: dict
    outage: dict
    tau_star: dict = field(default_factory=dict)


def make_evaluator(kind="analytic", trials=None, seed=None, workers=1):
    """Build ``f(scheme, params, stats) -> throughput``.

    `kind` is ``"analytic"``, ``"montecarlo"`` or already such a callable.
    The Monte Carlo evaluator reuses `seed` at every point (common random
    numbers), so curves are smooth in the swept parameter.
    """
    if callable(kind):
        return kind
    if kind == "analytic":
        return analytic.throughput
    if kind == "montecarlo":
        if trials is None or seed is None:
            raise ValueError("montecarlo evaluator needs trials and seed")

        def evaluate(scheme, params, stats):
            return montecarlo.estimate_throughput(
                params, stats, scheme, trials, seed, workers=workers
            ).value

        return evaluate
    raise ValueError(f"unknown evaluator {kind!r}")


def optimal_tau(scheme, params, stats, grid=REPORT_GRID, evaluator="analytic",
                trials=None, seed=None, workers=1):
    """Grid point maximising throughput; ties go to the smaller tau.

    The `tau` field of `params` is ignored.
    """
    check_scheme(scheme, params.n_relays)
    evaluate = make_evaluator(evaluator, trials=trials, seed=seed, workers=workers)
    best = None
    for tau in grid.points():
        value = evaluate(scheme, params.with_(tau=tau), stats)
        if best is None or value > best.throughput:
            best = TauOptimum(tau=tau, throughput=value)
    return best


def _row(variable, value, schemes, params, topology, evaluate, optimize, grid):
    if variable == "d_sr":
        topology = Topology(d_as=topology.d_as, d_sr=value, chi=topology.chi)
    elif variable == "n_relays":
        params = params.with_(n_relays=int(value))
    else:
        params = params.with_(**{variable: value})
    stats = variances_from_topology(topology)

    thr, out, taus = {}, {}, {}
    for scheme in schemes:
        if optimize:
            opt = optimal_tau(scheme, params, stats, grid=grid, evaluator=evaluate)
            p, t = params.with_(tau=opt.tau), opt.throughput
            taus[scheme] = opt.tau
        else:
            p = params
            t = evaluate(scheme, p, stats)
        thr[scheme] = t
        out[scheme] = 1.0 - t / (p.rate * (1.0 - p.tau))
    return SweepRow(variable, float(value), thr, out, taus)


def sweep(variable, values, schemes, params=None, topology=None, evaluator="analytic",
          optimize_tau=False, tau_grid=SWEEP_GRID, trials=None, seed=None, workers=1):
    """Evaluate every scheme at each value of one swept parameter.

    Parameters
    ----------
    variable : {"pa_dbm", "n_relays", "d_sr", "tau"}
    values : iterable of float
        Grid of the swept parameter; rows come back in ascending order.
    schemes : list of Scheme
    params, topology : SystemParams, Topology
        Fixed values for everything that is not swept.
    evaluator : "analytic", "montecarlo" or callable
    optimize_tau : bool
        Re-optimise tau on `tau_grid` at every point (not for a tau sweep).
    workers : int
        Grid points evaluated concurrently; output order is unaffected.

    Returns
    -------
    list of SweepRow
    """
    if variable not in SWEEP_VARIABLES:
        raise ValueError(f"cannot sweep {variable!r}; choose from {SWEEP_VARIABLES}")
    if optimize_tau and variable == "tau":
        raise ValueError("optimize_tau is meaningless when sweeping tau")
    params = params if params is not None else analytic.SystemParams()
    topology = topology if topology is not None else Topology()
    schemes = [Scheme.parse(s) if not isinstance(s, Scheme) else s for s in schemes]
    values = sorted(float(v) for v in values)
    if not values:
        raise ValueError("empty sweep range")
    if variable == "n_relays" and any(v != int(v) or v < 0 for v in values):
        raise ValueError("n_relays values must be non-negative integers")
    # Surface range errors (e.g. d_sr >= d_as, bad tau) before any evaluation.
    for v in values:
        if variable == "d_sr":
            Topology(d_as=topology.d_as, d_sr=v, chi=topology.chi)
        elif variable == "n_relays":
            for s in schemes:
                check_scheme(s, int(v))
        else:
            params.with_(**{variable: v})
    if variable != "n_relays":
        for s in schemes:
            check_scheme(s, params.n_relays)

    evaluate = make_evaluator(evaluator, trials=trials, seed=seed, workers=1)

    def run(v):
        return _row(variable, v, schemes, params, topology, evaluate, optimize_tau, tau_grid)

    if workers is None or workers <= 1:
        return [run(v) for v in values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, values))
