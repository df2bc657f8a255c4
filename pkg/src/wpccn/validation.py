"""Cross-checks of the closed forms against independent references.

Each ``check_*`` function returns a :class:`CheckResult`; :func:`run_all`
runs the whole suite. The ``scale`` argument multiplies every Monte Carlo
trial budget (1.0 reproduces the full budgets).
"""

import io
import math
import tempfile
import time
from contextlib import redirect_stdout
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic, montecarlo, special
from .analytic import Scheme, SystemParams
from .channel import Topology, variances_from_topology
from .optimize import REPORT_GRID, SWEEP_GRID, optimal_tau

__all__ = ["CheckResult", "CHECKS", "run_all"]

PA_GRID = (20.0, 25.0, 30.0, 35.0, 40.0, 45.0)
SELECTION_SCHEMES = (Scheme.HTC_OR, Scheme.HTC_PRS1, Scheme.HTC_PRS2)


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: list = field(default_factory=list)
    elapsed: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.elapsed:.1f}s)"


def _trials(n, scale):
    return max(1000, int(round(n * scale)))


def _default_stats(d_sr=3.0):
    return variances_from_topology(Topology(d_as=10.0, d_sr=d_sr, chi=2.0))


def _product_tail_mc(z, lam1, lam2, trials, seed):
    """Empirical Pr(X*Y > z) for independent exponentials, chunked."""
    hits = 0
    for k, start in enumerate(range(0, trials, montecarlo.CHUNK_BLOCKS * 16)):
        size = min(montecarlo.CHUNK_BLOCKS * 16, trials - start)
        rng = montecarlo.chunk_rng(seed, k)
        x = rng.exponential(lam1, size)
        y = rng.exponential(lam2, size)
        hits += int(np.count_nonzero(x * y > z))
    return hits / trials


def check_special_functions(scale=1.0):
    res = CheckResult("1 special-function oracle", True)
    for x, ref in ((1.0, 0.6019072301972346), (2.0, 0.1398658818165224)):
        got = special.bessel_k1(x)
        rel = abs(got - ref) / ref
        ok = rel <= 1e-12
        res.passed &= ok
        res.details.append(f"K1({x:g}) = {got!r}, rel err {rel:.2e} (<= 1e-12: {ok})")
    trials = _trials(10**7, scale)
    grid = ((0.1, 1.0, 1.0), (1.0, 1.0, 1.0), (1.0, 2.0, 2.0), (0.5, 1.0, 3.0), (3.0, 2.0, 1.5))
    for i, (z, l1, l2) in enumerate(grid):
        exact = special.product_exceed_prob(z, l1, l2)
        p = _product_tail_mc(z, l1, l2, trials, seed=1000 + i)
        sigma = math.sqrt(p * (1 - p) / trials)
        ok = abs(p - exact) <= 3 * sigma
        res.passed &= ok
        res.details.append(
            f"Pr(XY>{z:g}; {l1:g},{l2:g}): S={exact:.6f} MC={p:.6f} |d|={abs(p - exact):.2e} 3sigma={3 * sigma:.2e}"
        )
    return res


def check_product_building_block(scale=1.0):
    res = CheckResult("2 product-of-exponentials CDF", True)
    rng = np.random.default_rng(2024)
    trials = _trials(10**6, scale)
    for i in range(10):
        nu = rng.uniform(0.5, 5.0)
        s1, s2 = 10.0 ** rng.uniform(-5, -3, size=2)
        x = 10.0 ** rng.uniform(-1.3, 1.3)
        mu = 4 * nu / (x * s1 * s2)
        exact = 1.0 - special.s_func(4 * nu / (mu * s1 * s2))
        p = 1.0 - _product_tail_mc(nu / mu, s1, s2, trials, seed=2000 + i)
        half = montecarlo.Z_95 * math.sqrt(p * (1 - p) / trials)
        ok = abs(p - exact) <= 3 * half
        res.passed &= ok
        res.details.append(
            f"nu={nu:.3f} mu={mu:.3e} s1={s1:.2e} s2={s2:.2e}: exact={exact:.5f} MC={p:.5f} tol={3 * half:.2e}"
        )
    return res


def _tightness(res, schemes, n_relays, scale, seed):
    stats = _default_stats()
    trials = _trials(10**6, scale)
    for pa in (30.0, 35.0, 40.0):
        params = SystemParams(pa_dbm=pa, tau=1 / 3, n_relays=n_relays)
        for scheme in schemes:
            approx = analytic.outage_approximate(scheme, params, stats)
            est = montecarlo.estimate_outage(params, stats, scheme, trials, seed)
            gap = abs(approx - est.p_hat)
            ok = gap <= 0.01
            res.passed &= ok
            res.details.append(
                f"P_A={pa:g} dBm {scheme.value}: analytic={approx:.5f} MC={est.p_hat:.5f} "
                f"|d|={gap:.4f} (<= 0.01: {ok})"
            )
    return res


def check_single_relay_tightness(scale=1.0):
    res = CheckResult("3 single-relay approximation tightness", True)
    return _tightness(res, (Scheme.HTC_SINGLE,), 1, scale, seed=3)


def check_selection_tightness(scale=1.0):
    res = CheckResult("4 relay-selection approximation tightness", True)
    return _tightness(res, SELECTION_SCHEMES, 3, scale, seed=4)


def check_reduction_identity(scale=1.0):
    res = CheckResult("5 N=1 reduction identity", True)
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        params = SystemParams(
            pa_dbm=rng.uniform(10, 50),
            eta=rng.uniform(0.1, 0.9),
            tau=rng.uniform(0.05, 0.95),
            rate=rng.uniform(0.25, 3.0),
            n_relays=1,
        )
        topo = Topology(d_as=10.0, d_sr=rng.uniform(1, 9), chi=rng.uniform(2, 5))
        stats = variances_from_topology(topo)
        ref = analytic.outage_htc_single(params, stats)
        for fn in (analytic.outage_or, analytic.outage_prs1, analytic.outage_prs2):
            worst = max(worst, abs(fn(params, stats) - ref))
    res.passed = worst <= 1e-12
    res.details.append(f"max |difference| over 1000 points = {worst:.3e} (<= 1e-12)")
    return res


def check_asymptotics(scale=1.0):
    res = CheckResult("6 high-SNR asymptotics", True)
    worst = 0.0
    for x in np.geomspace(1e-12, 1e-3, 200):
        one_minus_s = 1.0 - special.s_func(x)
        worst = max(worst, abs(one_minus_s + special.w_func(x)) / abs(one_minus_s))
    ok = worst <= 0.05
    res.passed &= ok
    res.details.append(f"max |(1-S)+W|/|1-S| on x<=1e-3: {worst:.4f} (<= 0.05)")
    stats = _default_stats()
    cases = [(Scheme.HTC_SINGLE, 1)] + [(s, n) for n in (1, 2, 3) for s in SELECTION_SCHEMES]
    for scheme, n in cases:
        params = SystemParams(pa_dbm=45.0, tau=1 / 3, n_relays=n)
        approx = analytic.outage_approximate(scheme, params, stats)
        asym = analytic.outage_asymptotic(scheme, params, stats)
        rel = abs(asym - approx) / approx
        ok = rel <= 0.10
        res.passed &= ok
        res.details.append(
            f"{scheme.value} N={n}: approx={approx:.5e} asym={asym:.5e} rel={rel:.3f} (<= 0.10)"
        )
    return res


def check_htc_dominance(scale=1.0):
    res = CheckResult("7 HTC outperforms HTT", True)
    stats = _default_stats()
    trials = _trials(10**6, scale)
    separated = 0
    for pa in PA_GRID:
        params = SystemParams(pa_dbm=pa, tau=1 / 3, n_relays=1)
        a_htc = analytic.throughput(Scheme.HTC_SINGLE, params, stats)
        a_htt = analytic.throughput(Scheme.HTT, params, stats)
        m_htc = montecarlo.estimate_throughput(params, stats, Scheme.HTC_SINGLE, trials, 7)
        m_htt = montecarlo.estimate_throughput(params, stats, Scheme.HTT, trials, 7)
        ok = a_htc >= a_htt and m_htc.value >= m_htt.value
        sep = (m_htc.value - m_htt.value) > (m_htc.ci_halfwidth + m_htt.ci_halfwidth)
        separated += sep
        res.passed &= ok
        res.details.append(
            f"P_A={pa:g}: analytic HTC={a_htc:.4f} HTT={a_htt:.4f}; "
            f"MC HTC={m_htc.value:.4f}+-{m_htc.ci_halfwidth:.4f} HTT={m_htt.value:.4f}+-{m_htt.ci_halfwidth:.4f} "
            f"separated={sep}"
        )
    frac = separated / len(PA_GRID)
    res.passed &= frac >= 0.8
    res.details.append(f"CI-separated fraction {frac:.2f} (>= 0.80)")
    return res


def check_optimal_tau_structure(scale=1.0):
    res = CheckResult("8 optimal time-allocation structure", True)
    stats = _default_stats()
    schemes = (Scheme.HTT,) + SELECTION_SCHEMES
    base = SystemParams(pa_dbm=35.0, n_relays=2)
    taus = SWEEP_GRID.points()
    for scheme in schemes:
        curve = [analytic.throughput(scheme, base.with_(tau=t), stats) for t in taus]
        k = int(np.argmax(curve))
        ok = 0 < k < len(taus) - 1
        res.passed &= ok
        res.details.append(f"{scheme.value}: argmax tau={taus[k]:.2f} interior={ok}")
    stars = {}
    for scheme in schemes:
        seq = [
            optimal_tau(scheme, base.with_(pa_dbm=pa), stats, grid=REPORT_GRID).tau
            for pa in (25.0, 30.0, 35.0, 40.0)
        ]
        stars[scheme] = seq
        ok = all(b <= a for a, b in zip(seq, seq[1:]))
        res.passed &= ok
        res.details.append(f"{scheme.value}: tau* over P_A 25..40 = {seq} non-increasing={ok}")
    ok = all(o <= h for o, h in zip(stars[Scheme.HTC_OR], stars[Scheme.HTT]))
    res.passed &= ok
    res.details.append(f"tau*(or) <= tau*(htt) at every P_A: {ok}")
    return res


def check_relay_count_and_position(scale=1.0):
    res = CheckResult("9 relay count and position structure", True)
    base = SystemParams(pa_dbm=35.0)
    best = {}
    for d_sr in (3.0, 5.0):
        stats = _default_stats(d_sr)
        for scheme in SELECTION_SCHEMES:
            seq = [
                optimal_tau(scheme, base.with_(n_relays=n), stats, grid=SWEEP_GRID).throughput
                for n in range(1, 6)
            ]
            best[(d_sr, scheme)] = seq
            ok = all(b >= a for a, b in zip(seq, seq[1:]))
            res.passed &= ok
            res.details.append(
                f"d_SR={d_sr:g} {scheme.value}: T*(N=1..5) = "
                + ", ".join(f"{v:.4f}" for v in seq)
                + f" non-decreasing={ok}"
            )
    for n in range(2, 6):
        p1_3, p2_3 = best[(3.0, Scheme.HTC_PRS1)][n - 1], best[(3.0, Scheme.HTC_PRS2)][n - 1]
        p1_5, p2_5 = best[(5.0, Scheme.HTC_PRS1)][n - 1], best[(5.0, Scheme.HTC_PRS2)][n - 1]
        ok = p2_3 > p1_3 and p1_5 > p2_5
        res.passed &= ok
        res.details.append(
            f"N={n}: d_SR=3 PRS-II {p2_3:.4f} > PRS-I {p1_3:.4f}; "
            f"d_SR=5 PRS-I {p1_5:.4f} > PRS-II {p2_5:.4f}: {ok}"
        )
    params = base.with_(n_relays=1)
    per_d = {
        d: optimal_tau(Scheme.HTC_SINGLE, params, _default_stats(float(d)), grid=SWEEP_GRID).throughput
        for d in range(1, 10)
    }
    d_best = max(per_d, key=per_d.get)
    ok = d_best in (2, 3, 4)
    res.passed &= ok
    res.details.append(f"N=1 argmax over d_SR in 1..9 m = {d_best} m (in {{2,3,4}}: {ok})")
    return res


def check_saturation(scale=1.0):
    res = CheckResult("10 high-power saturation", True)
    stats = _default_stats()
    params = SystemParams(pa_dbm=55.0, tau=1 / 3, n_relays=1)
    target = 0.99 * (2.0 / 3.0)
    a = analytic.throughput(Scheme.HTC_SINGLE, params, stats)
    m = montecarlo.estimate_throughput(params, stats, Scheme.HTC_SINGLE, _trials(10**6, scale), 10)
    ok_a = a >= target
    ok_m = m.value + m.ci_halfwidth >= target
    res.passed = ok_a and ok_m
    res.details.append(f"analytic T={a:.6f} (>= {target:.6f}: {ok_a})")
    res.details.append(f"MC T={m.value:.6f}+-{m.ci_halfwidth:.6f} (reaches {target:.6f}: {ok_m})")
    return res


def _cli_output(argv):
    from .cli import main

    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue().encode()


def check_determinism(scale=1.0):
    res = CheckResult("11 determinism across runs and workers", True)
    trials = str(_trials(2 * 10**5, scale))
    sim = ["simulate", "--n-relays", "3", "--scheme", "or", "--scheme", "prs1",
           "--scheme", "prs2", "--scheme", "htt", "--trials", trials, "--seed", "42"]
    outs = [_cli_output(sim + ["--workers", w]) for w in ("1", "1", "4")]
    ok = all(o == outs[0] for o in outs) and outs[0][0] == 0
    res.passed &= ok
    res.details.append(f"simulate stdout identical over runs/workers {{1,1,4}}: {ok}")

    with tempfile.TemporaryDirectory() as tmp:
        files = []
        for i, w in enumerate(("1", "1", "4")):
            out = Path(tmp) / f"run{i}" / "sweep.csv"
            out.parent.mkdir()
            code, _ = _cli_output([
                "sweep", "--vary", "pa-dbm", "--from", "20", "--to", "45", "--step", "5",
                "--evaluator", "montecarlo", "--trials", trials, "--seed", "42",
                "--workers", w, "--out", str(out),
            ])
            files.append((code, out.read_bytes(), out.with_suffix(".meta").read_bytes()))
    ok = all(f == files[0] for f in files) and files[0][0] == 0
    res.passed &= ok
    res.details.append(f"sweep CSV and .meta identical over runs/workers {{1,1,4}}: {ok}")
    return res


CHECKS = (
    check_special_functions,
    check_product_building_block,
    check_single_relay_tightness,
    check_selection_tightness,
    check_reduction_identity,
    check_asymptotics,
    check_htc_dominance,
    check_optimal_tau_structure,
    check_relay_count_and_position,
    check_saturation,
    check_determinism,
)


def timed(check, scale=1.0):
    t0 = time.perf_counter()
    result = check(scale)
    result.elapsed = time.perf_counter() - t0
    return result


def run_all(scale=1.0, verbose=False, stream=None):
    """Run every check, print one line each, return the list of results."""
    results = []
    for check in CHECKS:
        r = timed(check, scale)
        results.append(r)
        print(r.line(), file=stream)
        if verbose or not r.passed:
            for d in r.details:
                print(f"    {d}", file=stream)
    return results
