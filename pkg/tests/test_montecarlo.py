import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpccn import analytic
from wpccn.analytic import Scheme, SystemParams
from wpccn.channel import ChannelRealization, ChannelStats, sample_blocks
from wpccn.errors import SchemeMismatchError
from wpccn.montecarlo import (
    CHUNK_BLOCKS,
    Z_95,
    approximation_gap,
    block_snrs,
    chunk_rng,
    estimate_outage,
    estimate_throughput,
    evaluate_block,
)
from wpccn.special import product_exceed_prob

# eta = tau = 1/2 and rho = 3 give mu = 3 and nu = 3 at rate 1.
MU3 = SystemParams(pa_dbm=10 * math.log10(3.0), n0_dbm=0.0, eta=0.5, tau=0.5, n_relays=1)

gains = st.floats(min_value=1e-6, max_value=1e3)


def unit_block(n_relays=1, **overrides):
    fields = dict(h_as=1.0, h_sa=1.0, h_ar=[1.0] * n_relays, h_ra=[1.0] * n_relays,
                  h_sr=[1.0] * n_relays)
    fields.update(overrides)
    return ChannelRealization(**{k: np.asarray(v, dtype=float) if isinstance(v, list) else v
                                 for k, v in fields.items()})


def min_bound_outage(params, stats, scheme, trials, seed):
    """Outage with the relayed SNR replaced by its min bound."""
    nu = analytic.snr_threshold_nu(params.rate)
    hits = 0
    done = 0
    k = 0
    while done < trials:
        size = min(CHUNK_BLOCKS, trials - done)
        batch = sample_blocks(stats, params.n_relays, size, chunk_rng(seed, k))
        out = block_snrs(batch, params, scheme)
        bound = np.minimum(out["hop1"], out["hop2"])
        hits += int(np.count_nonzero(np.maximum(out["gamma_sa"], bound) < nu))
        done += size
        k += 1
    return hits / trials


class TestEvaluateBlock:
    def test_unit_gains(self):
        out = evaluate_block(unit_block(), MU3, Scheme.HTC_SINGLE)
        assert out.gamma_sa == pytest.approx(3.0, rel=1e-12)
        assert out.gamma_sra == pytest.approx(9 / 7, rel=1e-12)
        assert out.gamma_out == pytest.approx(3.0, rel=1e-12)
        assert out.selected_relay == 0
        # gamma_out equals nu up to rounding; do not assert the boundary decision.

    def test_direct_link_blocked(self):
        out = evaluate_block(unit_block(h_as=0.0), MU3, Scheme.HTC_SINGLE)
        assert out.gamma_sa == 0.0 and out.gamma_sra == 0.0
        assert out.outage

    def test_htt_has_no_relay(self):
        out = evaluate_block(unit_block(), MU3, Scheme.HTT)
        assert out.selected_relay is None
        # HTT uses mu' = mu / 2.
        assert out.gamma_sa == pytest.approx(1.5, rel=1e-12)

    def test_or_picks_best_min(self):
        p = MU3.with_(n_relays=3)
        block = unit_block(3, h_sr=[2.0, 5.0, 1.0], h_ar=[10.0, 10.0, 10.0])
        assert evaluate_block(block, p, Scheme.HTC_OR).selected_relay == 1

    def test_or_ties_go_to_lowest_index(self):
        p = MU3.with_(n_relays=3)
        block = unit_block(3, h_sr=[1.0, 4.0, 4.0], h_ar=[1.0, 2.0, 2.0])
        assert evaluate_block(block, p, Scheme.HTC_OR).selected_relay == 1

    def test_prs_rules(self):
        p = MU3.with_(n_relays=3)
        block = unit_block(3, h_sr=[9.0, 1.0, 1.0], h_ar=[1.0, 1.0, 9.0])
        assert evaluate_block(block, p, Scheme.HTC_PRS1).selected_relay == 0
        assert evaluate_block(block, p, Scheme.HTC_PRS2).selected_relay == 2

    def test_relay_count_mismatch(self):
        with pytest.raises(SchemeMismatchError):
            evaluate_block(unit_block(2), MU3, Scheme.HTC_OR)

    def test_ragged_relay_vectors(self):
        block = unit_block(2, h_sr=[1.0])
        with pytest.raises(SchemeMismatchError):
            evaluate_block(block, MU3.with_(n_relays=2), Scheme.HTC_OR)

    @settings(max_examples=300, deadline=None)
    @given(gains, gains, gains, gains, gains)
    def test_relayed_snr_below_min_bound(self, h_as, h_sa, h_ar, h_ra, h_sr):
        block = unit_block(h_as=h_as, h_sa=h_sa, h_ar=[h_ar], h_ra=[h_ra], h_sr=[h_sr])
        out = evaluate_block(block, MU3, Scheme.HTC_SINGLE)
        bound = min(3.0 * h_as * h_sr, 3.0 * h_ar * h_ra)
        assert 0.0 <= out.gamma_sra <= bound
        assert out.gamma_out == max(out.gamma_sa, out.gamma_sra)


class TestEstimateOutage:
    def test_no_outage_at_vanishing_rate(self, default_stats):
        p = SystemParams(rate=1e-9)
        assert estimate_outage(p, default_stats, Scheme.HTC_SINGLE, 10**5, seed=1).p_hat == 0.0

    def test_certain_outage_without_power(self, default_stats):
        p = SystemParams(pa_dbm=-380.0)
        assert estimate_outage(p, default_stats, Scheme.HTC_SINGLE, 10**5, seed=1).p_hat == 1.0

    def test_worker_count_invariance(self, default_stats):
        p = SystemParams(n_relays=3, pa_dbm=25.0)
        trials = 3 * CHUNK_BLOCKS + 17
        ref = estimate_outage(p, default_stats, Scheme.HTC_OR, trials, seed=42, workers=1)
        for workers in (2, 4, 7):
            assert estimate_outage(p, default_stats, Scheme.HTC_OR, trials, 42, workers) == ref

    def test_seed_changes_result(self, default_stats):
        p = SystemParams(pa_dbm=25.0)
        a = estimate_outage(p, default_stats, Scheme.HTT, 10**5, seed=1)
        b = estimate_outage(p, default_stats, Scheme.HTT, 10**5, seed=2)
        assert a.outages != b.outages

    def test_ci_formula(self, default_stats):
        est = estimate_outage(SystemParams(pa_dbm=25.0), default_stats, Scheme.HTT, 10**5, 3)
        assert est.ci_halfwidth == pytest.approx(
            Z_95 * math.sqrt(est.p_hat * (1 - est.p_hat) / est.trials), rel=1e-15)
        assert est.p_hat == est.outages / est.trials

    def test_rejects_zero_trials(self, default_stats):
        with pytest.raises(ValueError):
            estimate_outage(SystemParams(), default_stats, Scheme.HTT, 0, 1)

    def test_scheme_relay_mismatch(self, default_stats):
        with pytest.raises(SchemeMismatchError):
            estimate_outage(SystemParams(n_relays=2), default_stats, Scheme.HTC_SINGLE, 10, 1)

    def test_outage_nested_in_rate(self, default_stats):
        # Same seed, same channels: a higher rate can only add outage blocks.
        counts = [estimate_outage(SystemParams(rate=r, n_relays=2), default_stats,
                                  Scheme.HTC_OR, 10**5, seed=5).outages
                  for r in (0.5, 1.0, 1.5, 2.0)]
        assert counts == sorted(counts)

    def test_exact_outage_dominates_bound(self, default_stats):
        p = SystemParams(pa_dbm=30.0, n_relays=2)
        exact = estimate_outage(p, default_stats, Scheme.HTC_OR, 2 * 10**5, seed=4).p_hat
        assert exact >= min_bound_outage(p, default_stats, Scheme.HTC_OR, 2 * 10**5, seed=4)

    def test_htt_matches_closed_form(self, default_stats):
        # HTT has no relayed path, so the closed form is exact.
        p = SystemParams(pa_dbm=25.0)
        est = estimate_outage(p, default_stats, Scheme.HTT, 10**7, seed=7, workers=4)
        assert abs(est.p_hat - analytic.outage_htt(p, default_stats)) <= 3 * est.sigma

    def test_product_tail_building_block(self):
        stats = ChannelStats(2.0, 0.5, 1.0, 1.0, 1.0)
        p = SystemParams(pa_dbm=0.0, n0_dbm=0.0, eta=0.5, tau=0.5, rate=1.0, n_relays=0)
        # HTT: outage iff (mu/2) h_as h_sa < 1 with mu/2 = 1/2, i.e. h_as h_sa < 2.
        est = estimate_outage(p, stats, Scheme.HTT, 10**6, seed=9)
        expected = 1 - product_exceed_prob(2.0, 2.0, 0.5)
        assert abs(est.p_hat - expected) <= 3 * est.sigma

    @pytest.mark.parametrize("scheme,n", [(Scheme.HTC_SINGLE, 1), (Scheme.HTC_OR, 3),
                                          (Scheme.HTC_PRS1, 3), (Scheme.HTC_PRS2, 3)])
    def test_min_bound_model_matches_closed_form(self, scheme, n, default_stats):
        p = SystemParams(pa_dbm=30.0, n_relays=n)
        trials = 10**6
        p_hat = min_bound_outage(p, default_stats, scheme, trials, seed=13)
        sigma = math.sqrt(p_hat * (1 - p_hat) / trials)
        assert abs(p_hat - analytic.outage_approximate(scheme, p, default_stats)) <= 3 * sigma

    @pytest.mark.xfail(strict=True, reason="closed form assumes the min bound; the exact "
                       "relayed SNR is about 0.012 worse at 35 dBm")
    def test_exact_model_within_ci_of_closed_form(self, default_params, default_stats):
        est = estimate_outage(default_params, default_stats, Scheme.HTC_SINGLE, 10**6, seed=1)
        ref = analytic.outage_htc_single(default_params, default_stats)
        assert abs(est.p_hat - ref) <= 3 * est.ci_halfwidth

    def test_htc_beats_htt(self, default_params, default_stats):
        htc = estimate_throughput(default_params, default_stats, Scheme.HTC_SINGLE, 10**6, 2)
        htt = estimate_throughput(default_params, default_stats, Scheme.HTT, 10**6, 3)
        assert htc.value - htc.ci_halfwidth > htt.value + htt.ci_halfwidth


class TestBankedEnergy:
    def test_prs1_mean(self, default_stats):
        n = 3
        p = SystemParams(n_relays=n)
        est = estimate_outage(p, default_stats, Scheme.HTC_PRS1, 10**6, seed=21)
        expected = (n - 1) * p.eta * p.tau * p.rho * default_stats.sigma2_ar
        assert est.relay_banked_energy == pytest.approx(expected, rel=0.01)

    def test_absent_without_selection(self, default_params, default_stats):
        est = estimate_outage(default_params, default_stats, Scheme.HTC_SINGLE, 10**4, 1)
        assert est.relay_banked_energy == 0.0


class TestThroughputEstimate:
    def test_composition(self, default_params, default_stats):
        t = estimate_throughput(default_params, default_stats, Scheme.HTT, 10**5, 3)
        assert t.value == pytest.approx((1 - t.outage.p_hat) * (2 / 3), rel=1e-15)
        assert t.ci_halfwidth == pytest.approx(t.outage.ci_halfwidth * (2 / 3), rel=1e-15)


class TestApproximationGap:
    def test_unit_block_gap(self):
        batch = sample_blocks(ChannelStats(1, 1, 1, 1, 1), 1, 1, np.random.default_rng(0))
        batch = type(batch)(h_as=np.ones(1), h_sa=np.ones(1), h_ar=np.ones((1, 1)),
                            h_ra=np.ones((1, 1)), h_sr=np.ones((1, 1)))
        out = block_snrs(batch, MU3, Scheme.HTC_SINGLE)
        gap = min(out["hop1"][0], out["hop2"][0]) - out["gamma_sra"][0]
        assert gap == pytest.approx(12 / 7, rel=1e-12)

    def test_gap_positive(self, default_params, default_stats):
        g = approximation_gap(default_params, default_stats, 10**5, seed=3)
        assert g.min_gap > 0 and g.mean_gap > 0

    def test_rare_disagreement_at_high_power(self, default_stats):
        g = approximation_gap(SystemParams(pa_dbm=45.0), default_stats, 10**6, seed=3)
        assert g.disagreement_fraction < 0.01

    def test_disagreement_shrinks_with_power(self, default_stats):
        fr = [approximation_gap(SystemParams(pa_dbm=pa), default_stats, 2 * 10**5, 3)
              .disagreement_fraction for pa in (25.0, 35.0, 45.0)]
        assert fr[0] > fr[1] > fr[2]

    def test_single_relay_only(self, default_stats):
        with pytest.raises(SchemeMismatchError):
            approximation_gap(SystemParams(n_relays=2), default_stats, 10, 1)
