import math

import numpy as np
import pytest
import scipy.stats

from miso_delay.channel_model import (
    DofAssignment,
    EffectiveGain,
    Scheme,
    dof_assignment,
    gain_pdf,
    sample_gain,
    service_bits,
    zfbf_gain_oracle,
    zfbf_gain_samples,
)
from miso_delay.special_functions import integrate_semi_infinite


class TestGainPdf:
    def test_point_values(self):
        assert gain_pdf(0.0, 1) == pytest.approx(1.0)
        assert gain_pdf(1.0, 1) == pytest.approx(math.exp(-1.0), rel=1e-14)
        assert gain_pdf(2.0, 2) == pytest.approx(2.0 * math.exp(-2.0), rel=1e-14)

    def test_normalization(self):
        for m in range(1, 17):
            total = integrate_semi_infinite(lambda xi: gain_pdf(xi, m), rel_tol=1e-10)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_domain(self):
        with pytest.raises(ValueError):
            gain_pdf(-0.1, 1)
        with pytest.raises(ValueError):
            gain_pdf(1.0, 0)


class TestSampleGain:
    def test_moments(self):
        rng = np.random.default_rng(2024)
        x = sample_gain(3, rng, size=1_000_000)
        assert x.mean() == pytest.approx(3.0, abs=0.01)
        assert x.var() == pytest.approx(3.0, abs=0.03)

    def test_ks_against_gamma(self):
        rng = np.random.default_rng(7)
        x = sample_gain(5, rng, size=100_000)
        stat = scipy.stats.kstest(x, scipy.stats.gamma(5).cdf).statistic
        assert stat < 0.006  # critical value at significance 0.01 is 0.00515

    def test_stochastic_ordering(self):
        rng = np.random.default_rng(5)
        means = [sample_gain(m, rng, size=100_000).mean() for m in (1, 2, 4, 8)]
        assert all(a < b for a, b in zip(means, means[1:]))


class TestMatrixOracle:
    def test_single_user_norm(self):
        # k=1: xi = ||h||^2, a sum of nt unit exponentials
        rng = np.random.default_rng(11)
        x = zfbf_gain_samples(4, 1, 100_000, rng)
        assert x.mean() == pytest.approx(4.0, rel=0.02)

    def test_full_load_mean(self):
        # nt = k = 4 leaves a single degree-of-freedom pair: m = 1
        rng = np.random.default_rng(12)
        x = zfbf_gain_samples(4, 4, 100_000, rng)
        assert x.mean() == pytest.approx(1.0, rel=0.02)

    def test_ks_against_claimed_gamma(self):
        rng = np.random.default_rng(13)
        x = zfbf_gain_samples(4, 2, 100_000, rng)[:, 0]
        stat = scipy.stats.kstest(x, scipy.stats.gamma(3).cdf).statistic
        assert stat < 0.006

    def test_single_draw_shape(self):
        rng = np.random.default_rng(1)
        xi = zfbf_gain_oracle(6, 3, rng)
        assert xi.shape == (3,)
        assert np.all(xi > 0)

    def test_all_small_antenna_counts(self):
        # quick sweep; the full 1e5-sample version is an acceptance criterion
        rng = np.random.default_rng(15)
        for nt in (2, 4, 6):
            for k in range(1, nt + 1):
                # gains within one draw are correlated; KS needs independent
                # samples, so test a single user's column
                x = zfbf_gain_samples(nt, k, 40_000, rng)[:, 0]
                p = scipy.stats.kstest(x, scipy.stats.gamma(nt - k + 1).cdf).pvalue
                assert p > 0.01, f"nt={nt} k={k}: p={p}"

    def test_domain(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ValueError):
            zfbf_gain_oracle(4, 5, rng)


class TestDofAssignment:
    def test_zfbf(self):
        assert dof_assignment(Scheme.ZFBF, 8, 6).entries == ((3, 1.0),)
        assert dof_assignment(Scheme.ZFBF, 8, 1).entries == ((8, 1.0),)

    def test_zfdpc_uniform_over_orders(self):
        entries = dof_assignment(Scheme.ZF_DPC, 8, 3).entries
        assert entries == ((6, 1 / 3), (7, 1 / 3), (8, 1 / 3))

    def test_rejects_overload(self):
        with pytest.raises(ValueError):
            dof_assignment(Scheme.ZFBF, 8, 9)

    def test_probabilities_validated(self):
        with pytest.raises(ValueError):
            DofAssignment(((1, 0.5), (2, 0.4)))


class TestServiceBits:
    def test_values(self):
        assert service_bits(1.0, 1.0, 1) == pytest.approx(1.0)
        assert service_bits(5.0, 0.0, 1000) == 0.0
        assert service_bits(3.0, 1.0, 1000) == pytest.approx(2000.0)

    def test_domain(self):
        with pytest.raises(ValueError):
            service_bits(0.0, 1.0, 1)


def test_effective_gain_invariants():
    g = EffectiveGain(2.5, 3)
    assert (g.xi, g.m) == (2.5, 3)
    with pytest.raises(ValueError):
        EffectiveGain(-0.1, 1)
    with pytest.raises(ValueError):
        EffectiveGain(1.0, 0)


def test_scheme_parse():
    assert Scheme.parse("zfbf") is Scheme.ZFBF
    assert Scheme.parse(" ZFDPC ") is Scheme.ZF_DPC
    with pytest.raises(ValueError):
        Scheme.parse("mrt")
