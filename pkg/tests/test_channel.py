import math

import numpy as np
import pytest

from urasparc.channel import (
    PowerSpec,
    ReceivedBlock,
    build_activity,
    ebn0_to_sigma2,
    sigma2_to_ebn0,
    sigma2_to_snr,
    simulate_block,
    snr_to_sigma2,
)
from urasparc.codebook import gen_sphere_uniform, gen_subsampled_fourier
from urasparc.covariance import model_covariance, sample_covariance
from urasparc.errors import InvalidParameterError


def test_single_user_activity():
    act = build_activity([(7, 1.0)], 16)
    assert np.array_equal(act.gamma, np.eye(16)[7])
    assert list(act.support) == [7] and act.K == 1


def test_collision_superposes_power():
    act = build_activity([(3, 1.0), (3, 1.0)], 8)
    assert act.gamma[3] == 2.0 and act.K == 1
    cb = gen_sphere_uniform(6, 8, 0)
    two = model_covariance(cb, act.gamma, 0.5)
    a = cb.entries[:, 3]
    # two independent unit-power users on the same codeword
    oracle = 2.0 * np.outer(a, a.conj()) + 0.5 * np.eye(6)
    np.testing.assert_allclose(two, oracle, atol=1e-12)


def test_empty_activity():
    act = build_activity([], 5)
    assert not act.gamma.any() and act.support.size == 0


@pytest.mark.parametrize("pairs", [[(5, 1.0)], [(0, 0.0)], [(1, -1.0)]])
def test_activity_errors(pairs):
    with pytest.raises(InvalidParameterError):
        build_activity(pairs, 4)


def test_pure_noise_energy():
    cb = gen_subsampled_fourier(8, 16, 0)
    act = build_activity([], 16)
    D, M = 8, 4
    e = np.array([np.linalg.norm(simulate_block(cb, act, M, 1.0, s).Y) ** 2 for s in range(1000)])
    se = e.std(ddof=1) / math.sqrt(e.size)
    assert abs(e.mean() - D * M) <= 3 * se


def test_energy_identity_with_users():
    cb = gen_subsampled_fourier(8, 32, 1)
    act = build_activity([(2, 1.0), (9, 0.5), (20, 2.0)], 32)
    D, M, s2 = 8, 5, 0.3
    e = np.array([np.linalg.norm(simulate_block(cb, act, M, s2, s).Y) ** 2 for s in range(1000)])
    se = e.std(ddof=1) / math.sqrt(e.size)
    assert abs(e.mean() - M * (D * act.gamma.sum() + D * s2)) <= 3 * se


def test_single_user_snr():
    D, M, g, s2 = 16, 8, 2.0, 0.5
    cb = gen_sphere_uniform(D, 32, 2)
    act = build_activity([(4, g)], 32)
    sig = noise = 0.0
    for s in range(1000):
        rng = np.random.default_rng(s)
        blk = simulate_block(cb, act, M, s2, rng)
        # re-simulate noise-free with the same stream to split the energies
        clean = simulate_block(cb, act, M, 1e-300, np.random.default_rng(s)).Y
        sig += np.linalg.norm(clean) ** 2
        noise += np.linalg.norm(blk.Y - clean) ** 2
    snr = (sig / (D * M)) / (noise / (D * M))
    assert snr == pytest.approx(g / s2, rel=0.05)


def test_sample_covariance_converges():
    cb = gen_sphere_uniform(8, 16, 3)
    act = build_activity([(1, 1.0), (6, 0.7)], 16)
    blk = simulate_block(cb, act, 10_000, 0.2, 11)
    S = model_covariance(cb, act.gamma, 0.2)
    assert np.linalg.norm(sample_covariance(blk) - S) / np.linalg.norm(S) <= 5e-2


def test_seed_determinism():
    cb = gen_sphere_uniform(4, 8, 0)
    act = build_activity([(1, 1.0)], 8)
    a = simulate_block(cb, act, 3, 1.0, 42).Y
    b = simulate_block(cb, act, 3, 1.0, np.random.SeedSequence(42)).Y
    assert np.array_equal(a, b)
    assert not np.array_equal(a, simulate_block(cb, act, 3, 1.0, 43).Y)


def test_block_validation():
    with pytest.raises(InvalidParameterError):
        ReceivedBlock(np.zeros((2, 2)), 0.0)
    cb = gen_sphere_uniform(4, 8, 0)
    with pytest.raises(InvalidParameterError):
        simulate_block(cb, build_activity([], 4), 3, 1.0, 0)


def test_ebn0_fig2_point():
    s2 = ebn0_to_sigma2(0.0, 1, 120, 12)
    assert s2 == pytest.approx(10.0, rel=1e-12)
    assert sigma2_to_snr(s2) == pytest.approx(-10.0, abs=1e-12)


def test_ebn0_fig3b_point():
    assert ebn0_to_sigma2(0.0, 12, 120, 50) == pytest.approx(28.8, rel=1e-12)


def test_noiseless_limit():
    assert ebn0_to_sigma2(math.inf, 1, 120, 12) == 0.0
    assert ebn0_to_sigma2(200.0, 1, 120, 12) < 1e-18


@pytest.mark.parametrize("eb", [-12.5, -3.0, 0.0, 4.2, 17.0])
def test_ebn0_round_trip(eb):
    s2 = ebn0_to_sigma2(eb, 12, 120, 50, 0.8)
    assert sigma2_to_ebn0(s2, 12, 120, 50, 0.8) == pytest.approx(eb, abs=1e-12)


@pytest.mark.parametrize("args", [(0.0, 0, 120, 12), (0.0, 1, -1, 12), (0.0, 1, 120, 0),
                                  (0.0, 1, 120, 12, 0.0)])
def test_ebn0_rejects_nonpositive(args):
    with pytest.raises(InvalidParameterError):
        ebn0_to_sigma2(*args)


def test_power_spec_relations():
    p = PowerSpec.from_ebn0(-2.0, 12, 120, 50)
    assert p.D_total == 1440 and p.R == pytest.approx(50 / 1440)
    # Eb/N0 = SNR / R in linear units
    assert 10 ** (p.ebn0_db / 10) == pytest.approx(10 ** (p.snr_db / 10) / p.R)
    q = PowerSpec.from_snr(p.snr_db, 12, 120, 50)
    assert q.sigma2 == pytest.approx(p.sigma2) and q.ebn0_db == pytest.approx(-2.0)
    assert snr_to_sigma2(-10.0) == pytest.approx(10.0)
