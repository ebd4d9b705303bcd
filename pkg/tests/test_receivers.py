import numpy as np
import pytest

from rsscma.channel import PowerAllocation
from rsscma.config import SimConfig
from rsscma.ldpc import bp_decode, encode, extract_info
from rsscma.qpsk import POINTS, llr_to_bit_probabilities, qpsk_llr, qpsk_modulate
from rsscma.receivers import CodedLayout, SicMode, rx1_coded, rx1_uncoded, rx2_coded
from rsscma.scma import mpa_detect, posterior_to_bit_llr
from rsscma.sim import build_link, count_errors, detect, make_chunk

PA = PowerAllocation(0.9156)


def _chunk(cfg, frames, nv, pa=PA, point=0):
    link = build_link(cfg)
    return link, make_chunk(link, point, range(frames), pa, nv)


@pytest.mark.parametrize("alpha,N", [(0.5, 2), (0.25, 4), (0.75, 4), (0.0, 2), (1.0, 2)])
@pytest.mark.parametrize("sic", ["soft", "hard"])
def test_uncoded_noiseless_is_error_free(alpha, N, sic):
    cfg = SimConfig(alpha=alpha, N=N, sic=sic, seed=4)
    link, chunk = _chunk(cfg, 64, 1e-9)
    out = detect(link, chunk, PA, 1e-9)
    c = count_errors(link, chunk, out)
    assert c.symbol_errors.sum() == 0 and c.bit_errors.sum() == 0
    for j in range(6):
        expected = 2 * cfg.N if j < 4 else 2 * link.split.l_p
        assert out.combined(j).shape == (64, expected)


def test_zero_common_estimate_is_plain_mpa(cb64):
    cfg = SimConfig(alpha=0.5, N=2, seed=9)
    link, chunk = _chunk(cfg, 32, 0.05)
    out = rx1_uncoded(
        chunk.y, chunk.gains, 0.05, PA, cb64, link.split, genie_common=np.zeros_like(chunk.common_points)
    )
    post = mpa_detect(chunk.y, cb64, np.sqrt(PA.p_p) * chunk.gains, 0.05)
    own = post.hard[:, np.arange(6), :, np.arange(6)]  # (J, B, U)
    np.testing.assert_array_equal(out.private_symbols, np.moveaxis(own, 0, 1))


def test_soft_and_hard_agree_when_common_is_certain(cb64):
    cfg = SimConfig(alpha=0.5, N=2, seed=2, channel="awgn")
    link, chunk = _chunk(cfg, 64, 1e-6)
    soft = rx1_uncoded(chunk.y, chunk.gains, 1e-6, PA, cb64, link.split, SicMode.SOFT)
    hard = rx1_uncoded(chunk.y, chunk.gains, 1e-6, PA, cb64, link.split, SicMode.HARD)
    np.testing.assert_array_equal(soft.private_symbols, hard.private_symbols)
    assert soft.diagnostics["sic_residual_energy"] < 1e-12


def test_uncoded_receiver_is_deterministic():
    cfg = SimConfig(alpha=0.5, N=2, seed=21)
    link, a = _chunk(cfg, 32, 0.08)
    _, b = _chunk(cfg, 32, 0.08)
    oa, ob = detect(link, a, PA, 0.08), detect(link, b, PA, 0.08)
    np.testing.assert_array_equal(oa.common_bits, ob.common_bits)
    np.testing.assert_array_equal(oa.private_bits, ob.private_bits)


def test_perfect_sic_bound():
    cfg = SimConfig(alpha=0.5, N=2, seed=5)
    link = build_link(cfg)
    pa = link.power(15.0)
    nv = link.noise_var(15.0, pa)
    soft = genie = 0
    for start in range(0, 10_000, 500):
        chunk = make_chunk(link, 0, range(start, start + 500), pa, nv)
        soft += count_errors(link, chunk, detect(link, chunk, pa, nv)).symbol_errors.sum()
        genie += count_errors(link, chunk, detect(link, chunk, pa, nv, genie=True)).symbol_errors.sum()
    assert genie <= soft


def _coded_cfg(**kw):
    return SimConfig(scenario="coded-rs-scma", seed=kw.pop("seed", 1), **kw)


@pytest.mark.parametrize("rx", [rx1_coded, rx2_coded])
def test_coded_noiseless(rx, cb64):
    link, chunk = _chunk(_coded_cfg(), 4, 1e-9)
    out = rx(chunk.y, chunk.gains, 1e-9, PA, cb64, link.layout)
    np.testing.assert_array_equal(out.common_bits, chunk.common_bits)
    np.testing.assert_array_equal(out.private_bits, chunk.private_bits)
    assert out.diagnostics["common_converged"].all()
    assert out.diagnostics["private_converged"].all()
    for j in range(6):
        expected = link.layout.common.k + link.layout.private.k if j < 4 else link.layout.private.k
        assert out.combined(j).shape == (4, expected)


def test_rx2_cancels_exactly_with_saturated_common(cb64):
    link, chunk = _chunk(_coded_cfg(), 2, 1e-9)
    out = rx2_coded(chunk.y, chunk.gains, 1e-9, PA, cb64, link.layout)
    assert out.diagnostics["sic_residual_energy"] < 1e-12


def test_rx1_private_llr_bookkeeping(cb64):
    """Re-derive the private decoder input with explicit loops and compare decisions."""
    cfg = _coded_cfg(seed=3, channel="awgn")
    nv = 0.01
    link, chunk = _chunk(cfg, 2, nv)
    lay = link.layout
    out = rx1_coded(chunk.y, chunk.gains, nv, PA, cb64, lay)
    Us, Up, b = lay.superposed_uses, lay.private_uses, cb64.bits_per_symbol
    for f in range(2):
        for j in range(6):
            y = chunk.y[f, j, :Up].copy()
            h = chunk.gains[f, j, :Up]
            s_hat = np.zeros((Us, 4), dtype=complex)
            for t in range(Us):
                for k in range(4):
                    z = y[t, k] / h[t, k] / np.sqrt(PA.p_c)
                    llr = qpsk_llr(z, nv / abs(h[t, k]) ** 2 / PA.p_c / 2).llr
                    p0 = llr_to_bit_probabilities(llr)
                    probs = [p0[0] * p0[1], p0[0] * (1 - p0[1]), (1 - p0[0]) * (1 - p0[1]), (1 - p0[0]) * p0[1]]
                    s_hat[t, k] = sum(p * s for p, s in zip(probs, POINTS))
            y[:Us] -= np.sqrt(PA.p_c) * h[:Us] * s_hat
            g = h.copy()
            g[:Us] *= np.sqrt(PA.p_p)
            stream = []
            for t in range(Up):
                post = mpa_detect(y[t], cb64, g[t], nv)
                stream.extend(posterior_to_bit_llr(post.probs[j], cb64.bit_map))
            llr = np.array(stream[: lay.private.n])
            assert len(stream) == Up * b
            res = bp_decode(llr, lay.private)
            np.testing.assert_array_equal(out.private_bits[f, j], extract_info(res.hard, lay.private))
            assert out.diagnostics["private_converged"][f, j] == res.converged


def test_decoder_posterior_is_more_confident_on_corrected_bits(code120):
    rng = np.random.default_rng(8)
    u = rng.integers(0, 2, (300, 120))
    c = encode(u, code120)
    x = qpsk_modulate(c.reshape(300, 128, 2))
    nv = 0.45
    y = x + np.sqrt(nv / 2) * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    ch = qpsk_llr(y, nv / 2).llr.reshape(300, 256)
    res = bp_decode(ch, code120)
    ok = res.converged & np.all(res.hard == c, axis=1)
    corrected = ok[:, None] & ((ch < 0) != (c == 1))
    assert corrected.sum() > 50
    sign = 1 - 2 * c.astype(int)
    # confidence in the transmitted value: larger posterior likelihood ratio on every corrected bit
    assert np.all((res.posterior * sign)[corrected] > (ch * sign)[corrected])


def test_coded_layout_uses(code120):
    lay = CodedLayout(code120, code120, 2)
    assert (lay.common_uses, lay.private_uses, lay.superposed_uses, lay.total_uses) == (128, 128, 128, 128)
