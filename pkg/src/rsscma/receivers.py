"""Receiver pipelines for the split downlink.

All pipelines work on the signals of every receiver at once.  ``y`` and
``gains`` have shape ``(..., R, U, K)``: receiver ``r`` (which is also user
``r``) observes ``U`` channel uses on ``K`` resources.  Common symbols of user
``k`` travel on resource ``k``; private symbols of every user are SCMA
codewords.  Use ``t`` is superposed while both streams are active and carries a
single stream afterwards.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from rsscma.channel import PowerAllocation, zf_equalize
from rsscma.ldpc import ParityCheckMatrix, bp_decode, extract_info
from rsscma.qpsk import LlrFrame, qpsk_hard_demod, qpsk_llr, qpsk_modulate, soft_symbols
from rsscma.rate_split import SplitConfig
from rsscma.scma import LLR_MAX, CodebookSet, SymbolPosterior, mpa_detect


class SicMode(enum.Enum):
    SOFT = "soft"
    HARD = "hard"


@dataclass(frozen=True)
class ReceiverOutput:
    """Recovered bits of every user, each receiver reporting its own user.

    ``common_bits`` is ``(..., K, Lc)`` for the users that split their message and
    ``private_bits`` is ``(..., J, Lp)``.  Uncoded outputs hold raw symbol bits,
    coded outputs hold decoded information bits.
    """

    common_bits: np.ndarray
    private_bits: np.ndarray
    private_symbols: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def combined(self, user: int) -> np.ndarray:
        """Message of ``user``: common part first, then private part."""
        K = self.common_bits.shape[-2]
        priv = self.private_bits[..., user, :]
        if user >= K:
            return priv
        return np.concatenate([self.common_bits[..., user, :], priv], axis=-1)


@dataclass(frozen=True)
class _CommonStage:
    hard: np.ndarray  # (..., R, Uc, K, 2)
    llr: np.ndarray  # (..., R, Uc, K, 2)


def _diag(a: np.ndarray, rx_axis: int, user_axis: int, users: int) -> np.ndarray:
    """Return ``a[..., r, ..., r, ...]`` for ``r < users``, receiver axis kept in place."""
    pos = a.ndim + rx_axis
    a = np.moveaxis(a, user_axis, -1)[..., :users]
    a = np.moveaxis(a, rx_axis, -1)[..., :users]
    return np.moveaxis(np.diagonal(a, axis1=-2, axis2=-1), -1, pos)


def _common_stage(y, gains, noise_var, pa, cb, n_common: int, n_super: int) -> _CommonStage:
    """QPSK LLRs and hard decisions of the common symbols on every resource.

    On superposed uses the equalized signal is scaled by 1/sqrt(P_c).  The LLRs
    use the equalized noise variance only; the private streams are not counted
    as noise.
    """
    yc, hc = y[..., :n_common, :], gains[..., :n_common, :]
    y_eq, nv_eq, _ = zf_equalize(yc, hc, noise_var)
    scale = np.ones(n_common)
    if n_super:
        scale[:n_super] = np.sqrt(pa.p_c)
    scale = scale[:, None]
    z = y_eq / scale
    var = nv_eq / scale**2
    # qpsk_llr expects the per-dimension variance
    frame = qpsk_llr(z, var / 2.0)
    return _CommonStage(qpsk_hard_demod(z), frame.llr)


def _private_stage(
    y, gains, noise_var, pa, cb, n_private: int, n_super: int, s_hat, iterations: int, residual_noise: bool
) -> tuple[SymbolPosterior, dict]:
    """SIC on the superposed uses followed by MPA on all private uses."""
    yp = np.array(y[..., :n_private, :], dtype=complex)
    hp = np.array(gains[..., :n_private, :], dtype=complex)
    nv = np.full(yp.shape, float(noise_var))
    diag = {}
    if n_super:
        hs = gains[..., :n_super, :]
        cancel = np.sqrt(pa.p_c) * hs * s_hat
        yp[..., :n_super, :] = y[..., :n_super, :] - cancel
        hp[..., :n_super, :] = np.sqrt(pa.p_p) * hs
        resid = pa.p_c * np.abs(hs) ** 2 * (1.0 - np.abs(s_hat) ** 2)
        diag["sic_residual_energy"] = float(np.mean(resid))
        if residual_noise:
            nv[..., :n_super, :] += resid
    post = mpa_detect(yp, cb, hp, nv, iterations)
    diag["mpa_iterations"] = iterations
    return post, diag


def _soft_common(stage: _CommonStage, n_super: int, mode: SicMode, genie=None):
    if genie is not None:
        return np.asarray(genie)[..., None, :n_super, :]
    if mode is SicMode.SOFT:
        return soft_symbols(LlrFrame(stage.llr[..., :n_super, :, :]))
    return qpsk_modulate(stage.hard[..., :n_super, :, :])


def rx1_uncoded(
    y,
    gains,
    noise_var: float,
    pa: PowerAllocation,
    cb: CodebookSet,
    cfg: SplitConfig,
    sic: SicMode | str = SicMode.SOFT,
    iterations: int = 10,
    residual_noise: bool = False,
    genie_common=None,
) -> ReceiverOutput:
    """Uncoded receiver: ZF + QPSK demapping, soft or hard SIC, then MPA.

    ``genie_common`` (``(..., l_c, K)`` constellation points) replaces the
    reconstructed common signal with the transmitted one.
    """
    mode = SicMode(sic)
    y = np.asarray(y, dtype=complex)
    gains = np.broadcast_to(np.asarray(gains, dtype=complex), y.shape)
    lc, lp = cfg.l_c, cfg.l_p
    n_super = min(lc, lp)
    K, J = cb.K, cb.J
    batch = y.shape[:-3]
    diag: dict = {}
    if lc:
        stage = _common_stage(y, gains, noise_var, pa, cb, lc, n_super)
        own = _diag(stage.hard, rx_axis=-4, user_axis=-2, users=K)  # (..., K, lc, 2)
        common_bits = own.reshape(batch + (K, 2 * lc))
    else:
        stage = None
        common_bits = np.zeros(batch + (K, 0), dtype=np.int8)
    if lp:
        s_hat = _soft_common(stage, n_super, mode, genie_common) if n_super else None
        post, d = _private_stage(y, gains, noise_var, pa, cb, lp, n_super, s_hat, iterations, residual_noise)
        diag.update(d)
        sym = _diag(post.hard, rx_axis=-3, user_axis=-1, users=J)  # (..., J, lp)
    else:
        sym = np.zeros(batch + (J, 0), dtype=np.intp)
    private_bits = cb.bit_map[sym].reshape(batch + (J, lp * cb.bits_per_symbol))
    return ReceiverOutput(common_bits, private_bits, sym, diag)


def scma_receiver(y, gains, noise_var: float, cb: CodebookSet, iterations: int = 10) -> ReceiverOutput:
    """Plain SCMA downlink: MPA on every use, no common stream."""
    y = np.asarray(y, dtype=complex)
    post = mpa_detect(y, cb, gains, noise_var, iterations)
    sym = _diag(post.hard, rx_axis=-3, user_axis=-1, users=cb.J)
    batch = y.shape[:-3]
    bits = cb.bit_map[sym].reshape(batch + (cb.J, -1))
    return ReceiverOutput(np.zeros(batch + (0, 0), dtype=np.int8), bits, sym, {"mpa_iterations": iterations})


def qpsk_receiver(y, gains, noise_var: float) -> ReceiverOutput:
    """Orthogonal QPSK: user ``k`` alone on resource ``k``, ZF and nearest-point decisions."""
    y = np.asarray(y, dtype=complex)
    y_eq, _, _ = zf_equalize(y, gains, noise_var)
    hard = qpsk_hard_demod(y_eq)  # (..., R, U, K, 2)
    R = y.shape[-3]
    own = _diag(hard, rx_axis=-4, user_axis=-2, users=R)
    batch = y.shape[:-3]
    bits = own.reshape(batch + (R, -1))
    return ReceiverOutput(bits, np.zeros(batch + (R, 0), dtype=np.int8))


@dataclass(frozen=True)
class CodedLayout:
    """Channel uses occupied by one common and one private codeword per user."""

    common: ParityCheckMatrix
    private: ParityCheckMatrix
    bits_per_symbol: int

    @property
    def common_uses(self) -> int:
        return -(-self.common.n // 2)

    @property
    def private_uses(self) -> int:
        return -(-self.private.n // self.bits_per_symbol)

    @property
    def superposed_uses(self) -> int:
        return min(self.common_uses, self.private_uses)

    @property
    def total_uses(self) -> int:
        return max(self.common_uses, self.private_uses)


def _stitch(llr, n: int) -> np.ndarray:
    """Flatten per-use LLRs ``(..., U, b)`` in transmission order and keep the first ``n``."""
    flat = llr.reshape(llr.shape[:-2] + (-1,))
    return flat[..., :n]


def _pad_known_zero(llr, width: int) -> np.ndarray:
    pad = width - llr.shape[-1]
    if pad == 0:
        return llr
    return np.concatenate([llr, np.full(llr.shape[:-1] + (pad,), LLR_MAX)], axis=-1)


def _coded_front(y, gains, noise_var, pa, cb, layout):
    y = np.asarray(y, dtype=complex)
    gains = np.broadcast_to(np.asarray(gains, dtype=complex), y.shape)
    stage = _common_stage(y, gains, noise_var, pa, cb, layout.common_uses, layout.superposed_uses)
    return y, gains, stage


def _decode_private(post, cb, layout, max_iters):
    own = _diag(post.llrs, rx_axis=-4, user_axis=-2, users=cb.J)  # (..., J, Up, b)
    res = bp_decode(_stitch(own, layout.private.n), layout.private, max_iters)
    return extract_info(res.hard, layout.private), res


def rx1_coded(
    y,
    gains,
    noise_var: float,
    pa: PowerAllocation,
    cb: CodebookSet,
    layout: CodedLayout,
    iterations: int = 10,
    bp_iters: int = 50,
    residual_noise: bool = False,
) -> ReceiverOutput:
    """Coded receiver with SIC driven by the QPSK demapper LLRs.

    Each receiver decodes its own common codeword and its own private codeword
    after buffering the whole block.
    """
    y, gains, stage = _coded_front(y, gains, noise_var, pa, cb, layout)
    n_super = layout.superposed_uses
    s_hat = soft_symbols(LlrFrame(stage.llr[..., :n_super, :, :]))
    post, diag = _private_stage(
        y, gains, noise_var, pa, cb, layout.private_uses, n_super, s_hat, iterations, residual_noise
    )
    own_c = _diag(stage.llr, rx_axis=-4, user_axis=-2, users=cb.K)  # (..., K, Uc, 2)
    res_c = bp_decode(_stitch(own_c, layout.common.n), layout.common, bp_iters)
    priv_info, res_p = _decode_private(post, cb, layout, bp_iters)
    diag.update(common_converged=res_c.converged, private_converged=res_p.converged)
    return ReceiverOutput(extract_info(res_c.hard, layout.common), priv_info, None, diag)


def rx2_coded(
    y,
    gains,
    noise_var: float,
    pa: PowerAllocation,
    cb: CodebookSet,
    layout: CodedLayout,
    iterations: int = 10,
    bp_iters: int = 50,
    residual_noise: bool = False,
) -> ReceiverOutput:
    """Coded receiver with SIC driven by the common decoder's a-posteriori LLRs.

    Every receiver decodes all ``K`` common codewords; the posterior LLRs of all
    coded bits rebuild the soft common symbols that are cancelled before MPA.
    """
    y, gains, stage = _coded_front(y, gains, noise_var, pa, cb, layout)
    n_super, Uc = layout.superposed_uses, layout.common_uses
    per_res = np.moveaxis(stage.llr, -2, -3)  # (..., R, K, Uc, 2)
    res_c = bp_decode(_stitch(per_res, layout.common.n), layout.common, bp_iters)  # (..., R, K, n)
    post_llr = _pad_known_zero(res_c.posterior, 2 * Uc)
    post_llr = post_llr.reshape(post_llr.shape[:-1] + (Uc, 2))
    s_hat = soft_symbols(LlrFrame(np.moveaxis(post_llr, -3, -2)[..., :n_super, :, :]))  # (..., R, n_super, K)
    post, diag = _private_stage(
        y, gains, noise_var, pa, cb, layout.private_uses, n_super, s_hat, iterations, residual_noise
    )
    own_hard = _diag(res_c.hard, rx_axis=-3, user_axis=-2, users=cb.K)  # (..., K, n)
    own_conv = np.diagonal(res_c.converged[..., : cb.K, :], axis1=-2, axis2=-1)
    priv_info, res_p = _decode_private(post, cb, layout, bp_iters)
    diag.update(common_converged=own_conv, private_converged=res_p.converged)
    return ReceiverOutput(extract_info(own_hard, layout.common), priv_info, None, diag)
