"""Downlink channel: superposition, fading, noise, equalization and SIC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rsscma.qpsk import qpsk_modulate
from rsscma.rate_split import Phase2Kind, SplitConfig, phase_plan

H_MIN = 1e-6
_SUM_TOL = 1e-12

# Common-stream power fraction from max-min-fair allocation, keyed by Eb/N0 in dB.
MMF_TABLE: dict[float, float] = {
    0.0: 0.9098,
    5.0: 0.9114,
    10.0: 0.9156,
    15.0: 0.9252,
    20.0: 0.9409,
    25.0: 0.9585,
    30.0: 0.9734,
}

CHANNEL_KINDS = ("rayleigh", "awgn")


@dataclass(frozen=True)
class PowerAllocation:
    """Power split between the common and private streams; ``p_p`` defaults to ``1 - p_c``."""

    p_c: float
    p_p: float | None = None

    def __post_init__(self):
        p_p = 1.0 - self.p_c if self.p_p is None else self.p_p
        object.__setattr__(self, "p_p", float(p_p))
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError(f"P_c must lie in [0, 1], got {self.p_c}")
        if p_p < 0.0 or abs(self.p_c + p_p - 1.0) > _SUM_TOL:
            raise ValueError(f"P_c + P_p must equal 1, got {self.p_c} + {p_p}")
        if self.p_c > 0 and p_p > 0 and self.p_c <= p_p:
            raise ValueError(f"P_c must exceed P_p when both streams are active, got {self.p_c} <= {p_p}")


PRIVATE_ONLY = PowerAllocation(0.0)
COMMON_ONLY = PowerAllocation(1.0)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-resource gains ``(..., K)`` seen by one receiver and the complex noise variance."""

    gains: np.ndarray
    noise_var: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("channel gains must be finite")
        if not self.noise_var >= 0:
            raise ValueError("noise variance must be non-negative")


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    shape = tuple(np.atleast_1d(shape).tolist())
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def draw_channel(rng: np.random.Generator, shape, kind: str = "rayleigh") -> np.ndarray:
    if kind == "rayleigh":
        return complex_normal(rng, shape)
    if kind == "awgn":
        return np.ones(shape, dtype=complex)
    raise ValueError(f"unknown channel kind {kind!r}; expected one of {CHANNEL_KINDS}")


def superpose(common, privates, pa: PowerAllocation) -> np.ndarray:
    """sqrt(P_c) * common + sqrt(P_p) * sum of the private codewords.

    ``common`` is ``(..., K)`` and ``privates`` ``(..., J, K)``.
    """
    common = np.asarray(common, dtype=complex)
    privates = np.asarray(privates, dtype=complex)
    if privates.shape[-1] != common.shape[-1]:
        raise ValueError(f"resource count mismatch: common {common.shape}, privates {privates.shape}")
    return np.sqrt(pa.p_c) * common + np.sqrt(pa.p_p) * privates.sum(axis=-2)


def receive(s, gains, noise_var: float, unit_noise) -> np.ndarray:
    """y = h * s + sqrt(noise_var) * w for pre-drawn unit-variance noise ``w``."""
    return np.asarray(gains) * s + np.sqrt(noise_var) * np.asarray(unit_noise)


def transmit(s, ch: ChannelRealization, rng: np.random.Generator) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    y_shape = np.broadcast_shapes(s.shape, np.shape(ch.gains))
    return receive(s, ch.gains, ch.noise_var, complex_normal(rng, y_shape))


def zf_equalize(y, h, noise_var: float = 1.0, h_min: float = H_MIN):
    """Per-resource zero forcing.

    Returns ``(y / h, noise_var / |h|^2, erased)``.  Resources whose gain
    magnitude is below ``h_min`` are erased: their output is 0 with infinite
    variance so any LLR computed from them is 0.
    """
    y = np.asarray(y, dtype=complex)
    h = np.broadcast_to(np.asarray(h, dtype=complex), y.shape)
    mag2 = np.abs(h) ** 2
    erased = np.abs(h) < h_min
    safe = np.where(erased, 1.0, h)
    y_eq = np.where(erased, 0.0, y / safe)
    nv = np.where(erased, np.inf, noise_var / np.where(erased, 1.0, mag2))
    return y_eq, nv, erased


def soft_sic(y, h, pa: PowerAllocation, soft_common) -> np.ndarray:
    """Remove the reconstructed common signal: y - sqrt(P_c) * h * s_hat."""
    y = np.asarray(y, dtype=complex)
    soft_common = np.asarray(soft_common, dtype=complex)
    if soft_common.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: y {y.shape}, common {soft_common.shape}")
    return y - np.sqrt(pa.p_c) * np.asarray(h) * soft_common


def hard_sic(y, h, pa: PowerAllocation, hard_common_bits) -> np.ndarray:
    return soft_sic(y, h, pa, qpsk_modulate(hard_common_bits))


def mmf_power_lookup(ebn0_db: float, table: dict[float, float] | None = None) -> PowerAllocation:
    """Nearest tabulated point; a tie between two points picks the lower Eb/N0."""
    table = MMF_TABLE if table is None else table
    keys = sorted(table)
    best = min(keys, key=lambda x: (abs(x - ebn0_db), x))
    return PowerAllocation(table[best])


def frame_energy_per_resource(
    superposed_uses: int, common_only_uses: int, private_only_uses: int, pa: PowerAllocation, private_energy: float
) -> float:
    """Average transmitted energy per resource element over the uses of a frame.

    Superposed uses carry ``P_c + P_p * E_priv``, private-only uses ``E_priv`` and
    common-only uses 1, where ``E_priv`` is the mean per-resource energy of the
    superposed SCMA codewords.
    """
    total_uses = superposed_uses + common_only_uses + private_only_uses
    if total_uses <= 0:
        raise ValueError("a frame needs at least one channel use")
    total = superposed_uses * (pa.p_c + pa.p_p * private_energy)
    total += common_only_uses * 1.0 + private_only_uses * private_energy
    return total / total_uses


def mean_energy_per_resource(cfg: SplitConfig, pa: PowerAllocation, resource_energy) -> float:
    """:func:`frame_energy_per_resource` for the phase plan of ``cfg``."""
    plan = phase_plan(cfg)
    common_only = plan.phase2_uses if plan.phase2_kind is Phase2Kind.COMMON_ONLY else 0
    private_only = plan.phase2_uses if plan.phase2_kind is Phase2Kind.PRIVATE_ONLY else 0
    return frame_energy_per_resource(
        plan.phase1_uses, common_only, private_only, pa, float(np.mean(resource_energy))
    )


def bits_per_resource_use(cfg: SplitConfig, bits_per_symbol: int = 2) -> float:
    """Information bits per frame divided by ``K`` times the channel uses per frame.

    Common symbols are QPSK (2 bits) and private symbols carry ``bits_per_symbol``.
    """
    bits = 2 * cfg.K * cfg.l_c + bits_per_symbol * cfg.J * cfg.l_p
    return bits / (cfg.K * phase_plan(cfg).total_uses)


def noise_var_from_ebn0(ebn0_db: float, energy_per_resource: float, bits_per_re: float) -> float:
    """Complex noise variance: E_s / (bits per resource element * 10^(Eb/N0 / 10))."""
    if energy_per_resource <= 0 or bits_per_re <= 0:
        raise ValueError("energy and bit load per resource element must be positive")
    return energy_per_resource / (bits_per_re * 10.0 ** (ebn0_db / 10.0))


def ebn0_to_noise_var(
    ebn0_db: float,
    cfg: SplitConfig,
    pa: PowerAllocation,
    resource_energy=None,
    bits_per_symbol: int = 2,
) -> float:
    """Noise variance for an uncoded split frame at the given Eb/N0.

    ``resource_energy`` defaults to ``J / K`` per resource, the value for any
    set of unit-energy codebooks.
    """
    if resource_energy is None:
        resource_energy = cfg.J / cfg.K
    return noise_var_from_ebn0(
        ebn0_db,
        mean_energy_per_resource(cfg, pa, resource_energy),
        bits_per_resource_use(cfg, bits_per_symbol),
    )
