"""Message splitting into common/private streams and the overloading-factor analysis."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

_INT_TOL = 1e-9


class Phase2Kind(enum.Enum):
    NONE = "none"
    COMMON_ONLY = "common-only"
    PRIVATE_ONLY = "private-only"


@dataclass(frozen=True)
class SplitConfig:
    """Splitting factor ``alpha`` applied to ``N``-symbol messages of ``J`` users over ``K`` resources.

    The first ``K`` users are split into a common prefix of ``l_c`` symbols and a
    private suffix of ``l_p`` symbols.  Users ``K+1..J`` send ``l_p`` private
    symbols only.
    """

    alpha: float
    N: int
    J: int
    K: int

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.N < 1 or self.K < 1 or self.J < self.K:
            raise ValueError(f"need N >= 1 and J >= K >= 1, got N={self.N}, J={self.J}, K={self.K}")
        lc = self.alpha * self.N
        if abs(lc - round(lc)) > _INT_TOL:
            raise ValueError(f"alpha*N = {lc} is not a whole number of symbols")

    @property
    def l_c(self) -> int:
        return int(round(self.alpha * self.N))

    @property
    def l_p(self) -> int:
        return self.N - self.l_c

    @property
    def K_c(self) -> int:
        return self.K

    @property
    def K_p(self) -> int:
        return self.J

    def message_length(self, user: int) -> int:
        return self.N if user < self.K else self.l_p

    @property
    def overloading_factor(self) -> float:
        return overloading_factor(self.alpha, self.J, self.K)


@dataclass(frozen=True)
class PhasePlan:
    phase1_uses: int
    phase2_uses: int
    phase2_kind: Phase2Kind
    lambda1: float
    lambda2: float | None

    @property
    def total_uses(self) -> int:
        return self.phase1_uses + self.phase2_uses


def split_messages(users, cfg: SplitConfig) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Split per-user symbol streams into ``K`` common and ``J`` private streams.

    ``users[j]`` must hold ``N`` symbols for ``j < K`` and ``l_p`` symbols for the
    private-only users.  Common streams are the first ``l_c`` symbols.
    """
    if len(users) != cfg.J:
        raise ValueError(f"expected {cfg.J} user streams, got {len(users)}")
    common, private = [], []
    for j, stream in enumerate(users):
        stream = np.asarray(stream)
        if stream.shape[0] != cfg.message_length(j):
            raise ValueError(f"user {j}: stream length {stream.shape[0]} != {cfg.message_length(j)}")
        if j < cfg.K:
            common.append(stream[: cfg.l_c])
            private.append(stream[cfg.l_c :])
        else:
            private.append(stream)
    return common, private


def combine_messages(common_est, private_est, cfg: SplitConfig) -> list[np.ndarray]:
    """Inverse of :func:`split_messages`: common part first, then private part."""
    if len(common_est) != cfg.K or len(private_est) != cfg.J:
        raise ValueError(f"expected {cfg.K} common and {cfg.J} private streams")
    out = []
    for j in range(cfg.J):
        p = np.asarray(private_est[j])
        if p.shape[0] != cfg.l_p:
            raise ValueError(f"user {j}: private estimate length {p.shape[0]} != l_p = {cfg.l_p}")
        if j < cfg.K:
            c = np.asarray(common_est[j])
            if c.shape[0] != cfg.l_c:
                raise ValueError(f"user {j}: common estimate length {c.shape[0]} != l_c = {cfg.l_c}")
            out.append(np.concatenate([c, p]))
        else:
            out.append(p)
    return out


def phase_plan(cfg: SplitConfig) -> PhasePlan:
    lc, lp = cfg.l_c, cfg.l_p
    lam1 = (cfg.K_c + cfg.K_p) / cfg.K
    if lc == lp:
        kind, lam2 = Phase2Kind.NONE, None
    elif lp > lc:
        kind, lam2 = Phase2Kind.PRIVATE_ONLY, cfg.K_p / cfg.K
    else:
        kind, lam2 = Phase2Kind.COMMON_ONLY, cfg.K_c / cfg.K
    return PhasePlan(min(lc, lp), abs(lc - lp), kind, lam1, lam2)


def overloading_factor(alpha: float, J: int, K: int) -> float:
    """Symbol-weighted average of the phase overloading factors for splitting factor ``alpha``.

    Phase 1 (superposed) lasts ``min(alpha, 1-alpha)`` and carries ``K + J``
    symbols per use; phase 2 lasts ``|1 - 2 alpha|`` and carries only the
    dominant stream (``J`` private or ``K`` common symbols).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    Kc, Kp = K, J
    lam1 = (Kc + Kp) / K
    if alpha < 0.5:
        Kdom = Kp
    elif alpha > 0.5:
        Kdom = Kc
    else:
        return lam1
    lam2 = Kdom / K
    w1 = min(alpha, 1 - alpha) * (Kc + Kp)
    w2 = abs(1 - 2 * alpha) * Kdom
    return (w1 * lam1 + w2 * lam2) / (w1 + w2)


def complexity_ratio(M: int, resource_degree: int) -> float:
    """Receiver cost relative to plain SCMA: ((M + 1) + M**d) / M**d."""
    if M < 2 or resource_degree < 1:
        raise ValueError("need M >= 2 and resource_degree >= 1")
    full = M**resource_degree
    return ((M + 1) + full) / full


def symbols_per_frame(cfg: SplitConfig) -> int:
    return cfg.K * cfg.l_c + cfg.J * cfg.l_p
