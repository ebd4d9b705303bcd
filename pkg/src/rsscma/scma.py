"""SCMA codebooks, encoding and detection.

A codebook set holds, for each of ``J`` users, a ``K x M`` complex matrix whose
columns are the user's codewords.  The ``K x J`` indicator matrix records which
resources each user occupies and therefore defines the factor graph used by the
message passing detector.

Codebook text format
--------------------
Blank lines and lines starting with ``#`` are ignored.  The remaining lines are::

    K J M                      (three positive integers)
    f_11 f_12 ... f_1J         (K rows of J values, each 0 or 1)
    ...
    re im                      (J*M*K lines: user-major, then codeword, then resource)

so user ``j``'s codeword ``m`` occupies ``K`` consecutive ``re im`` lines.  Any
extra token or line is rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from rsscma._mpa_kernel import mpa_kernel as _mpa_kernel

LLR_MAX = 40.0
ML_MAX_HYPOTHESES = 2**24
ENERGY_TOL = 1e-6


class CodebookError(ValueError):
    """Raised for malformed or inconsistent codebook data."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IndicatorMatrix:
    entries: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.entries)
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise CodebookError(f"indicator must be a non-empty 2-D matrix, got shape {f.shape}")
        if not np.all((f == 0) | (f == 1)):
            raise CodebookError("indicator entries must be 0 or 1")
        f = _readonly(f.astype(np.int8))
        if np.any(f.sum(axis=0) == 0):
            raise CodebookError(f"user(s) {np.flatnonzero(f.sum(axis=0) == 0).tolist()} occupy no resource")
        if np.any(f.sum(axis=1) == 0):
            raise CodebookError(f"resource(s) {np.flatnonzero(f.sum(axis=1) == 0).tolist()} carry no user")
        object.__setattr__(self, "entries", f)

    @property
    def K(self) -> int:
        return self.entries.shape[0]

    @property
    def J(self) -> int:
        return self.entries.shape[1]

    @property
    def user_degree(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    @property
    def resource_degree(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def users_on(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.entries[k])

    def resources_of(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.entries[:, j])


@dataclass(frozen=True)
class _ResourceNode:
    users: np.ndarray  # (d,) user indices
    combos: np.ndarray  # (M**d, d) codeword index per user, lexicographic
    points: np.ndarray  # (d, M) codeword entries of those users on this resource
    superposed: np.ndarray  # (M**d,) unit-gain sum of the selected entries


@dataclass(frozen=True, eq=False)
class CodebookSet:
    """Validated SCMA codebooks; ``codewords[j]`` is the ``K x M`` matrix of user j."""

    indicator: IndicatorMatrix
    codewords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.codewords, dtype=complex)
        f = self.indicator.entries
        if c.ndim != 3 or c.shape[:2] != (f.shape[1], f.shape[0]):
            raise CodebookError(f"codewords must have shape (J, K, M) = ({f.shape[1]}, {f.shape[0]}, M), got {c.shape}")
        M = c.shape[2]
        if M < 2 or M & (M - 1):
            raise CodebookError(f"M must be a power of two >= 2, got {M}")
        for j in range(c.shape[0]):
            zero_rows = np.all(c[j] == 0, axis=1)
            bad = np.flatnonzero(zero_rows == f[:, j].astype(bool))
            if bad.size:
                raise CodebookError(
                    f"user {j}: sparsity mismatch with indicator on resource row(s) {bad.tolist()}"
                )
            energy = np.mean(np.sum(np.abs(c[j]) ** 2, axis=0))
            if abs(energy - 1.0) > ENERGY_TOL:
                raise CodebookError(f"user {j}: average codeword energy {energy:.9g} is not 1")
        object.__setattr__(self, "codewords", _readonly(c))

    @property
    def K(self) -> int:
        return self.indicator.K

    @property
    def J(self) -> int:
        return self.indicator.J

    @property
    def M(self) -> int:
        return self.codewords.shape[2]

    @property
    def bits_per_symbol(self) -> int:
        return int(self.M).bit_length() - 1

    @cached_property
    def bit_map(self) -> np.ndarray:
        """Natural binary labels, MSB first: row m holds the bits of index m."""
        nb = self.bits_per_symbol
        m = np.arange(self.M)
        return _readonly(((m[:, None] >> np.arange(nb - 1, -1, -1)) & 1).astype(np.int8))

    @cached_property
    def resource_nodes(self) -> tuple[_ResourceNode, ...]:
        nodes = []
        for k in range(self.K):
            users = self.indicator.users_on(k)
            combos = np.array(list(itertools.product(range(self.M), repeat=users.size)), dtype=np.intp)
            points = self.codewords[users, k, :]
            superposed = points[np.arange(users.size), combos].sum(axis=1)
            nodes.append(_ResourceNode(users, combos, points, superposed))
        return tuple(nodes)

    @cached_property
    def _graph(self) -> "_FactorGraph":
        return _factor_graph(self)

    @cached_property
    def resource_energy(self) -> np.ndarray:
        """Mean of |sum_j x_jk|^2 per resource under uniform independent symbols."""
        mean = self.codewords.mean(axis=2)
        var = np.mean(np.abs(self.codewords - mean[..., None]) ** 2, axis=2)
        return var.sum(axis=0) + np.abs(mean.sum(axis=0)) ** 2


def parse_codebook(text: str) -> CodebookSet:
    lines = [ln.split() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln[0].startswith("#")]
    if not lines:
        raise CodebookError("empty codebook file")
    try:
        if len(lines[0]) != 3:
            raise CodebookError("header must contain exactly K J M")
        K, J, M = (int(t) for t in lines[0])
        if min(K, J, M) < 1:
            raise CodebookError("K, J and M must be positive")
        expected = 1 + K + J * M * K
        if len(lines) != expected:
            raise CodebookError(f"expected {expected} data lines, found {len(lines)}")
        rows = lines[1 : 1 + K]
        if any(len(r) != J for r in rows):
            raise CodebookError(f"each indicator row must have {J} entries")
        f = np.array([[int(t) for t in r] for r in rows])
        pairs = lines[1 + K :]
        if any(len(p) != 2 for p in pairs):
            raise CodebookError("each codeword entry line must be 're im'")
        vals = np.array([complex(float(a), float(b)) for a, b in pairs])
    except ValueError as exc:
        if isinstance(exc, CodebookError):
            raise
        raise CodebookError(f"parse error: {exc}") from exc
    codewords = vals.reshape(J, M, K).transpose(0, 2, 1)
    return CodebookSet(IndicatorMatrix(f), codewords)


def load_codebook_set(path) -> CodebookSet:
    """Load a codebook file.  ``bundled:NAME`` selects a file shipped with the package."""
    path = str(path)
    if path.startswith("bundled:"):
        name = path.split(":", 1)[1]
        res = resources.files("rsscma.data").joinpath(f"codebook_{name}.txt")
        return parse_codebook(res.read_text())
    return parse_codebook(Path(path).read_text())


def format_codebook(cb: CodebookSet, comment: str | None = None) -> str:
    out = []
    if comment:
        out += [f"# {ln}" for ln in comment.splitlines()]
    out.append(f"{cb.K} {cb.J} {cb.M}")
    out += [" ".join(str(int(v)) for v in row) for row in cb.indicator.entries]
    for j in range(cb.J):
        for m in range(cb.M):
            out += [f"{float(x.real)!r} {float(x.imag)!r}" for x in cb.codewords[j, :, m]]
    return "\n".join(out) + "\n"


def scma_encode(symbols, cb: CodebookSet) -> tuple[np.ndarray, np.ndarray]:
    """Map per-user symbol indices to codewords.

    ``symbols`` has shape ``(..., J)``; returns the per-user codewords
    ``(..., J, K)`` and their superposition ``(..., K)``.
    """
    s = np.asarray(symbols)
    if s.shape[-1:] != (cb.J,):
        raise ValueError(f"expected {cb.J} symbols in the last axis, got shape {s.shape}")
    if np.any((s < 0) | (s >= cb.M)):
        raise ValueError(f"symbol indices must lie in [0, {cb.M})")
    per_user = cb.codewords[np.arange(cb.J), :, s]
    return per_user, per_user.sum(axis=-2)


@dataclass(frozen=True)
class SymbolPosterior:
    """MPA output: ``log_probs``/``probs`` are ``(..., J, M)``, ``llrs`` ``(..., J, log2 M)``."""

    log_probs: np.ndarray
    llrs: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    @property
    def hard(self) -> np.ndarray:
        return np.argmax(self.log_probs, axis=-1)


def _lse(a: np.ndarray, axis) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


def posterior_to_bit_llr(p, bit_map) -> np.ndarray:
    """Bit LLRs log P(b=0)/P(b=1) from symbol posteriors, clamped to +-LLR_MAX.

    ``p`` is either a :class:`SymbolPosterior` or an array of probabilities with
    symbols along the last axis.
    """
    bit_map = np.asarray(bit_map)
    if isinstance(p, SymbolPosterior):
        logp = p.log_probs
    else:
        with np.errstate(divide="ignore"):
            logp = np.log(np.asarray(p, dtype=float))
    out = np.empty(logp.shape[:-1] + (bit_map.shape[1],))
    for b in range(bit_map.shape[1]):
        zero = bit_map[:, b] == 0
        with np.errstate(invalid="ignore"):
            out[..., b] = _lse(logp[..., zero], -1) - _lse(logp[..., ~zero], -1)
    out = np.nan_to_num(out, nan=0.0, posinf=LLR_MAX, neginf=-LLR_MAX)
    return np.clip(out, -LLR_MAX, LLR_MAX)


def _prepare_gains(y: np.ndarray, gains, cb: CodebookSet) -> tuple[np.ndarray, bool]:
    g = np.asarray(gains, dtype=complex)
    try:
        if g.ndim == y.ndim + 1:
            g = np.broadcast_to(g, y.shape[:-1] + (cb.J, cb.K))
            return g.reshape(-1, cb.J, cb.K), True
        return np.broadcast_to(g, y.shape).reshape(-1, cb.K), False
    except ValueError:
        raise ValueError(f"gains shape {g.shape} incompatible with y shape {y.shape} (J={cb.J}, K={cb.K})") from None


def _check_inputs(y, cb, noise_var):
    y = np.asarray(y, dtype=complex)
    if y.ndim < 1 or y.shape[-1] != cb.K:
        raise ValueError(f"received vector must have {cb.K} resources in its last axis, got {y.shape}")
    nv = np.asarray(noise_var, dtype=float)
    if np.any(~(nv > 0)):
        raise ValueError("noise variance must be positive")
    nv = np.broadcast_to(nv, y.shape).reshape(-1, cb.K)
    return y, nv


def _log_likelihoods(y2, g2, per_user, nv2, cb) -> list[np.ndarray]:
    """Per resource node: (B, M**d) log-likelihood of every local codeword combination."""
    out = []
    for k, node in enumerate(cb.resource_nodes):
        if per_user:
            pts = g2[:, node.users, k][:, :, None] * node.points[None]  # (B, d, M)
            mu = pts[:, np.arange(node.users.size), node.combos].sum(axis=-1)
        else:
            mu = g2[:, k, None] * node.superposed[None, :]
        out.append(-np.abs(y2[:, k, None] - mu) ** 2 / nv2[:, k, None])
    return out


@dataclass(frozen=True)
class _FactorGraph:
    """Flattened factor graph consumed by the compiled MPA kernel."""

    combo_off: np.ndarray  # (K+1,) offsets into the concatenated combination axis
    combos: np.ndarray  # (C, dmax) local codeword index of each slot, -1 padded
    edge_off: np.ndarray  # (K+1,) edges of resource k are edge_off[k]:edge_off[k+1]
    user_edges: np.ndarray  # (J, umax) edge ids per user, -1 padded


def _factor_graph(cb: CodebookSet) -> _FactorGraph:
    nodes = cb.resource_nodes
    dmax = max(n.users.size for n in nodes)
    combo_off = np.cumsum([0] + [n.combos.shape[0] for n in nodes])
    combos = np.full((combo_off[-1], dmax), -1, dtype=np.int64)
    edge_off = np.cumsum([0] + [n.users.size for n in nodes])
    per_user = [[] for _ in range(cb.J)]
    for k, n in enumerate(nodes):
        combos[combo_off[k] : combo_off[k + 1], : n.users.size] = n.combos
        for p, u in enumerate(n.users):
            per_user[u].append(edge_off[k] + p)
    umax = max(len(e) for e in per_user)
    user_edges = np.full((cb.J, umax), -1, dtype=np.int64)
    for u, e in enumerate(per_user):
        user_edges[u, : len(e)] = e
    return _FactorGraph(combo_off.astype(np.int64), combos, edge_off.astype(np.int64), user_edges)


def mpa_detect(y, cb: CodebookSet, gains, noise_var, iterations: int = 10) -> SymbolPosterior:
    """Log-domain sum-product detection on the SCMA factor graph.

    ``y`` has shape ``(..., K)``.  ``gains`` either broadcasts against ``y`` (one
    channel seen by every user, the downlink case) or has shape ``(..., J, K)``
    for per-user channels.  ``noise_var`` is the complex noise variance, scalar
    or broadcastable to ``y``.  Resource updates enumerate all ``M**d`` local
    combinations with exact log-sum-exp; exactly ``iterations`` rounds run.
    """
    if int(iterations) != iterations or iterations < 1:
        raise ValueError("iterations must be a positive integer")
    y, nv2 = _check_inputs(y, cb, noise_var)
    batch = y.shape[:-1]
    y2 = y.reshape(-1, cb.K)
    g2, per_user = _prepare_gains(y, gains, cb)
    loglik = np.ascontiguousarray(np.concatenate(_log_likelihoods(y2, g2, per_user, nv2, cb), axis=1))
    fg = cb._graph
    logpost = _mpa_kernel(
        loglik, fg.combo_off, fg.combos, fg.edge_off, fg.user_edges, cb.M, int(iterations)
    )
    logpost = logpost.reshape(batch + (cb.J, cb.M))
    llrs = posterior_to_bit_llr(SymbolPosterior(logpost, np.empty(0)), cb.bit_map)
    return SymbolPosterior(logpost, llrs)


def _all_hypotheses(cb: CodebookSet) -> np.ndarray:
    return np.array(list(itertools.product(range(cb.M), repeat=cb.J)), dtype=np.intp)


def ml_detect(y, cb: CodebookSet, gains, noise_var=None, chunk: int = 256) -> np.ndarray:
    """Exhaustive maximum-likelihood detection over all ``M**J`` symbol vectors.

    Ties resolve to the lexicographically smallest index vector.  A scalar
    ``noise_var`` does not change the minimiser; a per-resource array weights
    each squared distance term by its inverse.
    """
    if cb.M**cb.J > ML_MAX_HYPOTHESES:
        raise ValueError(f"M**J = {cb.M}**{cb.J} exceeds the ML enumeration guard of 2**24")
    y = np.asarray(y, dtype=complex)
    if y.ndim < 1 or y.shape[-1] != cb.K:
        raise ValueError(f"received vector must have {cb.K} resources in its last axis")
    batch = y.shape[:-1]
    y2 = y.reshape(-1, cb.K)
    g2, per_user = _prepare_gains(y, gains, cb)
    if noise_var is None or np.ndim(noise_var) == 0:
        w2 = np.ones_like(y2.real)
    else:
        _, nv2 = _check_inputs(y, cb, noise_var)
        w2 = 1.0 / nv2
    hyp = _all_hypotheses(cb)  # (H, J)
    cw = cb.codewords[np.arange(cb.J), :, hyp]  # (H, J, K)
    out = np.empty((y2.shape[0], cb.J), dtype=np.intp)
    sup = cw.sum(axis=1)  # (H, K)
    for start in range(0, y2.shape[0], chunk):
        sl = slice(start, start + chunk)
        if per_user:
            mu = np.einsum("bjk,hjk->bhk", g2[sl], cw)
        else:
            mu = g2[sl, None, :] * sup[None]
        dist = np.sum(np.abs(y2[sl, None, :] - mu) ** 2 * w2[sl, None, :], axis=-1)
        out[sl] = hyp[np.argmin(dist, axis=1)]
    return out.reshape(batch + (cb.J,))
