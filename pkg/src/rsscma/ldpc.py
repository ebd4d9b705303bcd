"""Binary LDPC codes: alist I/O, systematic GF(2) encoding and sum-product decoding."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from rsscma.scma import LLR_MAX

# largest double below 1; keeps arctanh finite
_TANH_MAX = np.nextafter(1.0, 0.0)


class AlistError(ValueError):
    """Raised for malformed alist data or unusable parity-check matrices."""


def gf2_rref(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and the pivot column of each nonzero row."""
    r = (np.asarray(a) % 2).astype(np.uint8)
    pivots: list[int] = []
    row = 0
    for col in range(r.shape[1]):
        if row == r.shape[0]:
            break
        hits = np.flatnonzero(r[row:, col])
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            r[[row, p]] = r[[p, row]]
        others = np.flatnonzero(r[:, col])
        others = others[others != row]
        r[others] ^= r[row]
        pivots.append(col)
        row += 1
    return r[:row], pivots


def gf2_rank(a: np.ndarray) -> int:
    return len(gf2_rref(a)[1])


@dataclass(frozen=True, eq=False)
class ParityCheckMatrix:
    """A full-rank binary parity-check matrix with its adjacency lists and encoder."""

    H: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.H)
        if h.ndim != 2 or h.size == 0:
            raise AlistError(f"H must be a non-empty 2-D matrix, got shape {h.shape}")
        if not np.all((h == 0) | (h == 1)):
            raise AlistError("H entries must be 0 or 1")
        h = h.astype(np.uint8)
        if np.any(h.sum(axis=1) == 0):
            raise AlistError(f"all-zero row(s) {np.flatnonzero(h.sum(axis=1) == 0).tolist()}")
        if np.any(h.sum(axis=0) == 0):
            raise AlistError(f"all-zero column(s) {np.flatnonzero(h.sum(axis=0) == 0).tolist()}")
        rref, pivots = gf2_rref(h)
        if len(pivots) < h.shape[0]:
            raise AlistError(
                f"H is rank deficient over GF(2): rank {len(pivots)} < {h.shape[0]} rows; remove dependent checks"
            )
        h.setflags(write=False)
        object.__setattr__(self, "H", h)
        info = np.setdiff1d(np.arange(h.shape[1]), pivots)
        # parity bit at pivots[r] equals the sum of the info bits selected by row r
        gen = rref[:, info]
        for a in (info, gen):
            a.setflags(write=False)
        object.__setattr__(self, "_pivots", np.array(pivots, dtype=np.intp))
        object.__setattr__(self, "info_positions", info)
        object.__setattr__(self, "_parity_gen", gen)

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def k(self) -> int:
        return self.n - self.m

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def col_adjacency(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(c) for c in self.H.T)

    @cached_property
    def row_adjacency(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(r) for r in self.H)

    @cached_property
    def _edges(self) -> "_EdgeLayout":
        return _EdgeLayout.build(self)


def encode(info_bits, code: ParityCheckMatrix) -> np.ndarray:
    """Systematic encoding of ``(..., k)`` info bits into ``(..., n)`` codewords.

    Info bits occupy ``code.info_positions`` in order; the remaining positions
    carry parity.
    """
    u = np.asarray(info_bits)
    if u.shape[-1:] != (code.k,):
        raise ValueError(f"expected {code.k} info bits in the last axis, got shape {u.shape}")
    u = (u % 2).astype(np.uint8)
    c = np.zeros(u.shape[:-1] + (code.n,), dtype=np.uint8)
    c[..., code.info_positions] = u
    c[..., code._pivots] = (u.astype(np.int64) @ code._parity_gen.T.astype(np.int64)) % 2
    return c


def extract_info(codeword_bits, code: ParityCheckMatrix) -> np.ndarray:
    return np.asarray(codeword_bits)[..., code.info_positions]


def syndrome(bits, code: ParityCheckMatrix) -> np.ndarray:
    b = np.asarray(bits)
    if b.shape[-1:] != (code.n,):
        raise ValueError(f"expected {code.n} bits in the last axis, got shape {b.shape}")
    return (b.astype(np.int64) @ code.H.T.astype(np.int64)) % 2


def syndrome_check(bits, code: ParityCheckMatrix):
    """True where H * bits = 0 over GF(2); one flag per vector in the leading axes."""
    ok = ~np.any(syndrome(bits, code), axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


@dataclass(frozen=True)
class _EdgeLayout:
    var: np.ndarray  # (E,) variable node of each edge, edges ordered row by row
    check_slots: np.ndarray  # (m, dc_max) edge ids per check, padded with E
    gather: sp.csr_matrix  # (n, E) sums edge messages into their variable nodes

    @staticmethod
    def build(code: ParityCheckMatrix) -> "_EdgeLayout":
        rows = code.row_adjacency
        var = np.concatenate(rows)
        E = var.size
        dc = max(r.size for r in rows)
        slots = np.full((code.m, dc), E, dtype=np.intp)
        start = 0
        for i, r in enumerate(rows):
            slots[i, : r.size] = np.arange(start, start + r.size)
            start += r.size
        gather = sp.csr_matrix((np.ones(E), (var, np.arange(E))), shape=(code.n, E))
        return _EdgeLayout(var, slots, gather)


@dataclass(frozen=True)
class DecodeResult:
    posterior: np.ndarray  # (..., n) a-posteriori LLRs, positive favours 0
    hard: np.ndarray  # (..., n) hard decisions
    converged: np.ndarray  # (...,) zero syndrome reached
    iterations: np.ndarray  # (...,) iterations run


def _check_update(v2c: np.ndarray, lay: _EdgeLayout) -> np.ndarray:
    """Exact tanh-rule extrinsic messages for every edge of a batch ``(B, E)``."""
    B, E = v2c.shape
    t = np.ones((B, E + 1))
    t[:, :E] = np.tanh(0.5 * v2c)
    slots = t[:, lay.check_slots]  # (B, m, dc)
    pre = np.ones_like(slots)
    suf = np.ones_like(slots)
    pre[:, :, 1:] = np.cumprod(slots[:, :, :-1], axis=2)
    suf[:, :, :-1] = np.cumprod(slots[:, :, :0:-1], axis=2)[:, :, ::-1]
    ext = np.clip(pre * suf, -_TANH_MAX, _TANH_MAX)
    out = np.empty((B, E + 1))
    out[:, lay.check_slots] = 2.0 * np.arctanh(ext)
    return np.clip(out[:, :E], -LLR_MAX, LLR_MAX)


def bp_decode(channel_llrs, code: ParityCheckMatrix, max_iters: int = 50) -> DecodeResult:
    """Flooding sum-product decoding of ``(..., n)`` channel LLRs.

    Every decoder stops as soon as its hard decision satisfies all checks;
    others run ``max_iters`` iterations.  LLRs are clamped to +-LLR_MAX.
    """
    if int(max_iters) != max_iters or max_iters < 1:
        raise ValueError("max_iters must be a positive integer")
    llr = np.asarray(channel_llrs, dtype=float)
    if llr.shape[-1:] != (code.n,):
        raise ValueError(f"expected {code.n} LLRs in the last axis, got shape {llr.shape}")
    batch = llr.shape[:-1]
    llr = np.clip(llr.reshape(-1, code.n), -LLR_MAX, LLR_MAX)
    B = llr.shape[0]
    lay = code._edges
    post = llr.copy()
    hard = (llr < 0).astype(np.uint8)
    converged = np.zeros(B, dtype=bool)
    iters = np.zeros(B, dtype=np.int64)
    active = np.arange(B)
    v2c = llr[:, lay.var]
    for it in range(1, int(max_iters) + 1):
        if active.size == 0:
            break
        c2v = _check_update(v2c, lay)
        total = llr[active] + (lay.gather @ c2v.T).T
        total = np.clip(total, -LLR_MAX, LLR_MAX)
        h = (total < 0).astype(np.uint8)
        post[active] = total
        hard[active] = h
        iters[active] = it
        ok = ~np.any(syndrome(h, code), axis=-1)
        converged[active] = ok
        keep = ~ok
        active = active[keep]
        v2c = np.clip(total[keep][:, lay.var] - c2v[keep], -LLR_MAX, LLR_MAX)
    return DecodeResult(
        post.reshape(batch + (code.n,)),
        hard.reshape(batch + (code.n,)),
        converged.reshape(batch),
        iters.reshape(batch),
    )


def parse_alist(text: str) -> ParityCheckMatrix:
    """Parse the alist format (column lists and row lists, 1-based, optional 0 padding)."""
    lines = [ln.split() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    try:
        ints = [[int(t) for t in ln] for ln in lines]
    except ValueError as exc:
        raise AlistError(f"non-integer token: {exc}") from exc
    if len(ints) < 4 or len(ints[0]) != 2 or len(ints[1]) != 2:
        raise AlistError("alist header must be 'n m' then 'max_col_deg max_row_deg'")
    n, m = ints[0]
    if n < 1 or m < 1:
        raise AlistError("n and m must be positive")
    dv_max, dc_max = ints[1]
    col_deg, row_deg = ints[2], ints[3]
    if len(col_deg) != n or len(row_deg) != m:
        raise AlistError(f"degree lists must have {n} column and {m} row entries")
    if max(col_deg) != dv_max or max(row_deg) != dc_max:
        raise AlistError("maximum degrees disagree with the degree lists")
    body = ints[4:]
    if len(body) != n + m:
        raise AlistError(f"expected {n + m} adjacency lines, found {len(body)}")
    H = np.zeros((m, n), dtype=np.uint8)
    for j, (deg, ln) in enumerate(zip(col_deg, body[:n])):
        idx = [v for v in ln if v != 0]
        if len(idx) != deg or len(ln) > dv_max or len(set(idx)) != deg:
            raise AlistError(f"column {j + 1}: adjacency {ln} inconsistent with degree {deg}")
        if any(not 1 <= v <= m for v in idx):
            raise AlistError(f"column {j + 1}: row index out of range")
        H[np.array(idx) - 1, j] = 1
    H2 = np.zeros_like(H)
    for i, (deg, ln) in enumerate(zip(row_deg, body[n:])):
        idx = [v for v in ln if v != 0]
        if len(idx) != deg or len(ln) > dc_max or len(set(idx)) != deg:
            raise AlistError(f"row {i + 1}: adjacency {ln} inconsistent with degree {deg}")
        if any(not 1 <= v <= n for v in idx):
            raise AlistError(f"row {i + 1}: column index out of range")
        H2[i, np.array(idx) - 1] = 1
    if not np.array_equal(H, H2):
        raise AlistError("column and row adjacency lists describe different matrices")
    return ParityCheckMatrix(H)


def format_alist(H) -> str:
    H = np.asarray(H)
    m, n = H.shape
    cols = [np.flatnonzero(H[:, j]) + 1 for j in range(n)]
    rows = [np.flatnonzero(H[i]) + 1 for i in range(m)]
    dv, dc = max(c.size for c in cols), max(r.size for r in rows)

    def pad(v, width):
        return " ".join(str(x) for x in list(v) + [0] * (width - len(v)))

    out = [f"{n} {m}", f"{dv} {dc}", " ".join(str(c.size) for c in cols), " ".join(str(r.size) for r in rows)]
    out += [pad(c, dv) for c in cols]
    out += [pad(r, dc) for r in rows]
    return "\n".join(out) + "\n"


def load_alist(path) -> ParityCheckMatrix:
    """Load an alist file; ``bundled:NAME`` selects ``NAME.alist`` shipped with the package."""
    path = str(path)
    if path.startswith("bundled:"):
        name = path.split(":", 1)[1]
        return parse_alist(resources.files("rsscma.data").joinpath(f"{name}.alist").read_text())
    return parse_alist(Path(path).read_text())


def write_alist(code, path) -> None:
    H = code.H if isinstance(code, ParityCheckMatrix) else code
    Path(path).write_text(format_alist(H))
