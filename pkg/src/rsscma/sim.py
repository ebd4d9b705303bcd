"""Monte-Carlo link simulation with reproducible per-frame random streams.

Each frame ``f`` of sweep point ``p`` draws from three generators spawned from
``SeedSequence([seed, p, f])``, in this order of purpose:

1. message bits, one flat draw in user order (common part, then private part),
2. channel gains, shape ``(receivers, uses, K)`` (Rayleigh only),
3. unit complex noise, shape ``(receivers, uses, K)``.

Frames are processed in fixed-size chunks and the stop rule is checked after
every chunk in frame order, so results do not depend on the thread count.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from rsscma.channel import (
    PowerAllocation,
    complex_normal,
    draw_channel,
    frame_energy_per_resource,
    mmf_power_lookup,
    noise_var_from_ebn0,
    receive,
    superpose,
)
from rsscma.config import SimConfig
from rsscma.ldpc import encode, load_alist
from rsscma.qpsk import qpsk_modulate
from rsscma.rate_split import SplitConfig, overloading_factor
from rsscma.receivers import (
    CodedLayout,
    ReceiverOutput,
    SicMode,
    qpsk_receiver,
    rx1_coded,
    rx1_uncoded,
    rx2_coded,
    scma_receiver,
)
from rsscma.scma import CodebookSet, load_codebook_set, scma_encode


@dataclass(frozen=True)
class Chunk:
    """Transmitted bits and received signals of a batch of frames."""

    common_bits: np.ndarray  # (B, Kc_users, Lc) information bits
    private_bits: np.ndarray  # (B, Jp_users, Lp)
    common_points: np.ndarray  # (B, Uc, K) transmitted common symbols (unscaled)
    y: np.ndarray  # (B, R, U, K)
    gains: np.ndarray  # (B, R, U, K)


@dataclass(frozen=True)
class Link:
    """Frame structure shared by transmitter, receivers and error counting."""

    cfg: SimConfig
    cb: CodebookSet | None
    K: int
    J: int
    common_users: int
    private_users: int
    receivers: int
    common_len: int  # information bits per common block
    private_len: int  # information bits per private block
    common_uses: int
    private_uses: int
    symbol_width: tuple[int, int]  # bits per counted symbol (common, private)
    layout: CodedLayout | None = None
    split: SplitConfig | None = None

    @property
    def uses(self) -> int:
        return max(self.common_uses, self.private_uses)

    @property
    def superposed_uses(self) -> int:
        return min(self.common_uses, self.private_uses)

    @property
    def coded(self) -> bool:
        return self.layout is not None

    @property
    def users(self) -> int:
        return max(self.common_users, self.private_users)

    def user_lengths(self, j: int) -> tuple[int, int]:
        return (
            self.common_len if j < self.common_users else 0,
            self.private_len if j < self.private_users else 0,
        )

    @cached_property
    def bits_per_frame(self) -> int:
        return sum(sum(self.user_lengths(j)) for j in range(self.users))

    @property
    def overloading(self) -> float:
        if self.cfg.scenario == "uncoded-rs-scma":
            return overloading_factor(self.cfg.alpha, self.J, self.K)
        if self.cfg.scenario == "coded-rs-scma":
            return overloading_factor(self.common_uses / (self.common_uses + self.private_uses), self.J, self.K)
        if self.cfg.scenario == "scma-baseline":
            return self.J / self.K
        return 1.0

    def power(self, ebn0_db: float) -> PowerAllocation:
        if self.cfg.pc is not None:
            return PowerAllocation(self.cfg.pc)
        return mmf_power_lookup(ebn0_db)

    def noise_var(self, ebn0_db: float, pa: PowerAllocation) -> float:
        if self.cfg.noise_var is not None:
            return float(self.cfg.noise_var)
        e_priv = self.J / self.K if self.cb is None else float(np.mean(self.cb.resource_energy))
        energy = frame_energy_per_resource(
            self.superposed_uses,
            self.common_uses - self.superposed_uses,
            self.private_uses - self.superposed_uses,
            pa,
            e_priv,
        )
        return noise_var_from_ebn0(ebn0_db, energy, self.bits_per_frame / (self.K * self.uses))


def build_link(cfg: SimConfig) -> Link:
    """Resolve codebooks and codes for ``cfg``; raises ``ValueError`` or ``OSError``."""
    sc = cfg.scenario
    if sc == "qpsk-baseline":
        cb = load_codebook_set(cfg.codebook)
        K = cb.K
        return Link(cfg, None, K, cb.J, K, 0, K, 2 * cfg.N, 0, cfg.N, 0, (2, 2))
    cb = load_codebook_set(cfg.codebook)
    K, J, b = cb.K, cb.J, cb.bits_per_symbol
    if sc == "scma-baseline":
        return Link(cfg, cb, K, J, 0, J, J, 0, b * cfg.N, 0, cfg.N, (2, b))
    if sc == "uncoded-rs-scma":
        split = SplitConfig(cfg.alpha, cfg.N, J, K)
        return Link(cfg, cb, K, J, K, J, J, 2 * split.l_c, b * split.l_p, split.l_c, split.l_p, (2, b), split=split)
    layout = CodedLayout(load_alist(cfg.ldpc_common), load_alist(cfg.ldpc_private), b)
    return Link(
        cfg, cb, K, J, K, J, J, layout.common.k, layout.private.k,
        layout.common_uses, layout.private_uses, (2, 2), layout=layout,
    )


def frame_generators(seed: int, point: int, frame: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence([seed, point, frame])
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def _to_points(bits: np.ndarray, uses: int) -> np.ndarray:
    """Common bits ``(B, users, L)`` to QPSK points ``(B, uses, users)``, zero padded."""
    B, users, L = bits.shape
    padded = np.zeros((B, users, 2 * uses), dtype=np.int8)
    padded[..., :L] = bits
    return np.swapaxes(qpsk_modulate(padded.reshape(B, users, uses, 2)), 1, 2)


def _to_symbols(bits: np.ndarray, uses: int, b: int) -> np.ndarray:
    """Private bits ``(B, J, L)`` to SCMA indices ``(B, uses, J)``, natural binary, MSB first."""
    B, J, L = bits.shape
    padded = np.zeros((B, J, b * uses), dtype=np.int64)
    padded[..., :L] = bits
    weights = 1 << np.arange(b - 1, -1, -1)
    return np.swapaxes(padded.reshape(B, J, uses, b) @ weights, 1, 2)


def make_chunk(link: Link, point: int, frames: range, pa: PowerAllocation, noise_var: float) -> Chunk:
    cfg, K, R, U = link.cfg, link.K, link.receivers, link.uses
    B = len(frames)
    common = np.zeros((B, link.common_users, link.common_len), dtype=np.int8)
    private = np.zeros((B, link.private_users, link.private_len), dtype=np.int8)
    gains = np.ones((B, R, U, K), dtype=complex)
    noise = np.empty((B, R, U, K), dtype=complex)
    for i, f in enumerate(frames):
        g_msg, g_ch, g_noise = frame_generators(cfg.seed, point, f)
        flat = g_msg.integers(0, 2, size=link.bits_per_frame, dtype=np.int8)
        pos = 0
        for j in range(link.users):
            lc, lp = link.user_lengths(j)
            if lc:
                common[i, j] = flat[pos : pos + lc]
            if lp:
                private[i, j] = flat[pos + lc : pos + lc + lp]
            pos += lc + lp
        if cfg.channel == "rayleigh":
            gains[i] = draw_channel(g_ch, (R, U, K), "rayleigh")
        noise[i] = complex_normal(g_noise, (R, U, K))
    if link.coded:
        c_code = encode(common, link.layout.common)
        p_code = encode(private, link.layout.private)
    else:
        c_code, p_code = common, private
    s = np.zeros((B, U, K), dtype=complex)
    Uc, Up, Us = link.common_uses, link.private_uses, link.superposed_uses
    points = np.zeros((B, Uc, K), dtype=complex)
    if link.common_users:
        points[..., : link.common_users] = _to_points(c_code, Uc)
    if link.private_users:
        sym = _to_symbols(p_code, Up, link.cb.bits_per_symbol)
        per_user, priv_sum = scma_encode(sym, link.cb)
    if Us:
        s[:, :Us] = superpose(points[:, :Us], per_user[:, :Us], pa)
    if Uc > Us:
        s[:, Us:Uc] = points[:, Us:Uc]
    if Up > Us:
        s[:, Us:Up] = priv_sum[:, Us:Up]
    y = receive(s[:, None], gains, noise_var, noise)
    return Chunk(common, private, points, y, gains)


def detect(link: Link, chunk: Chunk, pa: PowerAllocation, noise_var: float, variant: str | None = None,
           genie: bool = False) -> ReceiverOutput:
    """Run the configured receiver; ``variant`` overrides ``sic`` (uncoded) or ``receiver`` (coded)."""
    cfg = link.cfg
    if cfg.scenario == "qpsk-baseline":
        return qpsk_receiver(chunk.y, chunk.gains, noise_var)
    if cfg.scenario == "scma-baseline":
        return scma_receiver(chunk.y, chunk.gains, noise_var, link.cb, cfg.mpa_iterations)
    if cfg.scenario == "uncoded-rs-scma":
        return rx1_uncoded(
            chunk.y, chunk.gains, noise_var, pa, link.cb, link.split,
            sic=SicMode(variant or cfg.sic), iterations=cfg.mpa_iterations,
            residual_noise=cfg.residual_noise,
            genie_common=chunk.common_points if genie else None,
        )
    rx = rx2_coded if (variant or cfg.receiver) == "rx2" else rx1_coded
    return rx(
        chunk.y, chunk.gains, noise_var, pa, link.cb, link.layout,
        iterations=cfg.mpa_iterations, bp_iters=cfg.bp_max_iters, residual_noise=cfg.residual_noise,
    )


def _symbol_errors(true: np.ndarray, est: np.ndarray, width: int) -> tuple[np.ndarray, int]:
    """Per-user symbol errors over groups of ``width`` bits; a short tail is one symbol."""
    L = true.shape[-1]
    nsym = -(-L // width)
    pad = nsym * width - L
    diff = true != est
    if pad:
        diff = np.concatenate([diff, np.zeros(diff.shape[:-1] + (pad,), dtype=bool)], axis=-1)
    errs = diff.reshape(diff.shape[:-1] + (nsym, width)).any(axis=-1).sum(axis=-1)
    return errs, nsym


@dataclass
class Counts:
    """Per-user error counters; merging is plain addition."""

    users: int
    frames: int = 0
    symbols: np.ndarray = None
    symbol_errors: np.ndarray = None
    bits: np.ndarray = None
    bit_errors: np.ndarray = None
    blocks: np.ndarray = None
    block_errors: np.ndarray = None

    def __post_init__(self):
        for name in ("symbols", "symbol_errors", "bits", "bit_errors", "blocks", "block_errors"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.users, dtype=np.int64))

    def add(self, other: "Counts") -> None:
        self.frames += other.frames
        for name in ("symbols", "symbol_errors", "bits", "bit_errors", "blocks", "block_errors"):
            setattr(self, name, getattr(self, name) + getattr(other, name))


def count_errors(link: Link, chunk: Chunk, out: ReceiverOutput) -> Counts:
    B = chunk.y.shape[0]
    c = Counts(link.users, frames=B)
    wc, wp = link.symbol_width
    for j in range(link.users):
        bad_block = np.zeros(B, dtype=bool)
        n_bits = 0
        for true, est, width in (
            (chunk.common_bits, out.common_bits, wc),
            (chunk.private_bits, out.private_bits, wp),
        ):
            if j >= true.shape[1] or true.shape[2] == 0:
                continue
            t, e = true[:, j], est[:, j]
            errs, nsym = _symbol_errors(t, e, width)
            c.symbol_errors[j] += errs.sum()
            c.symbols[j] += nsym * B
            bit_err = (t != e).sum(axis=-1)
            c.bit_errors[j] += bit_err.sum()
            n_bits += t.shape[-1]
            bad_block |= bit_err > 0
        if n_bits:
            c.bits[j] += n_bits * B
            c.blocks[j] += B
            c.block_errors[j] += bad_block.sum()
    return c


@dataclass(frozen=True)
class PointResult:
    ebn0_db: float
    noise_var: float
    pc: float
    overloading: float
    seed: int
    counts: Counts
    wall_time: float

    @property
    def trials(self) -> int:
        return self.counts.frames

    def _ratio(self, num: str, den: str) -> float:
        d = int(getattr(self.counts, den).sum())
        return int(getattr(self.counts, num).sum()) / d if d else 0.0

    @property
    def ser(self) -> float:
        return self._ratio("symbol_errors", "symbols")

    @property
    def ber(self) -> float:
        return self._ratio("bit_errors", "bits")

    @property
    def bler(self) -> float:
        return self._ratio("block_errors", "blocks")


@dataclass
class SimReport:
    config: SimConfig
    points: list[PointResult] = field(default_factory=list)


def _stop_count(link: Link, counts: Counts) -> int:
    return int(counts.block_errors.sum() if link.coded else counts.symbol_errors.sum())


def run_point(link: Link, point: int, ebn0_db: float, threads: int = 1) -> PointResult:
    cfg = link.cfg
    pa = link.power(ebn0_db)
    nv = link.noise_var(ebn0_db, pa)
    total = Counts(link.users)
    t0 = time.perf_counter()

    def job(start):
        frames = range(start, min(start + cfg.chunk_size, cfg.max_trials))
        chunk = make_chunk(link, point, frames, pa, nv)
        return count_errors(link, chunk, detect(link, chunk, pa, nv))

    starts = iter(range(0, cfg.max_trials, cfg.chunk_size))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        done = False
        while not done:
            wave = [s for _, s in zip(range(max(1, threads)), starts)]
            if not wave:
                break
            for counts in pool.map(job, wave):
                total.add(counts)
                if _stop_count(link, total) >= cfg.min_errors or total.frames >= cfg.max_trials:
                    done = True
                    break
    return PointResult(ebn0_db, nv, pa.p_c, link.overloading, cfg.seed, total, time.perf_counter() - t0)


def run_sweep(cfg: SimConfig, threads: int = 1, progress=None) -> SimReport:
    link = build_link(cfg)
    report = SimReport(cfg)
    for p, ebn0 in enumerate(cfg.ebn0_db):
        res = run_point(link, p, ebn0, threads)
        report.points.append(res)
        if progress is not None:
            progress(res)
    return report


CSV_COLUMNS = (
    "ebn0_db", "trials", "ser", "ber", "bler", "pc", "lambda", "seed",
    "symbol_errors", "symbols", "bit_errors", "bits", "block_errors", "blocks", "noise_var",
)


def format_csv(report: SimReport) -> str:
    """CSV text: '#' metadata lines, a header row and one row per sweep point.

    Wall-clock times are left out so identical runs give identical bytes.
    """
    cfg = report.config
    buf = io.StringIO()
    buf.write("# rsscma simulation report\n")
    buf.write(f"# config_sha256: {cfg.digest()}\n")
    buf.write(f"# config: {cfg.canonical_json()}\n")
    buf.write("# eb/n0 counts information bits only; ser/ber/bler average over all users\n")
    w = csv.writer(buf, lineterminator="\r\n")
    users = report.points[0].counts.users if report.points else 0
    header = list(CSV_COLUMNS)
    if cfg.per_user:
        for j in range(users):
            header += [f"user{j}_symbol_errors", f"user{j}_bit_errors", f"user{j}_block_errors"]
    w.writerow(header)
    for p in report.points:
        c = p.counts
        row = [
            repr(p.ebn0_db), p.trials, repr(p.ser), repr(p.ber), repr(p.bler), repr(p.pc),
            repr(p.overloading), p.seed, int(c.symbol_errors.sum()), int(c.symbols.sum()),
            int(c.bit_errors.sum()), int(c.bits.sum()), int(c.block_errors.sum()), int(c.blocks.sum()),
            repr(p.noise_var),
        ]
        if cfg.per_user:
            for j in range(users):
                row += [int(c.symbol_errors[j]), int(c.bit_errors[j]), int(c.block_errors[j])]
        w.writerow(row)
    return buf.getvalue()


def emit_csv(report: SimReport, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        fh.write(format_csv(report))


def read_csv(path) -> list[dict]:
    """Parse a report CSV back into rows of numbers (ints where exact)."""
    with open(Path(path), newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        row = {}
        for k, v in rec.items():
            try:
                row[k] = int(v)
            except ValueError:
                row[k] = float(v)
        rows.append(row)
    return rows
