"""Generate the bundled reference codebooks.

Each user's M=4 codebook spreads a QPSK symbol over its two resources: the
first occupied resource carries q[m], the second q[perm[m]] scaled so the two
dimensions have unequal power.  Users sharing a resource get distinct phase
rotations.  These are placeholders with the right sparsity; any optimised
codebook with the same indicator can replace them.
"""

import itertools
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from rsscma.scma import CodebookSet, IndicatorMatrix, format_codebook  # noqa: E402

F_6x4 = np.array(
    [
        [1, 0, 1, 0, 1, 0],
        [0, 1, 1, 0, 0, 1],
        [1, 0, 0, 1, 0, 1],
        [0, 1, 0, 1, 1, 0],
    ]
)

F_6x15 = np.array(
    [
        [1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0],
        [1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 1, 0, 0],
        [0, 1, 0, 1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0],
        [0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0],
        [0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 0, 0, 1],
        [0, 0, 1, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0, 0, 1],
    ]
)

QPSK = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2)


def build(F, split=0.7, perm=(0, 2, 3, 1), step=None):
    K, J = F.shape
    d = F.sum(axis=0).max()
    dv = F.sum(axis=1).max()
    step = step if step is not None else (np.pi / 2) / dv
    cw = np.zeros((J, K, 4), dtype=complex)
    amp = np.sqrt(np.array([split, 1 - split]))
    slot = np.zeros(K, dtype=int)
    strong = np.zeros(K, dtype=int)
    for j in range(J):
        rows = np.flatnonzero(F[:, j])
        assert rows.size == d == 2
        # the stronger dimension goes to the resource with fewer strong entries so far
        if strong[rows[1]] < strong[rows[0]]:
            rows = rows[::-1]
        strong[rows[0]] += 1
        for t, k in enumerate(rows):
            rot = np.exp(1j * step * slot[k])
            slot[k] += 1
            seq = QPSK if t == 0 else QPSK[list(perm)]
            cw[j, k] = amp[t] * rot * seq
    return CodebookSet(IndicatorMatrix(F), cw)


def min_distance(cb):
    hyp = np.array(list(itertools.product(range(cb.M), repeat=cb.J)))
    sup = cb.codewords[np.arange(cb.J), :, hyp].sum(axis=1)
    best = np.inf
    for i in range(0, len(sup), 512):
        d = np.sum(np.abs(sup[i : i + 512, None] - sup[None]) ** 2, axis=-1)
        d[d == 0] = np.inf
        best = min(best, d.min())
    return best


def main(out_dir):
    out_dir = Path(out_dir)
    best = None
    for split in (0.5, 0.6, 0.65, 0.7, 0.75, 0.8):
        for perm in itertools.permutations(range(4)):
            if perm[0] != 0:
                continue
            cb = build(F_6x4, split, perm)
            dmin = min_distance(cb)
            if best is None or dmin > best[0] + 1e-12:
                best = (dmin, split, perm)
    dmin, split, perm = best
    print(f"6x4: split={split} perm={perm} dmin^2={dmin:.4f}")
    cb = build(F_6x4, split, perm)
    (out_dir / "codebook_6x4.txt").write_text(
        format_codebook(
            cb,
            "Reference 6x4 SCMA codebook set (J=6 users, K=4 resources, M=4).\n"
            f"Rotated-QPSK placeholder design: power split {split}, permutation {perm}.",
        )
    )
    cb15 = build(F_6x15, split, perm)
    (out_dir / "codebook_6x15.txt").write_text(
        format_codebook(
            cb15,
            "Reference 6x15 SCMA codebook set (J=15 users, K=6 resources, M=4).\n"
            f"Rotated-QPSK placeholder design: power split {split}, permutation {perm}.",
        )
    )


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src/rsscma/data")
