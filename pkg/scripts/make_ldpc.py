"""Generate the bundled n=256 LDPC parity-check matrices with progressive edge growth.

Every column gets degree 3.  Each new edge joins the check node that is
farthest from the current variable node in the graph built so far (or
unreachable), preferring the lowest check degree and breaking remaining ties
at random.  Seeds are retried until H has full rank over GF(2).
"""

import sys
from collections import deque
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from rsscma.ldpc import format_alist, gf2_rank  # noqa: E402

N = 256
INFO_LENGTHS = (83, 120, 161)
COL_DEGREE = 3


def _reachable_checks(v, var_adj, chk_adj, m):
    """BFS depth of every check node from variable ``v`` (-1 if unreachable)."""
    depth = np.full(m, -1)
    seen_v = {v}
    frontier = deque([(v, 0)])
    while frontier:
        u, d = frontier.popleft()
        for c in var_adj[u]:
            if depth[c] < 0:
                depth[c] = d
                for w in chk_adj[c]:
                    if w not in seen_v:
                        seen_v.add(w)
                        frontier.append((w, d + 1))
    return depth


def peg(n, m, dv, rng):
    var_adj = [[] for _ in range(n)]
    chk_adj = [[] for _ in range(m)]
    deg = np.zeros(m, dtype=int)
    for v in range(n):
        for e in range(dv):
            if e == 0:
                cand = np.flatnonzero(deg == deg.min())
            else:
                depth = _reachable_checks(v, var_adj, chk_adj, m)
                free = np.flatnonzero(depth < 0)
                if free.size:
                    cand = free
                else:
                    cand = np.flatnonzero(depth == depth.max())
                cand = np.setdiff1d(cand, var_adj[v])
                cand = cand[deg[cand] == deg[cand].min()]
            c = int(rng.choice(cand))
            var_adj[v].append(c)
            chk_adj[c].append(v)
            deg[c] += 1
    H = np.zeros((m, n), dtype=np.uint8)
    for v, cs in enumerate(var_adj):
        H[cs, v] = 1
    return H


def main(out_dir):
    out_dir = Path(out_dir)
    for k in INFO_LENGTHS:
        m = N - k
        for seed in range(100):
            H = peg(N, m, COL_DEGREE, np.random.default_rng(seed))
            if gf2_rank(H) == m and H.sum(axis=1).min() > 0:
                break
        else:
            raise RuntimeError(f"no full-rank matrix found for k={k}")
        print(f"n={N} k={k} rate={k / N:.4f} seed={seed} row degrees {H.sum(axis=1).min()}..{H.sum(axis=1).max()}")
        (out_dir / f"ldpc_n{N}_k{k}.alist").write_text(format_alist(H))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src/rsscma/data")
