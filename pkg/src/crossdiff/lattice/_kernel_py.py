"""Pure-Python event kernel: the fallback twin of the compiled extension.

Draw-for-draw identical to the compiled kernel: one 64-bit draw selects a
bond (power-of-two rejection), unlike pairs at the maximal rate swap
unconditionally, others consume one more draw compared against a 64-bit
integer threshold.  Equal-label pairs are null events and consume no extra
randomness.
"""

from __future__ import annotations

NAME = "python"

_MASK64 = (1 << 64) - 1


def run_events(sites, state, n_events, bond_mask, n_bonds, thresh, always):
    """Apply n_events candidate events in place; advance state in place."""
    s0, s1, s2, s3 = (int(v) for v in state)
    cells = sites.tolist()
    thr = [[int(v) for v in row] for row in thresh.tolist()]
    alw = [[bool(v) for v in row] for row in always.tolist()]
    n_bonds = int(n_bonds)
    bond_mask = int(bond_mask)
    for _ in range(int(n_events)):
        while True:
            tmp = (s0 + s3) & _MASK64
            r = (((tmp << 23) | (tmp >> 41)) + s0) & _MASK64
            t = (s1 << 17) & _MASK64
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
            k = r & bond_mask
            if k < n_bonds:
                break
        a = cells[k]
        b = cells[k + 1]
        # diagonal of `always` is set: equal labels take a no-op swap
        if not alw[a][b]:
            tmp = (s0 + s3) & _MASK64
            r = (((tmp << 23) | (tmp >> 41)) + s0) & _MASK64
            t = (s1 << 17) & _MASK64
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
            if r >= thr[a][b]:
                continue
        cells[k] = b
        cells[k + 1] = a
    sites[:] = cells
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
