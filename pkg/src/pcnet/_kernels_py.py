"""NumPy implementation of the joint-table kernel (no compiled code)."""

import numpy as np


def joint_table(cards, par_idx, par_cnt, offsets, values, priors):
    cards = [int(n) for n in cards]
    n = len(cards)
    total = int(np.prod(cards, dtype=np.int64)) if n else 1
    out = np.empty((len(priors), total))
    for c in range(len(priors)):
        acc = np.full(cards, priors[c]) if n else np.array(priors[c])
        for i in range(n):
            parents = [int(q) for q in par_idx[c, i, : par_cnt[c, i]]]
            size = int(np.prod([cards[q] for q in parents], dtype=np.int64)) * cards[i]
            cpt = values[offsets[c, i]: offsets[c, i] + size]
            cpt = cpt.reshape([cards[q] for q in parents] + [cards[i]])
            # parents are rank-sorted and below i, so axis order already matches
            shape = [1] * n
            for q in parents:
                shape[q] = cards[q]
            shape[i] = cards[i]
            acc = acc * cpt.reshape(shape)
        out[c] = acc.reshape(-1)
    return out
