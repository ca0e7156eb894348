"""Time the compiled and NumPy joint-table kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 7] [--number 20]

Cases: the machining leaf-cover model, plus synthetic models with more
features and concepts. The two backends are also checked for agreement.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from pcnet import fixtures, kernels
from pcnet.abstraction import leaf_cover, propagate_all
from pcnet.builder import build_categorization_pid


def machining_case():
    net = propagate_all(fixtures.load("machining"))
    pid = build_categorization_pid(net, leaf_cover(net))
    pos = {f.id: i for i, f in enumerate(pid.features)}
    slices = [[(tuple(pos[p] for p in pid.feature_net[f.id].parents),
                pid.feature_net[f.id].cpt[k]) for f in pid.features]
              for k in range(len(pid.cover))]
    return [f.card for f in pid.features], slices, np.asarray(pid.concept_prior)


def synthetic_case(n_features, n_concepts, card=3, seed=0):
    rng = np.random.default_rng(seed)
    cards = [card] * n_features
    slices = []
    for _ in range(n_concepts):
        per = []
        for i in range(n_features):
            ps = tuple(sorted(rng.choice(i, size=min(i, 2), replace=False).tolist())) if i else ()
            raw = rng.random([card] * (len(ps) + 1)) + 0.05
            per.append((ps, raw / raw.sum(axis=-1, keepdims=True)))
        slices.append(per)
    priors = rng.random(n_concepts)
    return cards, slices, priors / priors.sum()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args(argv)

    cases = {
        "machining leaves": machining_case(),
        "8 features x 6 concepts": synthetic_case(8, 6),
        "10 features x 8 concepts": synthetic_case(10, 8, seed=1),
    }
    backends = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled kernel not built; timing the NumPy backend only")

    print(f"{'case':<26}{'cells':>10}" + "".join(f"{b + ' ms':>13}" for b in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for name, case in cases.items():
        cells = len(case[2]) * int(np.prod(case[0]))
        times = {}
        for b in backends:
            t = timeit.repeat(lambda b=b: kernels.joint_table(*case, backend=b),
                              repeat=args.repeat, number=args.number)
            times[b] = min(t) / args.number * 1e3
        if len(backends) == 2:
            a = kernels.joint_table(*case, backend="cython")
            n = kernels.joint_table(*case, backend="numpy")
            assert np.allclose(a, n, rtol=1e-12, atol=1e-15), name
        row = f"{name:<26}{cells:>10}" + "".join(f"{times[b]:>13.3f}" for b in backends)
        if len(backends) == 2:
            row += f"{times['numpy'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
