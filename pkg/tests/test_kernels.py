import itertools
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from pcnet import kernels

needs_ext = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernel not built")


def random_case(rng, n_features, n_concepts):
    cards = [int(rng.integers(2, 4)) for _ in range(n_features)]
    slices = []
    for _ in range(n_concepts):
        per = []
        for i in range(n_features):
            k = int(rng.integers(0, min(i, 2) + 1))
            ps = tuple(sorted(rng.choice(i, size=k, replace=False).tolist())) if k else ()
            shape = [cards[p] for p in ps] + [cards[i]]
            raw = rng.random(shape) + 0.05
            per.append((ps, raw / raw.sum(axis=-1, keepdims=True)))
        slices.append(per)
    priors = rng.random(n_concepts)
    return cards, slices, priors / priors.sum()


def naive(cards, slices, priors):
    out = np.zeros((len(priors),) + tuple(cards))
    for c, per in enumerate(slices):
        for x in itertools.product(*(range(n) for n in cards)):
            p = priors[c]
            for i, (ps, cpt) in enumerate(per):
                p *= cpt[tuple(x[q] for q in ps) + (x[i],)]
            out[(c,) + x] = p
    return out


@pytest.mark.parametrize("seed", range(12))
def test_numpy_backend_matches_naive(seed):
    rng = np.random.default_rng(seed)
    case = random_case(rng, int(rng.integers(1, 5)), int(rng.integers(1, 4)))
    got = kernels.joint_table(*case, backend="numpy")
    np.testing.assert_allclose(got, naive(*case), atol=1e-15, rtol=1e-13)
    assert got.sum() == pytest.approx(1.0, abs=1e-12)


@needs_ext
@pytest.mark.parametrize("seed", range(12))
def test_backends_agree(seed):
    rng = np.random.default_rng(100 + seed)
    case = random_case(rng, int(rng.integers(1, 7)), int(rng.integers(1, 5)))
    a = kernels.joint_table(*case, backend="cython")
    b = kernels.joint_table(*case, backend="numpy")
    np.testing.assert_allclose(a, b, atol=1e-15, rtol=1e-12)


@needs_ext
def test_backends_agree_on_machining(machining_p):
    from pcnet.abstraction import leaf_cover
    from pcnet.builder import build_categorization_pid

    pid = build_categorization_pid(machining_p, leaf_cover(machining_p))
    pos = {f.id: i for i, f in enumerate(pid.features)}
    slices = [[(tuple(pos[p] for p in pid.feature_net[f.id].parents),
                pid.feature_net[f.id].cpt[k]) for f in pid.features]
              for k in range(len(pid.cover))]
    cards = [f.card for f in pid.features]
    a = kernels.joint_table(cards, slices, pid.concept_prior, backend="cython")
    b = kernels.joint_table(cards, slices, pid.concept_prior, backend="numpy")
    np.testing.assert_allclose(a, b, atol=1e-17, rtol=1e-12)
    assert math.isclose(a.sum(), 1.0, abs_tol=1e-12)


def test_parents_must_precede():
    cpt = np.full((2, 2), 0.5)
    with pytest.raises(ValueError):
        kernels.joint_table([2, 2], [[((1,), cpt), ((), np.full(2, 0.5))]], [1.0])
    with pytest.raises(ValueError):
        kernels.joint_table([2, 2, 2], [[((), np.full(2, .5)), ((), np.full(2, .5)),
                                         ((1, 0), np.full((2, 2, 2), .5))]], [1.0])


def test_environment_forces_fallback():
    code = "import pcnet; print(pcnet.KERNEL_BACKEND)"
    env = dict(os.environ, PCNET_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_unknown_backend_name():
    with pytest.raises(KeyError):
        kernels.joint_table([2], [[((), np.full(2, 0.5))]], [1.0], backend="fortran")
