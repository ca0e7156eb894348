import json
import math
import random
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcnet import fixtures, inference
from pcnet.abstraction import enumerate_covers, leaf_cover, propagate_all
from pcnet.builder import build_categorization_pid, build_model
from pcnet.core import PcDiagram, PreferenceModel, load_pcnet
from pcnet.errors import (
    EvidenceImpossible,
    JointTooLarge,
    UnknownAction,
    UnknownFeature,
    UnknownState,
    UnobservedFeatureInEvidence,
)
from pcnet.inference import (
    best_action,
    check_soundness,
    evidence_probability,
    expected_utility,
    joint_oracle,
    model_joint,
    parse_evidence,
    posterior,
    solve,
)

import oracles
from strategies import evidence_for, pcnets


def affine(pref, alpha, beta):
    utility = {a: {l: alpha * v + beta for l, v in row.items()} for a, row in pref.utility.items()}
    return PreferenceModel(pref.actions, utility, pref.observed_features)


# -- joint oracle ---------------------------------------------------------------


def test_joint_oracle_tiny(tiny_p):
    jt = joint_oracle(tiny_p, ["A", "B"])
    np.testing.assert_allclose(jt.table, [[0.12, 0.48], [0.32, 0.08]], atol=1e-12)
    np.testing.assert_allclose(joint_oracle(tiny_p, ["R"]).table, [[0.44, 0.56]], atol=1e-12)
    for cover in enumerate_covers(tiny_p):
        assert joint_oracle(tiny_p, cover).table.sum() == pytest.approx(1.0, abs=1e-12)


def test_joint_oracle_size_cap(monkeypatch, machining_p):
    monkeypatch.setattr(inference, "MAX_JOINT", 1000)
    with pytest.raises(JointTooLarge):
        joint_oracle(machining_p, ["machine-state"])


@given(pcnets())
def test_joint_oracle_matches_enumeration(net):
    net = propagate_all(net)
    for cover in enumerate_covers(net):
        jt = joint_oracle(net, cover)
        brute = oracles.brute_joint(net, cover.concepts)
        for (c, states), p in brute.items():
            assert jt.table[(cover.concepts.index(c),) + states] == pytest.approx(p, abs=1e-12)


# -- posterior, EU, solve -------------------------------------------------------


def test_posterior_examples(tiny_p):
    model = build_model(tiny_p, ["A", "B"])
    post = posterior(model, {"F": "hi"})
    assert post["A"] == pytest.approx(0.12 / 0.44, abs=1e-12)
    assert post["B"] == pytest.approx(0.32 / 0.44, abs=1e-12)
    assert posterior(model, {}) == pytest.approx({"A": 0.6, "B": 0.4}, abs=1e-12)
    assert posterior(model) == posterior(model, {})


def test_expected_utility_examples(tiny_p):
    model = build_model(tiny_p, ["A", "B"])
    assert expected_utility(model, {"F": "hi"}, "continue") == pytest.approx(
        (0.12 * 10 + 0.32 * -40) / 0.44, abs=1e-9)
    assert expected_utility(model, {"F": "hi"}, "continue") == pytest.approx(-26.3636, abs=1e-4)
    for e in ({}, {"F": "hi"}, {"F": "lo"}):
        assert expected_utility(model, e, "stop") == 0.0
    assert expected_utility(model, {}, "continue") == pytest.approx(-10.0, abs=1e-12)
    with pytest.raises(UnknownAction):
        expected_utility(model, {}, "jump")


def test_solve_examples(tiny_p):
    model = build_model(tiny_p, ["A", "B"])
    hi = solve(model, {"F": "hi"})
    assert hi.best_action == "stop" and hi.best_eu == 0.0
    lo = solve(model, {"F": "lo"})
    assert lo.best_action == "continue"
    brute = oracles.brute_eu(tiny_p, tiny_p.preference, ("A", "B"), {"F": "lo"})
    assert lo.best_eu == pytest.approx(brute["continue"], abs=1e-12)
    assert lo.best_eu == pytest.approx(0.48 / 0.56 * 10 + 0.08 / 0.56 * -40, abs=1e-12)
    assert lo.posterior["A"] == pytest.approx(0.857143, abs=1e-6)


def test_tie_goes_to_smaller_action_id(tiny_p):
    pref = PreferenceModel(("zeta", "alpha", "mid"),
                           {"zeta": {"A": 1, "B1": 1, "B2": 1},
                            "alpha": {"A": 1, "B1": 1, "B2": 1},
                            "mid": {"A": 0, "B1": 0, "B2": 0}}, ("F",))
    for cover in enumerate_covers(tiny_p):
        assert solve(build_model(tiny_p, cover, pref), {"F": "hi"}).best_action == "alpha"
    assert best_action({"b": 1.0, "a": 1.0 - 1e-12, "c": 0.5}) == "a"
    assert best_action({"b": 1.0, "a": 1.0 - 1e-6}) == "b"


def test_evidence_errors(tiny_p):
    model = build_model(tiny_p, ["A", "B"])
    with pytest.raises(UnknownState):
        posterior(model, {"F": "mid"})
    with pytest.raises(UnknownFeature):
        posterior(model, {"G": "hi"})
    blind = build_model(tiny_p, ["A", "B"], PreferenceModel(
        ("go",), {"go": {"A": 0, "B1": 0, "B2": 0}}, ()))
    with pytest.raises(UnobservedFeatureInEvidence):
        posterior(blind, {"F": "hi"})


def test_evidence_impossible():
    doc = json.loads(fixtures.text("tiny"))
    for d in doc["diagrams"]:
        d["cpt"]["F"][0]["p"] = {"hi": 0.0, "lo": 1.0}
    net = propagate_all(load_pcnet(json.dumps(doc)))
    for cover in enumerate_covers(net):
        model = build_model(net, cover)
        with pytest.raises(EvidenceImpossible):
            solve(model, {"F": "hi"})
        # F=lo is then uninformative: EU(continue) stays at the prior value -10
        lo = solve(model, {"F": "lo"})
        assert lo.best_action == "stop"
        assert lo.eu_per_action["continue"] == pytest.approx(-10.0, abs=1e-12)


def test_parse_evidence():
    assert parse_evidence(["F=hi", " G = lo "]) == {"F": "hi", "G": "lo"}
    for bad in (["F"], ["=hi"], ["F="]):
        with pytest.raises(ValueError):
            parse_evidence(bad)


def test_solve_result_json_is_rounded(tiny_p):
    result = solve(build_model(tiny_p, ["A", "B"]), {"F": "hi"})
    d = json.loads(result.to_json())
    assert d["posterior"]["A"] == 0.272727272727
    assert d["best_action"] == "stop"
    assert list(d) == ["posterior", "eu_per_action", "best_action", "best_eu"]


def test_machining_breakage_pattern(machining_p):
    e = {f: "high" for f in machining_p.preference.observed_features}
    e["AE-mag"] = "low"
    model = build_model(machining_p, leaf_cover(machining_p))
    result = solve(model, e)
    assert result.best_action == "replace-tool"
    assert max(result.posterior, key=result.posterior.get) == "tool-breakage"
    brute = joint_oracle(machining_p, leaf_cover(machining_p)).condition(e)
    for c, p in result.posterior.items():
        assert p == pytest.approx(brute[c], abs=1e-9)


def test_machining_posterior_sample_matches_oracle(machining_p):
    rng = random.Random(7)
    observed = machining_p.preference.observed_features
    for cover in enumerate_covers(machining_p):
        jt = joint_oracle(machining_p, cover)
        model = build_model(machining_p, cover)
        for _ in range(15):
            e = {f: rng.choice(machining_p.feature(f).domain) for f in observed
                 if rng.random() < 0.7}
            post = posterior(model, e)
            ref = jt.condition(e)
            for c in cover:
                assert post[c] == pytest.approx(ref[c], abs=1e-9)


@given(pcnets(allow_zero=True), st.data())
def test_posterior_matches_enumeration(net, data):
    net = propagate_all(net)
    e = data.draw(evidence_for(net))
    for cover in enumerate_covers(net):
        model = build_model(net, cover)
        ref = oracles.brute_posterior(net, cover.concepts, e)
        if ref is None:
            with pytest.raises(EvidenceImpossible):
                posterior(model, e)
            continue
        post = posterior(model, e)
        for c in cover:
            assert post[c] == pytest.approx(ref[c], abs=1e-9)
        mass = joint_oracle(net, cover).mass(e)
        assert evidence_probability(model, e) == pytest.approx(mass, abs=1e-12)


@given(pcnets(allow_zero=True), st.data())
def test_impossible_exactly_when_oracle_mass_vanishes(net, data):
    net = propagate_all(net)
    e = data.draw(evidence_for(net))
    cover = leaf_cover(net)
    mass = joint_oracle(net, cover).mass(e)
    model = build_model(net, cover)
    if mass < 1e-12:
        with pytest.raises(EvidenceImpossible):
            solve(model, e)
    else:
        solve(model, e)


@given(pcnets(), st.data())
def test_argmax_dominance(net, data):
    net = propagate_all(net)
    e = data.draw(evidence_for(net))
    fine = build_model(net, leaf_cover(net))
    best = solve(fine, e).best_eu
    for cover in enumerate_covers(net):
        a = solve(build_model(net, cover), e).best_action
        assert expected_utility(fine, e, a) <= best + 1e-9


@given(pcnets())
def test_tower_property(net):
    net = propagate_all(net)
    covers = enumerate_covers(net)
    for a in net.preference.actions:
        values = [expected_utility(build_model(net, c), {}, a) for c in covers]
        assert max(values) - min(values) <= 1e-9 * max(1.0, max(map(abs, values)))


@given(pcnets(), st.data(),
       st.floats(0.01, 100.0), st.floats(-1000.0, 1000.0))
def test_affine_utility_invariance(net, data, alpha, beta):
    net = propagate_all(net)
    e = data.draw(evidence_for(net))
    scaled = affine(net.preference, alpha, beta)
    for cover in enumerate_covers(net):
        before = solve(build_model(net, cover), e).best_action
        after = solve(build_model(net, cover, scaled), e).best_action
        assert before == after


# -- soundness --------------------------------------------------------------------


def test_tiny_covers_are_sound(tiny_p):
    for cover in enumerate_covers(tiny_p):
        report = check_soundness(tiny_p, cover)
        assert report.sound
        assert report.max_deviation <= 1e-12


def test_corrupted_derived_diagram_is_unsound(tiny_p):
    good = tiny_p.diagram("B")
    cpt = np.array(good.cpts["F"])
    cpt += [0.05, -0.05]
    bad = PcDiagram("B", good.features, good.parents, {"F": cpt})
    net = tiny_p.with_derived({"B": bad, "R": tiny_p.diagram("R")})
    report = check_soundness(net, ["A", "B"])
    assert not report.sound
    # the perturbed row carries the prior weight of B
    assert report.marginal_deviation == pytest.approx(0.05 * 0.4, abs=1e-12)
    assert report.joint_deviation <= 1e-15
    assert check_soundness(net, ["R"]).sound
    assert check_soundness(net, ["A", "B1", "B2"]).sound


@given(pcnets(consistent=True))
def test_consistent_nets_preserve_the_joint(net):
    net = propagate_all(net)
    leaf_marginal = joint_oracle(net, leaf_cover(net)).feature_marginal()
    for cover in enumerate_covers(net):
        report = check_soundness(net, cover)
        assert report.sound, report.to_dict()
        marginal = model_joint(build_categorization_pid(net, cover)).feature_marginal()
        np.testing.assert_allclose(marginal, leaf_marginal, atol=1e-9, rtol=0)


@given(pcnets())
def test_constructed_joint_is_cover_mixture(net):
    # holds for every net, consistent or not
    net = propagate_all(net)
    for cover in enumerate_covers(net):
        constructed = model_joint(build_categorization_pid(net, cover)).table
        mixture = joint_oracle(net, cover).table
        np.testing.assert_allclose(constructed, mixture, atol=1e-12, rtol=0)


# -- concurrency --------------------------------------------------------------------


def test_concurrent_solves_share_one_net(machining_p):
    observed = machining_p.preference.observed_features
    rng = random.Random(3)
    cases = [(cover, {f: rng.choice(machining_p.feature(f).domain) for f in observed})
             for cover in enumerate_covers(machining_p) for _ in range(10)]

    def run(case):
        cover, e = case
        return solve(build_model(machining_p, cover), e).to_json()

    serial = [run(c) for c in cases]
    with ThreadPoolExecutor(max_workers=8) as pool:
        threaded = list(pool.map(run, cases * 3))
    assert threaded == serial * 3
    assert math.isfinite(json.loads(serial[0])["best_eu"])
