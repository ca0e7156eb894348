import math

import numpy as np
import pytest
from hypothesis import given

from pcnet.abstraction import enumerate_covers, leaf_cover, make_cover, propagate_all, root_cover
from pcnet.builder import (
    attach_preference,
    build_categorization_pid,
    build_model,
    derive_cover_utility,
    model_cpt_entries,
    model_to_dict,
    slices_match,
)
from pcnet.core import PreferenceModel, concept_prior
from pcnet.errors import (
    CoverInvalid,
    DiagramMissing,
    SchemaError,
    UnknownAction,
    UnknownConcept,
    UnknownFeature,
)

import oracles
from strategies import pcnets


def test_pid_for_tiny_ab(tiny_p):
    pid = build_categorization_pid(tiny_p, ["A", "B"])
    assert pid.concept_var == pytest.approx({"A": 0.6, "B": 0.4}, abs=1e-12)
    assert pid.feature_ids == ("F",)
    np.testing.assert_allclose(pid.slice("A", "F"), [0.2, 0.8], atol=1e-12)
    np.testing.assert_allclose(pid.slice("B", "F"), [0.8, 0.2], atol=1e-12)


def test_pid_for_root_cover(tiny_p):
    pid = build_categorization_pid(tiny_p, root_cover(tiny_p))
    assert pid.concept_prior == pytest.approx((1.0,), abs=1e-12)
    np.testing.assert_allclose(pid.slice("R", "F"), [0.44, 0.56], atol=1e-12)


def test_pid_errors(tiny, tiny_p):
    with pytest.raises(CoverInvalid):
        build_categorization_pid(tiny_p, ["A", "B", "B1"])
    with pytest.raises(DiagramMissing):
        build_categorization_pid(tiny, ["A", "B"])
    with pytest.raises(UnknownConcept):
        build_categorization_pid(tiny_p, ["A", "Q"])


def test_machining_leaf_cover_union_of_arcs(machining_p):
    pid = build_categorization_pid(machining_p, leaf_cover(machining_p))
    assert len(pid.cover) == 6
    for f in pid.features:
        union = set()
        for c in pid.cover:
            union.update(machining_p.diagram(c).parents[f.id])
        assert set(pid.feature_net[f.id].parents) == union
    # chatter's AE-mag conditions on dyn-rms-x; the others do not
    assert pid.feature_net["AE-mag"].parents == ("dyn-rms-x",)
    assert pid.member_parents["tool-wear"]["AE-mag"] == ()
    assert slices_match(pid)


def test_merged_graph_is_acyclic(machining_p):
    pid = build_categorization_pid(machining_p, leaf_cover(machining_p))
    rank = {f.id: f.rank for f in pid.features}
    for f in pid.features:
        assert all(rank[p] < rank[f.id] for p in pid.feature_net[f.id].parents)


def test_cover_utility_examples(tiny_p):
    pref = tiny_p.preference
    assert derive_cover_utility(tiny_p, pref, "B", "continue") == pytest.approx(-40.0, abs=1e-12)
    assert derive_cover_utility(tiny_p, pref, "A", "continue") == 10.0
    assert derive_cover_utility(tiny_p, pref, "R", "continue") == pytest.approx(-10.0, abs=1e-12)
    with pytest.raises(UnknownAction):
        derive_cover_utility(tiny_p, pref, "B", "jump")
    with pytest.raises(UnknownConcept):
        derive_cover_utility(tiny_p, pref, "Q", "stop")


def test_attach_preference_tiny(tiny_p):
    model = build_model(tiny_p, ["A", "B"])
    assert model.utility_on_cover["continue"] == pytest.approx((10.0, -40.0), abs=1e-12)
    assert model.utility_on_cover["stop"] == (0.0, 0.0)
    assert model.observed_features == ("F",)
    assert model.utility("continue", "B") == pytest.approx(-40.0)
    with pytest.raises(UnknownAction):
        model.utility("jump", "A")


def test_empty_observed_set(tiny_p):
    pref = PreferenceModel(("go",), {"go": {"A": 1.0, "B1": 2.0, "B2": 3.0}}, ())
    model = build_model(tiny_p, ["A", "B"], pref)
    assert model.observed_features == ()


def test_observed_feature_not_in_model(tiny_p):
    pref = PreferenceModel(("go",), {"go": {"A": 1.0, "B1": 2.0, "B2": 3.0}}, ("G",))
    pid = build_categorization_pid(tiny_p, ["A", "B"])
    with pytest.raises(UnknownFeature):
        attach_preference(pid, pref)


def test_build_model_needs_preference(tiny_p):
    bare = tiny_p.__class__(tiny_p.features, tiny_p.concepts, tiny_p.leaf_diagrams,
                            tiny_p.derived_diagrams, None)
    with pytest.raises(SchemaError):
        build_model(bare, ["A", "B"])


def test_cpt_entry_count(tiny_p, machining_p):
    assert model_cpt_entries(build_categorization_pid(tiny_p, ["A", "B"])) == 4
    assert model_cpt_entries(build_categorization_pid(tiny_p, ["R"])) == 2
    pid = build_categorization_pid(machining_p, leaf_cover(machining_p))
    expected = sum(len(pid.cover) * math.prod(pid.feature_net[f.id].cpt.shape[1:])
                   for f in pid.features)
    assert model_cpt_entries(pid) == expected


def test_model_to_dict_shape(tiny_p):
    d = model_to_dict(build_model(tiny_p, ["A", "B"]))
    assert d["cover"] == ["A", "B"]
    assert d["features"][0]["cpt"]["B"] == pytest.approx([0.8, 0.2])
    assert d["utility_on_cover"]["continue"] == pytest.approx({"A": 10.0, "B": -40.0})


def test_model_arrays_are_read_only(tiny_p):
    pid = build_categorization_pid(tiny_p, ["A", "B"])
    with pytest.raises(ValueError):
        pid.feature_net["F"].cpt[0, 0] = 1.0


@given(pcnets())
def test_slices_are_extended_member_cpts(net):
    net = propagate_all(net)
    for cover in enumerate_covers(net):
        pid = build_categorization_pid(net, cover)
        assert slices_match(pid)
        assert math.fsum(pid.concept_prior) == pytest.approx(1.0, abs=1e-9)


@given(pcnets())
def test_root_utility_is_prior_weighted_mean(net):
    net = propagate_all(net)
    pref = net.preference
    for a in pref.actions:
        expected = math.fsum(concept_prior(net, l) * pref.value(a, l) for l in net.leaves)
        assert derive_cover_utility(net, pref, net.root, a) == pytest.approx(expected, abs=1e-9)
        for c in net.concepts:
            assert derive_cover_utility(net, pref, c.id, a) == pytest.approx(
                oracles.cover_utility(net, pref, c.id, a), abs=1e-9)


def test_slice_check_detects_tampering(tiny_p):
    pid = build_categorization_pid(tiny_p, make_cover(tiny_p, ["A", "B"]))
    assert slices_match(pid)
    cpt = pid.feature_net["F"].cpt.copy()
    cpt[1] = [0.5, 0.5]
    tampered = pid.__class__(pid.net, pid.cover, pid.concept_prior, pid.features,
                             {"F": pid.feature_net["F"].__class__("F", (), cpt)},
                             pid.member_parents)
    assert not slices_match(tampered)
