"""Categorization model construction from a conceptual cover.

The member diagrams are merged by identifying shared feature nodes and the
concept node. The concept node becomes a chance variable over the cover
members; each feature's conditioning set is the union of the members' sets
and each member's CPT is copied into its slice, extended constantly along
the conditioning features it does not use. A decision node observing the
declared features and a value node over (action, concept) complete it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .abstraction import ConceptualCover, _union_parents, broadcast_cpt, make_cover
from .core import (
    FeatureDecl,
    PcNet,
    PreferenceModel,
    concept_prior,
    subsumption_probability,
)
from .errors import (
    CoverInvalid,
    DiagramMissing,
    FeatureSetMismatch,
    SchemaError,
    UnknownAction,
    UnknownFeature,
)

__all__ = [
    "PreferenceModel",
    "FeatureNode",
    "CategorizationPid",
    "CategorizationDecisionModel",
    "build_categorization_pid",
    "derive_cover_utility",
    "attach_preference",
    "build_model",
]


@dataclass(frozen=True, eq=False)
class FeatureNode:
    id: str
    parents: tuple[str, ...]  # rank order, concept node excluded
    cpt: np.ndarray  # (n_members, *parent cards, card)


@dataclass(frozen=True, eq=False)
class CategorizationPid:
    """Concept variable plus merged feature network for one cover."""

    net: PcNet
    cover: ConceptualCover
    concept_prior: tuple[float, ...]
    features: tuple[FeatureDecl, ...]  # rank order
    feature_net: Mapping[str, FeatureNode]
    member_parents: Mapping[str, Mapping[str, tuple[str, ...]]]

    @property
    def concept_var(self) -> dict[str, float]:
        return dict(zip(self.cover.concepts, self.concept_prior))

    @property
    def feature_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.features)

    def slice(self, member: str, feature: str) -> np.ndarray:
        return self.feature_net[feature].cpt[self.cover.concepts.index(member)]


@dataclass(frozen=True, eq=False)
class CategorizationDecisionModel:
    pid: CategorizationPid
    actions: tuple[str, ...]
    utility_on_cover: Mapping[str, tuple[float, ...]]  # action -> value per cover member
    observed_features: tuple[str, ...]

    @property
    def cover(self) -> ConceptualCover:
        return self.pid.cover

    @property
    def concept_prior(self) -> tuple[float, ...]:
        return self.pid.concept_prior

    @property
    def concept_var(self) -> dict[str, float]:
        return self.pid.concept_var

    @property
    def features(self) -> tuple[FeatureDecl, ...]:
        return self.pid.features

    @property
    def feature_net(self) -> Mapping[str, FeatureNode]:
        return self.pid.feature_net

    def utility(self, action: str, member: str) -> float:
        if action not in self.utility_on_cover:
            raise UnknownAction(f"unknown action {action!r}")
        return self.utility_on_cover[action][self.cover.concepts.index(member)]


def build_categorization_pid(net: PcNet, cover: ConceptualCover | Iterable[str]) -> CategorizationPid:
    cover = make_cover(net, cover)

    diagrams = []
    for c in cover:
        d = net.diagram(c)
        if d is None:
            raise DiagramMissing(f"cover member {c!r} has no diagram (propagate the net first)")
        diagrams.append(d)
    fset = diagrams[0].features
    for c, d in zip(cover, diagrams):
        if d.features != fset:
            raise FeatureSetMismatch(f"diagram of {c!r} has a different feature set")
    features = tuple(sorted((net.feature(f) for f in fset), key=lambda f: f.rank))

    nodes = {}
    for f in features:
        union = _union_parents(net, (d.parents[f.id] for d in diagrams))
        stacked = np.stack(
            [broadcast_cpt(net, d.cpts[f.id], d.parents[f.id], union) for d in diagrams]
        )
        stacked.flags.writeable = False
        nodes[f.id] = FeatureNode(f.id, union, stacked)

    priors = tuple(concept_prior(net, c) for c in cover)
    total = math.fsum(priors)
    if abs(total - 1.0) > 1e-9:
        raise CoverInvalid(f"cover priors sum to {total:.12g}")
    member_parents = MappingProxyType(
        {c: MappingProxyType(dict(d.parents)) for c, d in zip(cover, diagrams)}
    )
    return CategorizationPid(net, cover, priors, features, MappingProxyType(nodes),
                             member_parents)


def derive_cover_utility(net: PcNet, pref: PreferenceModel, c: str, a: str) -> float:
    """Expected leaf utility of action ``a`` given that concept ``c`` holds."""
    net.concept(c)
    if a not in pref.actions:
        raise UnknownAction(f"unknown action {a!r}")
    leaves = net.descendant_leaves(c)
    if leaves == (c,):
        return pref.value(a, c)
    return math.fsum(subsumption_probability(net, l, c) * pref.value(a, l) for l in leaves)


def attach_preference(pid: CategorizationPid, pref: PreferenceModel) -> CategorizationDecisionModel:
    for f in pref.observed_features:
        if f not in pid.feature_net:
            raise UnknownFeature(f"observed feature {f!r} is not in the model")
    utility = {
        a: tuple(derive_cover_utility(pid.net, pref, c, a) for c in pid.cover)
        for a in pref.actions
    }
    rank = {f.id: f.rank for f in pid.features}
    observed = tuple(sorted(set(pref.observed_features), key=rank.__getitem__))
    return CategorizationDecisionModel(pid, tuple(pref.actions), MappingProxyType(utility),
                                       observed)


def build_model(net: PcNet, cover, pref: PreferenceModel | None = None) -> CategorizationDecisionModel:
    pref = pref if pref is not None else net.preference
    if pref is None:
        raise SchemaError("no preference model given and the net declares none")
    return attach_preference(build_categorization_pid(net, cover), pref)


def slices_match(pid: CategorizationPid, tol: float = 0.0) -> bool:
    """Each member's slice equals its own diagram CPT, constant over unused parents."""
    for c in pid.cover:
        d = pid.net.diagram(c)
        for f in pid.features:
            node = pid.feature_net[f.id]
            own_parents = d.parents[f.id]
            keep = [node.parents.index(p) for p in own_parents]
            sl = pid.slice(c, f.id)
            for config in itertools.product(*(range(n) for n in sl.shape[:-1])):
                own_row = d.cpts[f.id][tuple(config[k] for k in keep)]
                if np.max(np.abs(sl[config] - own_row)) > tol:
                    return False
    return True


def model_cpt_entries(pid: CategorizationPid) -> int:
    """Total CPT entries across all feature slices of the merged network."""
    n = len(pid.cover)
    return sum(n * node.cpt[0].size for node in pid.feature_net.values())


def model_to_dict(model: CategorizationDecisionModel) -> dict:
    pid = model.pid
    feats = []
    for f in pid.features:
        node = pid.feature_net[f.id]
        feats.append({
            "id": f.id,
            "domain": list(f.domain),
            "parents": list(node.parents),
            "cpt": {c: np.asarray(node.cpt[k]).tolist() for k, c in enumerate(pid.cover)},
        })
    return {
        "cover": list(pid.cover.concepts),
        "concept_var": {c: p for c, p in zip(pid.cover, pid.concept_prior)},
        "features": feats,
        "actions": list(model.actions),
        "utility_on_cover": {a: dict(zip(pid.cover, model.utility_on_cover[a]))
                             for a in model.actions},
        "observed": list(model.observed_features),
    }
