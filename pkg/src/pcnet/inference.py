"""Exact inference on categorization models.

:func:`posterior` runs variable elimination over the merged feature network,
summing out unobserved features in reverse rank order while keeping the
concept variable. :func:`joint_oracle` enumerates the full joint table
straight from the cover members' own diagrams; it is the reference the
elimination path is checked against and is capped at ``MAX_JOINT`` entries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .abstraction import ConceptualCover, leaf_cover, make_cover
from .builder import CategorizationDecisionModel, build_categorization_pid
from .core import PcNet, concept_prior
from .errors import (
    DiagramMissing,
    EvidenceImpossible,
    JointTooLarge,
    UnknownAction,
    UnknownFeature,
    UnknownState,
    UnobservedFeatureInEvidence,
)

MAX_JOINT = 10**7
IMPOSSIBLE_MASS = 1e-12
SOUNDNESS_TOL = 1e-9
TIE_TOL = 1e-9

EvidenceSet = Mapping[str, str]


def parse_evidence(items: Iterable[str]) -> dict[str, str]:
    """``["F=hi", "G=lo"]`` -> ``{"F": "hi", "G": "lo"}``."""
    out = {}
    for item in items:
        feature, sep, state = item.partition("=")
        if not sep or not feature.strip() or not state.strip():
            raise ValueError(f"evidence must look like FEATURE=STATE, got {item!r}")
        out[feature.strip()] = state.strip()
    return out


@dataclass(frozen=True, eq=False)
class JointTable:
    concepts: tuple[str, ...]
    features: tuple[str, ...]  # rank order; table axes 1.. follow this order
    domains: tuple[tuple[str, ...], ...]
    table: np.ndarray  # (n_concepts, *cards)

    def mass(self, evidence: EvidenceSet) -> float:
        return float(self._slice(evidence).sum())

    def condition(self, evidence: EvidenceSet) -> dict[str, float]:
        """Posterior over concepts by direct summation of the table."""
        sub = self._slice(evidence)
        per_concept = sub.reshape(len(self.concepts), -1).sum(axis=1)
        z = per_concept.sum()
        if z < IMPOSSIBLE_MASS:
            raise EvidenceImpossible(f"evidence {dict(evidence)} has probability {z:.3g}")
        return {c: float(v / z) for c, v in zip(self.concepts, per_concept)}

    def feature_marginal(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def _slice(self, evidence):
        idx = [slice(None)] * self.table.ndim
        for f, s in evidence.items():
            k = self.features.index(f)
            idx[k + 1] = self.domains[k].index(s)
        return self.table[tuple(idx)]


def _check_size(n_concepts, cards):
    size = n_concepts * math.prod(cards)
    if size > MAX_JOINT:
        raise JointTooLarge(f"joint table would hold {size} entries (limit {MAX_JOINT})")


def joint_oracle(net: PcNet, cover: ConceptualCover | Iterable[str]) -> JointTable:
    """``p(c, f) = prior(c) * prod_F p(F | c, parents)`` from each member's own diagram."""
    cover = make_cover(net, cover)
    diagrams = []
    for c in cover:
        d = net.diagram(c)
        if d is None:
            raise DiagramMissing(f"cover member {c!r} has no diagram")
        diagrams.append(d)
    feats = sorted((net.feature(f) for f in diagrams[0].features), key=lambda f: f.rank)
    cards = [f.card for f in feats]
    _check_size(len(cover), cards)
    pos = {f.id: i for i, f in enumerate(feats)}
    slices = [
        [(tuple(pos[p] for p in d.parents[f.id]), d.cpts[f.id]) for f in feats]
        for d in diagrams
    ]
    priors = [concept_prior(net, c) for c in cover]
    table = kernels.joint_table(cards, slices, priors)
    return JointTable(cover.concepts, tuple(f.id for f in feats),
                      tuple(f.domain for f in feats), table)


def model_joint(model) -> JointTable:
    """Joint implied by a constructed model's merged network (member slices, union parents)."""
    pid = getattr(model, "pid", model)
    cards = [f.card for f in pid.features]
    _check_size(len(pid.cover), cards)
    pos = {f.id: i for i, f in enumerate(pid.features)}
    slices = []
    for k in range(len(pid.cover)):
        slices.append([
            (tuple(pos[p] for p in pid.feature_net[f.id].parents), pid.feature_net[f.id].cpt[k])
            for f in pid.features
        ])
    table = kernels.joint_table(cards, slices, pid.concept_prior)
    return JointTable(pid.cover.concepts, pid.feature_ids,
                      tuple(f.domain for f in pid.features), table)


def check_evidence(model: CategorizationDecisionModel, e: EvidenceSet) -> dict[str, int]:
    """Validate evidence against the model; return feature -> state index."""
    fmap = {f.id: f for f in model.features}
    out = {}
    for f, s in e.items():
        if f not in fmap:
            raise UnknownFeature(f"unknown feature {f!r} in evidence")
        if f not in model.observed_features:
            raise UnobservedFeatureInEvidence(
                f"feature {f!r} is not observed by the decision (observed: "
                f"{', '.join(model.observed_features) or 'none'})"
            )
        if s not in fmap[f].domain:
            raise UnknownState(f"{s!r} is not a state of {f!r} {list(fmap[f].domain)}")
        out[f] = fmap[f].domain.index(s)
    return out


def _evidence_joint(model: CategorizationDecisionModel, e: EvidenceSet) -> np.ndarray:
    """Vector ``p(c, e)`` over cover members by variable elimination."""
    obs = check_evidence(model, e)
    concept_axis = 0
    ids = {f.id: i + 1 for i, f in enumerate(model.features)}

    factors = [(np.asarray(model.concept_prior), [concept_axis])]
    for f in model.features:
        node = model.feature_net[f.id]
        index, kept = [slice(None)], [concept_axis]
        for name in node.parents + (f.id,):
            if name in obs:
                index.append(obs[name])
            else:
                index.append(slice(None))
                kept.append(ids[name])
        arr = node.cpt
        factors.append((arr[tuple(index)], kept))

    for f in reversed(model.features):
        if f.id in obs:
            continue
        var = ids[f.id]
        involved = [fa for fa in factors if var in fa[1]]
        if not involved:
            continue
        rest = [fa for fa in factors if var not in fa[1]]
        out_axes = sorted({ax for _, axes in involved for ax in axes} - {var})
        operands = []
        for arr, axes in involved:
            operands += [arr, axes]
        factors = rest + [(np.einsum(*operands, out_axes), out_axes)]

    operands = []
    for arr, axes in factors:
        operands += [arr, axes]
    return np.einsum(*operands, [concept_axis])


def evidence_probability(model: CategorizationDecisionModel, e: EvidenceSet) -> float:
    return float(_evidence_joint(model, e).sum())


def posterior(model: CategorizationDecisionModel, e: EvidenceSet | None = None) -> dict[str, float]:
    e = e or {}
    joint = _evidence_joint(model, e)
    z = float(joint.sum())
    if z < IMPOSSIBLE_MASS:
        raise EvidenceImpossible(f"evidence {dict(e)} has probability {z:.3g} under the model")
    return {c: float(p / z) for c, p in zip(model.cover, joint)}


def expected_utility(model: CategorizationDecisionModel, e: EvidenceSet | None, a: str) -> float:
    if a not in model.utility_on_cover:
        raise UnknownAction(f"unknown action {a!r}")
    post = posterior(model, e)
    return math.fsum(post[c] * u for c, u in zip(model.cover, model.utility_on_cover[a]))


def _sig(x: float, digits: int = 12) -> float:
    return float(f"{x:.{digits}g}")


@dataclass(frozen=True)
class SolveResult:
    posterior: Mapping[str, float]
    eu_per_action: Mapping[str, float]
    best_action: str
    best_eu: float

    def to_dict(self) -> dict:
        return {
            "posterior": {c: _sig(p) for c, p in self.posterior.items()},
            "eu_per_action": {a: _sig(v) for a, v in self.eu_per_action.items()},
            "best_action": self.best_action,
            "best_eu": _sig(self.best_eu),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def best_action(eu: Mapping[str, float]) -> str:
    """Argmax; values within ``TIE_TOL`` (relative to scale) of the best tie,
    and ties go to the lexicographically smallest action id."""
    top = max(eu.values())
    tol = TIE_TOL * max(1.0, abs(top))
    return min(a for a, v in eu.items() if v >= top - tol)


def solve(model: CategorizationDecisionModel, e: EvidenceSet | None = None) -> SolveResult:
    post = posterior(model, e)
    eu = {
        a: math.fsum(post[c] * u for c, u in zip(model.cover, model.utility_on_cover[a]))
        for a in model.actions
    }
    a_star = best_action(eu)
    return SolveResult(post, eu, a_star, eu[a_star])


@dataclass(frozen=True)
class SoundnessReport:
    cover: ConceptualCover
    joint_deviation: float  # constructed model joint vs member-diagram mixture
    marginal_deviation: float  # cover feature marginal vs leaf-cover feature marginal
    tolerance: float = SOUNDNESS_TOL

    @property
    def max_deviation(self) -> float:
        return max(self.joint_deviation, self.marginal_deviation)

    @property
    def sound(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "cover": list(self.cover.concepts),
            "joint_deviation": self.joint_deviation,
            "marginal_deviation": self.marginal_deviation,
            "max_deviation": self.max_deviation,
            "sound": self.sound,
        }


def check_soundness(net: PcNet, cover) -> SoundnessReport:
    cover = make_cover(net, cover)
    mixture = joint_oracle(net, cover)
    constructed = model_joint(build_categorization_pid(net, cover))
    leaf = joint_oracle(net, leaf_cover(net))
    joint_dev = float(np.max(np.abs(constructed.table - mixture.table)))
    marg_dev = float(np.max(np.abs(mixture.feature_marginal() - leaf.feature_marginal())))
    return SoundnessReport(cover, joint_dev, marg_dev)
