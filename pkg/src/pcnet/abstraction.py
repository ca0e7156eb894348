"""Bottom-up diagram derivation and conceptual covers.

A super-concept's CPT for feature F is the mixture of its children's CPTs,
weighted by ``p(child | parent)``. Its conditioning set is the union of the
children's; a child that lacks one of those conditioning features is
extended as constant along that axis.

A conceptual cover is a frontier cut of the concept tree: every leaf has
exactly one ancestor-or-self in the cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import PcDiagram, PcNet, concept_prior, require_valid, subsumption_probability
from .errors import (
    ChildDiagramMissing,
    CoverInvalid,
    CoverSpaceTooLarge,
    FeatureSetMismatch,
    LeafNotSpecializable,
    NotInCover,
    NotInternal,
    NotSiblingComplete,
    PcNetError,
    ZeroPriorAncestor,
)

MAX_COVERS = 10**6


def _union_parents(net: PcNet, parent_lists) -> tuple[str, ...]:
    union = set()
    for ps in parent_lists:
        union.update(ps)
    return tuple(sorted(union, key=lambda f: net.feature(f).rank))


def broadcast_cpt(net: PcNet, cpt: np.ndarray, parents, target) -> np.ndarray:
    """``cpt`` over ``parents`` as a full array over ``target`` parents, constant where absent."""
    parents, target = tuple(parents), tuple(target)
    if parents == target:
        return cpt
    missing = set(parents) - set(target)
    if missing:
        raise ValueError(f"target conditioning set lacks {sorted(missing)}")
    shape = [net.feature(p).card if p in parents else 1 for p in target] + [cpt.shape[-1]]
    full = [net.feature(p).card for p in target] + [cpt.shape[-1]]
    return np.broadcast_to(cpt.reshape(shape), full)


def derive_superconcept_diagram(net: PcNet, ck: str) -> PcDiagram:
    """Diagram for internal concept ``ck`` from its children's diagrams."""
    children = net.children(ck)
    if not children:
        raise NotInternal(f"{ck!r} is a leaf; its diagram is asserted, not derived")
    kid_diagrams = []
    for c in children:
        d = net.diagram(c)
        if d is None:
            raise ChildDiagramMissing(f"child {c!r} of {ck!r} has no diagram")
        kid_diagrams.append(d)
    features = kid_diagrams[0].features
    for c, d in zip(children, kid_diagrams):
        if d.features != features:
            raise FeatureSetMismatch(
                f"children of {ck!r} disagree on features: {children[0]!r} vs {c!r}"
            )
    if concept_prior(net, ck) <= 0.0:
        raise ZeroPriorAncestor(f"{ck!r} has zero prior; its children cannot be weighted")
    weights = [subsumption_probability(net, c, ck) for c in children]

    parents, cpts = {}, {}
    for f in features:
        union = _union_parents(net, (d.parents[f] for d in kid_diagrams))
        acc = None
        for w, d in zip(weights, kid_diagrams):
            term = w * broadcast_cpt(net, d.cpts[f], d.parents[f], union)
            acc = term if acc is None else acc + term
        parents[f] = union
        cpts[f] = acc
    return PcDiagram(ck, features, parents, cpts)


def propagate_all(net: PcNet) -> PcNet:
    """Return a net in which every internal concept carries a derived diagram."""
    require_valid(net)
    # children before parents: reverse preorder does it for a tree
    derived = {}
    work = net.with_derived({})
    for cid in reversed(net.preorder()):
        if net.is_leaf(cid):
            continue
        try:
            d = derive_superconcept_diagram(work, cid)
        except PcNetError as exc:
            raise type(exc)(f"while deriving {cid!r}: {exc}") from exc
        derived[cid] = d
        work = net.with_derived(derived)
    return work


def derivation_order(net: PcNet) -> list[str]:
    return [c for c in reversed(net.preorder()) if not net.is_leaf(c)]


# -- covers ---------------------------------------------------------------------


@dataclass(frozen=True)
class ConceptualCover:
    concepts: tuple[str, ...]  # tree preorder

    def __iter__(self):
        return iter(self.concepts)

    def __len__(self):
        return len(self.concepts)

    def __contains__(self, cid):
        return cid in self.concepts

    def __str__(self):
        return ",".join(self.concepts)


def _canonical(net: PcNet, ids: Iterable[str]) -> tuple[str, ...]:
    ids = set(ids)
    for c in ids:
        net.concept(c)
    return tuple(sorted(ids, key=net.preorder_index))


def is_cover(net: PcNet, concepts: Iterable[str]) -> bool:
    members = list(concepts)
    ids = set(_canonical(net, members))
    if len(ids) != len(members) or not ids:
        return False
    covered = []
    for c in ids:
        covered.extend(net.descendant_leaves(c))
    return len(covered) == len(set(covered)) and set(covered) == set(net.leaves)


def make_cover(net: PcNet, concepts: Iterable[str]) -> ConceptualCover:
    members = list(concepts)
    if not is_cover(net, members):
        raise CoverInvalid(
            f"{','.join(members) or '(empty)'} is not a mutually exclusive, exhaustive cover"
        )
    return ConceptualCover(_canonical(net, members))


def parse_cover(net: PcNet, text: str) -> ConceptualCover:
    """Parse a comma-separated concept list."""
    ids = [t.strip() for t in text.split(",") if t.strip()]
    for c in ids:
        if not net.has_concept(c):
            raise CoverInvalid(f"unknown concept {c!r} in cover {text!r}")
    return make_cover(net, ids)


def root_cover(net: PcNet) -> ConceptualCover:
    return ConceptualCover((net.root,))


def leaf_cover(net: PcNet) -> ConceptualCover:
    return ConceptualCover(net.leaves)


def count_covers(net: PcNet, cid: str | None = None) -> int:
    """``f(leaf) = 1``, ``f(internal) = 1 + prod f(children)``."""
    cid = net.root if cid is None else cid
    kids = net.children(cid)
    if not kids:
        return 1
    return 1 + math.prod(count_covers(net, k) for k in kids)


def enumerate_covers(net: PcNet) -> list[ConceptualCover]:
    n = count_covers(net)
    if n > MAX_COVERS:
        raise CoverSpaceTooLarge(f"{n} covers exceeds the limit of {MAX_COVERS}")

    def frontiers(cid):
        out = [(cid,)]
        kids = net.children(cid)
        if kids:
            partial = [()]
            for k in kids:
                partial = [p + f for p in partial for f in frontiers(k)]
            out.extend(partial)
        return out

    covers = [ConceptualCover(_canonical(net, f)) for f in frontiers(net.root)]
    covers.sort(key=lambda cv: [net.preorder_index(c) for c in cv.concepts])
    return covers


def specialize(net: PcNet, cover: ConceptualCover, cid: str) -> ConceptualCover:
    if cid not in cover:
        raise NotInCover(f"{cid!r} is not in cover {cover}")
    kids = net.children(cid)
    if not kids:
        raise LeafNotSpecializable(f"{cid!r} is a leaf")
    return make_cover(net, [c for c in cover if c != cid] + list(kids))


def generalize(net: PcNet, cover: ConceptualCover, group: Iterable[str]) -> ConceptualCover:
    group = set(group)
    missing = group - set(cover.concepts)
    if missing:
        raise NotInCover(f"{sorted(missing)} not in cover {cover}")
    parents = {net.parent(c) for c in group}
    if len(parents) != 1 or None in parents:
        raise NotSiblingComplete(f"{sorted(group)} do not share one parent")
    (p,) = parents
    if set(net.children(p)) != group:
        raise NotSiblingComplete(f"{sorted(group)} is not the full child set of {p!r}")
    return make_cover(net, [c for c in cover if c not in group] + [p])


def cover_priors(net: PcNet, cover: ConceptualCover) -> list[float]:
    return [concept_prior(net, c) for c in cover]
