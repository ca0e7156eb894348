"""Pc-net data model: features, the concept tree, per-concept diagrams.

A pc-net is a tree of concepts. Every leaf carries a diagram giving, for
each feature, ``p(F | concept, B(F))`` where ``B(F)`` is a (possibly empty)
list of conditioning features. Internal concepts get their diagrams by
propagation (see :mod:`pcnet.abstraction`); their priors are always the sum
of their descendant leaves' priors.

CPTs are numpy arrays with one axis per conditioning feature, in global
rank order, followed by one axis for the feature's own states.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import (
    InvalidNet,
    NotASubconcept,
    ParseError,
    SchemaError,
    UnknownConcept,
    UnknownFeature,
    ZeroPriorAncestor,
)

PROB_TOL = 1e-9


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FeatureDecl:
    id: str
    domain: tuple[str, ...]
    rank: int

    @property
    def card(self) -> int:
        return len(self.domain)

    def state_index(self, state: str) -> int:
        try:
            return self.domain.index(state)
        except ValueError:
            raise KeyError(state) from None


@dataclass(frozen=True)
class Concept:
    id: str
    parent: str | None = None
    prior: float | None = None  # asserted for leaves only


@dataclass(frozen=True, eq=False)
class PcDiagram:
    """Local diagram of one concept.

    ``parents[f]`` lists the conditioning features of ``f`` sorted by rank and
    ``cpts[f]`` has shape ``(card(p1), ..., card(pk), card(f))``.
    """

    concept: str
    features: frozenset[str]
    parents: Mapping[str, tuple[str, ...]]
    cpts: Mapping[str, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "features", frozenset(self.features))
        object.__setattr__(
            self, "parents",
            MappingProxyType({f: tuple(self.parents.get(f, ())) for f in self.features}),
        )
        object.__setattr__(
            self, "cpts", MappingProxyType({f: _frozen_array(a) for f, a in self.cpts.items()})
        )

    def __eq__(self, other):
        if not isinstance(other, PcDiagram):
            return NotImplemented
        return (
            self.concept == other.concept
            and self.features == other.features
            and dict(self.parents) == dict(other.parents)
            and self.cpts.keys() == other.cpts.keys()
            and all(np.array_equal(self.cpts[f], other.cpts[f]) for f in self.cpts)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PreferenceModel:
    """Actions, leaf-level utilities ``v(action, leaf)`` and observed features."""

    actions: tuple[str, ...]
    utility: Mapping[str, Mapping[str, float]]
    observed_features: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(
            self, "utility",
            MappingProxyType({a: MappingProxyType(dict(row)) for a, row in self.utility.items()}),
        )
        object.__setattr__(self, "observed_features", tuple(self.observed_features))

    def __eq__(self, other):
        if not isinstance(other, PreferenceModel):
            return NotImplemented
        return (
            self.actions == other.actions
            and {a: dict(r) for a, r in self.utility.items()}
            == {a: dict(r) for a, r in other.utility.items()}
            and set(self.observed_features) == set(other.observed_features)
        )

    __hash__ = None

    def value(self, action: str, leaf: str) -> float:
        return self.utility[action][leaf]


class Issue(NamedTuple):
    severity: str  # "error" | "warning"
    location: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.location}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    def __str__(self):
        if not self.issues:
            return "ok"
        head = "ok" if self.ok else "invalid"
        return "\n".join([head] + [str(i) for i in self.issues])


@dataclass(frozen=True, eq=False)
class PcNet:
    features: tuple[FeatureDecl, ...]
    concepts: tuple[Concept, ...]
    leaf_diagrams: Mapping[str, PcDiagram]
    derived_diagrams: Mapping[str, PcDiagram] = field(default_factory=dict)
    preference: PreferenceModel | None = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("features", tuple(self.features))
        set_("concepts", tuple(self.concepts))
        set_("leaf_diagrams", MappingProxyType(dict(self.leaf_diagrams)))
        set_("derived_diagrams", MappingProxyType(dict(self.derived_diagrams)))

        set_("_feature_by_id", {f.id: f for f in self.features})
        set_("_concept_by_id", {c.id: c for c in self.concepts})
        children: dict[str, list[str]] = {c.id: [] for c in self.concepts}
        for c in self.concepts:
            if c.parent is not None and c.parent in children:
                children[c.parent].append(c.id)
        set_("_children", {k: tuple(sorted(v)) for k, v in children.items()})
        roots = sorted(c.id for c in self.concepts if c.parent is None)
        set_("_roots", tuple(roots))

        order: list[str] = []
        if len(roots) == 1:
            stack = [roots[0]]
            seen = set()
            while stack:
                cid = stack.pop()
                if cid in seen:
                    break
                seen.add(cid)
                order.append(cid)
                stack.extend(reversed(self._children[cid]))
        is_tree = len(roots) == 1 and len(order) == len(self._concept_by_id) == len(self.concepts)
        set_("_is_tree", is_tree)
        set_("_preorder", tuple(order) if is_tree else ())
        set_("_preorder_index", {c: i for i, c in enumerate(order)} if is_tree else {})

        priors: dict[str, float | None] = {}
        leaves_under: dict[str, tuple[str, ...]] = {}
        if is_tree:
            for cid in reversed(order):
                kids = self._children[cid]
                if not kids:
                    leaves_under[cid] = (cid,)
                    p = self._concept_by_id[cid].prior
                    priors[cid] = None if p is None else float(p)
                else:
                    leaves_under[cid] = tuple(l for k in kids for l in leaves_under[k])
                    leaf_priors = [priors[l] for l in leaves_under[cid]]
                    priors[cid] = (
                        None if any(p is None for p in leaf_priors) else math.fsum(leaf_priors)
                    )
        set_("_priors", priors)
        set_("_leaves_under", leaves_under)

    # -- lookups -----------------------------------------------------------

    def feature(self, fid: str) -> FeatureDecl:
        try:
            return self._feature_by_id[fid]
        except KeyError:
            raise UnknownFeature(f"unknown feature {fid!r}") from None

    def concept(self, cid: str) -> Concept:
        try:
            return self._concept_by_id[cid]
        except KeyError:
            raise UnknownConcept(f"unknown concept {cid!r}") from None

    def has_concept(self, cid: str) -> bool:
        return cid in self._concept_by_id

    @property
    def features_by_rank(self) -> tuple[FeatureDecl, ...]:
        return tuple(sorted(self.features, key=lambda f: f.rank))

    @property
    def is_tree(self) -> bool:
        return self._is_tree

    @property
    def root(self) -> str:
        if len(self._roots) != 1:
            raise SchemaError(f"expected exactly one root concept, found {len(self._roots)}")
        return self._roots[0]

    def children(self, cid: str) -> tuple[str, ...]:
        self.concept(cid)
        return self._children[cid]

    def parent(self, cid: str) -> str | None:
        return self.concept(cid).parent

    def is_leaf(self, cid: str) -> bool:
        return not self.children(cid)

    @property
    def leaves(self) -> tuple[str, ...]:
        return tuple(c for c in self.preorder() if not self._children[c])

    @property
    def internal_concepts(self) -> tuple[str, ...]:
        return tuple(c for c in self.preorder() if self._children[c])

    def preorder(self) -> tuple[str, ...]:
        """Concept ids in tree preorder, children visited in id order."""
        self._require_tree()
        return self._preorder

    def preorder_index(self, cid: str) -> int:
        self.concept(cid)
        self._require_tree()
        return self._preorder_index[cid]

    def descendant_leaves(self, cid: str) -> tuple[str, ...]:
        self.concept(cid)
        self._require_tree()
        return self._leaves_under[cid]

    def ancestors(self, cid: str) -> list[str]:
        """Proper ancestors, nearest first."""
        self._require_tree()
        out = []
        p = self.concept(cid).parent
        while p is not None:
            out.append(p)
            p = self._concept_by_id[p].parent
        return out

    def diagram(self, cid: str) -> PcDiagram | None:
        self.concept(cid)
        return self.leaf_diagrams.get(cid) or self.derived_diagrams.get(cid)

    def with_derived(self, derived: Mapping[str, PcDiagram]) -> PcNet:
        return PcNet(self.features, self.concepts, self.leaf_diagrams, derived, self.preference)

    def _require_tree(self):
        if not self._is_tree:
            raise InvalidNet(validate(self))


# -- hierarchy operations ------------------------------------------------------


def subsumes(net: PcNet, ci: str, cj: str) -> bool:
    """True iff ``cj`` is a proper ancestor of ``ci``."""
    net.concept(ci)
    net.concept(cj)
    return cj in net.ancestors(ci)


def most_general_subsumees(net: PcNet, ck: str) -> frozenset[str]:
    return frozenset(net.children(ck))


def most_specific_subsumer(net: PcNet, concepts: Iterable[str]) -> str:
    """Lowest common ancestor; a single concept is its own subsumer."""
    ids = list(concepts)
    if not ids:
        raise ValueError("most_specific_subsumer needs at least one concept")
    common = None
    for cid in ids:
        chain = [cid] + net.ancestors(cid)
        common = chain if common is None else [c for c in chain if c in set(common)]
    return common[0]


def concept_prior(net: PcNet, cid: str) -> float:
    net.concept(cid)
    net._require_tree()
    p = net._priors[cid]
    if p is None:
        raise SchemaError(f"concept {cid!r} has no prior (leaf prior missing)")
    return p


def subsumption_probability(net: PcNet, ci: str, cj: str) -> float:
    """``p(ci | cj)`` for a proper subconcept ``ci`` of ``cj``: the prior ratio."""
    if not subsumes(net, ci, cj):
        raise NotASubconcept(f"{ci!r} is not a subconcept of {cj!r}")
    denom = concept_prior(net, cj)
    if denom <= 0.0:
        raise ZeroPriorAncestor(f"prior of {cj!r} is zero")
    return concept_prior(net, ci) / denom


# -- validation ---------------------------------------------------------------


def _fmt_config(parents, config, net):
    return ", ".join(
        f"{p}={net._feature_by_id[p].domain[s]}" for p, s in zip(parents, config)
    ) or "(no parents)"


def _check_diagram(net: PcNet, d: PcDiagram, where: str, issues: list[Issue]):
    err = lambda loc, msg: issues.append(Issue("error", loc, msg))  # noqa: E731
    fmap = net._feature_by_id
    for f in sorted(d.features):
        if f not in fmap:
            err(where, f"undeclared feature {f!r}")
    for f in sorted(d.features):
        if f not in fmap:
            continue
        loc = f"{where}/{f}"
        parents = d.parents.get(f, ())
        bad = [p for p in parents if p not in d.features or p not in fmap]
        if bad:
            err(loc, f"conditioning features {bad} not in diagram")
            continue
        if len(set(parents)) != len(parents):
            err(loc, "duplicate conditioning feature")
        for p in parents:
            if fmap[p].rank >= fmap[f].rank:
                err(loc, f"arc {p} -> {f} does not go rank-upward "
                         f"({fmap[p].rank} >= {fmap[f].rank})")
        if list(parents) != sorted(parents, key=lambda p: fmap[p].rank):
            err(loc, "conditioning features not listed in rank order")
        if f not in d.cpts:
            err(loc, "missing CPT")
            continue
        cpt = d.cpts[f]
        shape = tuple(fmap[p].card for p in parents) + (fmap[f].card,)
        if cpt.shape != shape:
            err(loc, f"CPT shape {cpt.shape} does not match {shape}")
            continue
        if not np.all(np.isfinite(cpt)) or np.any(cpt < 0.0) or np.any(cpt > 1.0):
            err(loc, "CPT entries outside [0, 1]")
        sums = cpt.sum(axis=-1)
        for config in itertools.product(*(range(n) for n in shape[:-1])):
            s = float(sums[config])
            if abs(s - 1.0) > PROB_TOL:
                err(loc, f"row [{_fmt_config(parents, config, net)}] sums to {s:.12g}")
    extra = set(d.cpts) - set(d.features)
    if extra:
        err(where, f"CPTs for features outside the diagram: {sorted(extra)}")


def validate(net: PcNet) -> ValidationReport:
    """Check every structural and numeric invariant; collect all violations."""
    issues: list[Issue] = []
    err = lambda loc, msg: issues.append(Issue("error", loc, msg))  # noqa: E731
    warn = lambda loc, msg: issues.append(Issue("warning", loc, msg))  # noqa: E731

    # features
    seen = set()
    for f in net.features:
        loc = f"feature {f.id}"
        if f.id in seen:
            err(loc, "duplicate feature id")
        seen.add(f.id)
        if len(f.domain) < 2:
            err(loc, f"domain has {len(f.domain)} state(s), need at least 2")
        if len(set(f.domain)) != len(f.domain):
            err(loc, "duplicate state labels in domain")
    ranks = sorted(f.rank for f in net.features)
    if ranks != list(range(len(net.features))):
        err("features", f"ranks {ranks} are not a permutation of 0..{len(net.features) - 1}")

    # concept tree
    ids = [c.id for c in net.concepts]
    for cid in sorted({c for c in ids if ids.count(c) > 1}):
        err(f"concept {cid}", "duplicate concept id")
    for c in net.concepts:
        if c.parent is not None and c.parent not in net._concept_by_id:
            err(f"concept {c.id}", f"unknown parent {c.parent!r}")
    if len(net._roots) != 1:
        err("concepts", f"expected exactly one root, found {list(net._roots)}")
    if not net.is_tree:
        for c in net.concepts:
            chain, p = {c.id}, c.parent
            while p is not None and p in net._concept_by_id:
                if p in chain:
                    err(f"concept {c.id}", "parent links form a cycle")
                    break
                chain.add(p)
                p = net._concept_by_id[p].parent
        if len(net._roots) == 1 and not any("cycle" in i.message for i in issues):
            err("concepts", "not every concept is reachable from the root")
    for c in net.concepts:
        kids = net._children.get(c.id, ())
        loc = f"concept {c.id}"
        if len(kids) == 1:
            err(loc, "internal concept has a single child")
        if kids and c.prior is not None:
            err(loc, "prior asserted on an internal concept")
        if not kids:
            if c.prior is None:
                err(loc, "leaf concept has no prior")
            elif not (0.0 <= c.prior <= 1.0) or math.isnan(c.prior):
                err(loc, f"prior {c.prior} outside [0, 1]")
            elif c.prior == 0.0:
                warn(loc, "zero prior")
    if net.is_tree and net._priors.get(net.root) is not None:
        rp = net._priors[net.root]
        if abs(rp - 1.0) > PROB_TOL:
            err(f"concept {net.root}", f"root prior {rp:.12g} (leaf priors must sum to 1)")

    # diagrams
    leaf_ids = {c.id for c in net.concepts if not net._children.get(c.id)}
    for cid in sorted(leaf_ids):
        if cid not in net.leaf_diagrams:
            err(f"concept {cid}", "leaf concept has no diagram")
    for cid, d in sorted(net.leaf_diagrams.items()):
        where = f"diagram {cid}"
        if cid not in leaf_ids:
            err(where, "leaf diagram attached to a non-leaf or unknown concept")
        if d.concept != cid:
            err(where, f"diagram is keyed {cid!r} but names concept {d.concept!r}")
        _check_diagram(net, d, where, issues)
    for cid, d in sorted(net.derived_diagrams.items()):
        where = f"derived diagram {cid}"
        if cid in leaf_ids or cid not in net._concept_by_id:
            err(where, "derived diagram attached to a leaf or unknown concept")
        _check_diagram(net, d, where, issues)
    fsets = {cid: d.features for cid, d in net.leaf_diagrams.items()}
    if len(set(fsets.values())) > 1:
        ref_id = sorted(fsets)[0]
        for cid in sorted(fsets):
            if fsets[cid] != fsets[ref_id]:
                err(f"diagram {cid}", f"feature set differs from diagram {ref_id}")

    # preference
    pref = net.preference
    if pref is not None:
        if len(set(pref.actions)) != len(pref.actions):
            err("preference", "duplicate action ids")
        if not pref.actions:
            err("preference", "no actions")
        for a in pref.actions:
            row = pref.utility.get(a, {})
            for leaf in sorted(leaf_ids):
                if leaf not in row:
                    err(f"preference/{a}", f"no utility for leaf {leaf!r}")
                elif not math.isfinite(row[leaf]):
                    err(f"preference/{a}", f"non-finite utility for leaf {leaf!r}")
            for k in sorted(set(row) - leaf_ids):
                err(f"preference/{a}", f"utility for non-leaf or unknown concept {k!r}")
        for a in sorted(set(pref.utility) - set(pref.actions)):
            err("preference", f"utility row for undeclared action {a!r}")
        for f in pref.observed_features:
            if f not in net._feature_by_id:
                err("preference", f"observed feature {f!r} is not declared")
    return ValidationReport(tuple(issues))


def require_valid(net: PcNet) -> None:
    report = validate(net)
    if not report.ok:
        raise InvalidNet(report)


# -- file format ----------------------------------------------------------------

_TOP_KEYS = ("features", "concepts", "diagrams", "preference")


def _expect(cond, msg):
    if not cond:
        raise SchemaError(msg)


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_str_list(x):
    return isinstance(x, list) and all(isinstance(s, str) for s in x)


def _parse_features(raw):
    _expect(isinstance(raw, list), "'features' must be an array")
    out = []
    for i, item in enumerate(raw):
        _expect(isinstance(item, dict), f"features[{i}] must be an object")
        _expect(set(item) <= {"id", "domain", "rank"}, f"features[{i}]: unknown keys")
        for key in ("id", "domain", "rank"):
            _expect(key in item, f"features[{i}]: missing {key!r}")
        _expect(isinstance(item["id"], str), f"features[{i}].id must be a string")
        _expect(_is_str_list(item["domain"]), f"feature {item['id']}: domain must be strings")
        _expect(
            len(set(item["domain"])) == len(item["domain"]),
            f"feature {item['id']}: duplicate state labels",
        )
        _expect(
            isinstance(item["rank"], int) and not isinstance(item["rank"], bool),
            f"feature {item['id']}: rank must be an integer",
        )
        out.append(FeatureDecl(item["id"], tuple(item["domain"]), item["rank"]))
    fids = [f.id for f in out]
    _expect(len(set(fids)) == len(fids), "duplicate feature ids")
    return out


def _parse_concepts(raw):
    _expect(isinstance(raw, list), "'concepts' must be an array")
    out = []
    for i, item in enumerate(raw):
        _expect(isinstance(item, dict), f"concepts[{i}] must be an object")
        _expect(set(item) <= {"id", "parent", "prior"}, f"concepts[{i}]: unknown keys")
        _expect(isinstance(item.get("id"), str), f"concepts[{i}]: missing or non-string 'id'")
        parent = item.get("parent")
        _expect(
            not isinstance(parent, list),
            f"concept {item['id']}: multiple parents are not supported (tree hierarchy)",
        )
        _expect(parent is None or isinstance(parent, str), f"concept {item['id']}: bad parent")
        prior = item.get("prior")
        _expect(prior is None or _is_number(prior), f"concept {item['id']}: prior must be a number")
        out.append(Concept(item["id"], parent, None if prior is None else float(prior)))
    cids = [c.id for c in out]
    _expect(len(set(cids)) == len(cids), "duplicate concept ids (multiple parents?)")
    known = set(cids)
    internal = set()
    for c in out:
        _expect(c.parent is None or c.parent in known,
                f"concept {c.id}: unknown parent {c.parent!r}")
        if c.parent is not None:
            internal.add(c.parent)
    for c in out:
        if c.id in internal:
            _expect(c.prior is None,
                    f"concept {c.id}: prior is derived for internal concepts and must be omitted")
        else:
            _expect(c.prior is not None, f"concept {c.id}: leaf concept requires a prior")
    return out, internal


def _parse_cpt(fid, parents, rows, fmap, where):
    feat = fmap[fid]
    pdecl = [fmap[p] for p in parents]
    shape = tuple(p.card for p in pdecl) + (feat.card,)
    table = np.full(shape, np.nan)
    seen = set()
    _expect(isinstance(rows, list), f"{where}: CPT must be an array of rows")
    for r, row in enumerate(rows):
        loc = f"{where} row {r}"
        _expect(isinstance(row, dict) and set(row) <= {"given", "p"}, f"{loc}: bad row")
        given = row.get("given", {})
        probs = row.get("p")
        _expect(isinstance(given, dict), f"{loc}: 'given' must be an object")
        _expect(set(given) == set(parents),
                f"{loc}: 'given' must assign exactly {sorted(parents)}")
        config = []
        for p in pdecl:
            _expect(given[p.id] in p.domain, f"{loc}: {given[p.id]!r} not a state of {p.id}")
            config.append(p.domain.index(given[p.id]))
        config = tuple(config)
        _expect(config not in seen, f"{loc}: duplicate parent configuration")
        seen.add(config)
        _expect(isinstance(probs, dict), f"{loc}: 'p' must be an object")
        _expect(set(probs) == set(feat.domain),
                f"{loc}: 'p' must give every state of {fid}")
        for s, v in probs.items():
            _expect(_is_number(v), f"{loc}: probability for {s!r} must be a number")
            table[config + (feat.domain.index(s),)] = float(v)
    n_configs = math.prod(shape[:-1])
    _expect(len(seen) == n_configs,
            f"{where}: {len(seen)} rows given, {n_configs} parent configurations required")
    return table


def _parse_diagram(i, item, fmap):
    _expect(isinstance(item, dict), f"diagrams[{i}] must be an object")
    _expect(set(item) <= {"concept", "features", "parents", "cpt", "derived"},
            f"diagrams[{i}]: unknown keys")
    for key in ("concept", "features", "cpt"):
        _expect(key in item, f"diagrams[{i}]: missing {key!r}")
    cid = item["concept"]
    _expect(isinstance(cid, str), f"diagrams[{i}].concept must be a string")
    where = f"diagram {cid}"
    feats = item["features"]
    _expect(_is_str_list(feats), f"{where}: features must be an array of ids")
    _expect(len(set(feats)) == len(feats), f"{where}: duplicate features")
    for f in feats:
        _expect(f in fmap, f"{where}: unknown feature {f!r}")
    parents_raw = item.get("parents", {})
    _expect(isinstance(parents_raw, dict), f"{where}: parents must be an object")
    parents = {}
    for f, ps in parents_raw.items():
        _expect(f in feats, f"{where}: parents given for feature {f!r} outside the diagram")
        _expect(_is_str_list(ps), f"{where}: parents of {f} must be an array")
        _expect(len(set(ps)) == len(ps), f"{where}: duplicate parents of {f}")
        for p in ps:
            _expect(p in feats, f"{where}: parent {p!r} of {f} is not in the diagram")
        parents[f] = tuple(sorted(ps, key=lambda p: fmap[p].rank))
    cpt_raw = item["cpt"]
    _expect(isinstance(cpt_raw, dict), f"{where}: cpt must be an object")
    _expect(set(cpt_raw) == set(feats), f"{where}: cpt must cover exactly the diagram features")
    cpts = {f: _parse_cpt(f, parents.get(f, ()), cpt_raw[f], fmap, f"{where}/{f}") for f in feats}
    derived = item.get("derived", False)
    _expect(isinstance(derived, bool), f"{where}: 'derived' must be a boolean")
    return PcDiagram(cid, frozenset(feats), parents, cpts), derived


def _parse_preference(raw, fmap, concepts, internal):
    _expect(isinstance(raw, dict), "'preference' must be an object")
    _expect(set(raw) <= {"actions", "utility", "observed"}, "preference: unknown keys")
    actions = raw.get("actions")
    _expect(_is_str_list(actions) and actions, "preference.actions must be a nonempty array")
    _expect(len(set(actions)) == len(actions), "preference: duplicate actions")
    utility = raw.get("utility")
    _expect(isinstance(utility, dict), "preference.utility must be an object")
    leaves = {c.id for c in concepts} - internal
    rows = {}
    for a, row in utility.items():
        _expect(a in actions, f"preference.utility: undeclared action {a!r}")
        _expect(isinstance(row, dict), f"preference.utility.{a} must be an object")
        for leaf, v in row.items():
            _expect(leaf in leaves, f"preference.utility.{a}: {leaf!r} is not a leaf concept")
            _expect(_is_number(v), f"preference.utility.{a}.{leaf} must be a number")
        rows[a] = {leaf: float(v) for leaf, v in row.items()}
    observed = raw.get("observed", [])
    _expect(_is_str_list(observed), "preference.observed must be an array")
    for f in observed:
        _expect(f in fmap, f"preference.observed: unknown feature {f!r}")
    observed = sorted(set(observed), key=lambda f: fmap[f].rank)
    return PreferenceModel(tuple(actions), rows, tuple(observed))


def load_pcnet(text: str) -> PcNet:
    """Parse pc-net JSON text. Derived diagrams (``"derived": true``) are kept."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    _expect(isinstance(raw, dict), "top level must be an object")
    unknown = set(raw) - set(_TOP_KEYS)
    _expect(not unknown, f"unknown top-level keys {sorted(unknown)}")
    for key in ("features", "concepts", "diagrams"):
        _expect(key in raw, f"missing required key {key!r}")

    features = _parse_features(raw["features"])
    fmap = {f.id: f for f in features}
    concepts, internal = _parse_concepts(raw["concepts"])
    known = {c.id for c in concepts}

    _expect(isinstance(raw["diagrams"], list), "'diagrams' must be an array")
    leaf_d, derived_d = {}, {}
    for i, item in enumerate(raw["diagrams"]):
        d, derived = _parse_diagram(i, item, fmap)
        _expect(d.concept in known, f"diagram for unknown concept {d.concept!r}")
        _expect(d.concept not in leaf_d and d.concept not in derived_d,
                f"more than one diagram for concept {d.concept!r}")
        if derived:
            _expect(d.concept in internal,
                    f"diagram {d.concept}: only internal concepts carry derived diagrams")
            derived_d[d.concept] = d
        else:
            _expect(d.concept not in internal,
                    f"diagram {d.concept}: internal concept diagrams are derived, not asserted")
            leaf_d[d.concept] = d

    pref = None
    if raw.get("preference") is not None:
        pref = _parse_preference(raw["preference"], fmap, concepts, internal)
    return PcNet(tuple(features), tuple(concepts), leaf_d, derived_d, pref)


def load_pcnet_file(path) -> PcNet:
    with open(path, encoding="utf-8") as fh:
        return load_pcnet(fh.read())


def _diagram_to_dict(net: PcNet, d: PcDiagram, derived: bool) -> dict:
    fmap = net._feature_by_id
    feats = sorted(d.features, key=lambda f: fmap[f].rank)
    out = {
        "concept": d.concept,
        "features": feats,
        "parents": {f: list(d.parents[f]) for f in feats if d.parents[f]},
        "cpt": {},
    }
    for f in feats:
        parents = d.parents[f]
        pdecl = [fmap[p] for p in parents]
        rows = []
        for config in itertools.product(*(range(p.card) for p in pdecl)):
            row = d.cpts[f][config]
            rows.append({
                "given": {p.id: p.domain[s] for p, s in zip(pdecl, config)},
                "p": {state: float(row[k]) for k, state in enumerate(fmap[f].domain)},
            })
        out["cpt"][f] = rows
    if derived:
        out["derived"] = True
    return out


def to_dict(net: PcNet) -> dict:
    features = sorted(net.features, key=lambda f: f.rank)
    concepts = []
    for c in sorted(net.concepts, key=lambda c: c.id):
        item = {"id": c.id}
        if c.parent is not None:
            item["parent"] = c.parent
        if c.prior is not None:
            item["prior"] = c.prior
        concepts.append(item)
    diagrams = [(cid, d, False) for cid, d in net.leaf_diagrams.items()]
    diagrams += [(cid, d, True) for cid, d in net.derived_diagrams.items()]
    out = {
        "features": [{"id": f.id, "domain": list(f.domain), "rank": f.rank} for f in features],
        "concepts": concepts,
        "diagrams": [_diagram_to_dict(net, d, der) for _, d, der in sorted(diagrams,
                                                                            key=lambda t: t[0])],
    }
    pref = net.preference
    if pref is not None:
        out["preference"] = {
            "actions": list(pref.actions),
            "utility": {a: {leaf: pref.utility[a][leaf] for leaf in sorted(pref.utility[a])}
                        for a in pref.actions if a in pref.utility},
            "observed": list(pref.observed_features),
        }
    return out


def serialize(net: PcNet) -> str:
    """Canonical JSON text; stable byte-for-byte for a given net."""
    return json.dumps(to_dict(net), indent=2, ensure_ascii=False) + "\n"


def nets_equal(a: PcNet, b: PcNet) -> bool:
    """Structural equality on the data model."""
    return (
        set(a.features) == set(b.features)
        and set(a.concepts) == set(b.concepts)
        and dict(a.leaf_diagrams) == dict(b.leaf_diagrams)
        and dict(a.derived_diagrams) == dict(b.derived_diagrams)
        and a.preference == b.preference
    )
