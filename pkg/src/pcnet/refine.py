"""Greedy cover refinement against a linear computation-cost proxy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .abstraction import ConceptualCover, generalize, make_cover, specialize
from .builder import CategorizationDecisionModel, build_model, model_cpt_entries
from .core import PcNet, PreferenceModel
from .errors import CoverInvalid, InitInvalid, UnknownConcept
from .inference import EvidenceSet, SolveResult, solve

# improvements at or below this are treated as rounding noise, not progress
MIN_IMPROVEMENT = 1e-9


@dataclass(frozen=True)
class CostParams:
    kappa_table: float = 0.0
    kappa_concept: float = 0.0

    def __post_init__(self):
        if self.kappa_table < 0 or self.kappa_concept < 0:
            raise ValueError("cost coefficients must be non-negative")


def model_cost(model: CategorizationDecisionModel, cp: CostParams) -> float:
    entries = model_cpt_entries(model.pid)
    return cp.kappa_table * entries + cp.kappa_concept * len(model.cover)


def net_value(model: CategorizationDecisionModel, e: EvidenceSet | None, cp: CostParams) -> float:
    return solve(model, e).best_eu - model_cost(model, cp)


@dataclass(frozen=True)
class Move:
    kind: str  # "specialize" | "generalize"
    target: str  # concept specialized, or the parent generalized to

    def sort_key(self):
        return (0 if self.kind == "specialize" else 1, self.target)

    def __str__(self):
        return f"{self.kind} {self.target}"


@dataclass(frozen=True)
class RefinementStep:
    cover: ConceptualCover
    best_action: str
    best_eu: float
    cost: float
    net_value: float
    move: Move | None  # None for the initial cover

    def to_dict(self) -> dict:
        return {
            "cover": list(self.cover.concepts),
            "best_action": self.best_action,
            "best_eu": float(f"{self.best_eu:.12g}"),
            "cost": float(f"{self.cost:.12g}"),
            "net_value": float(f"{self.net_value:.12g}"),
            "move": None if self.move is None else {"type": self.move.kind,
                                                    "target": self.move.target},
        }


@dataclass(frozen=True)
class RefinementTrace:
    steps: tuple[RefinementStep, ...]

    @property
    def final(self) -> int:
        return len(self.steps) - 1

    @property
    def final_step(self) -> RefinementStep:
        return self.steps[self.final]


def candidate_moves(net: PcNet, cover: ConceptualCover):
    """Every one-move neighbour of ``cover``, in tie-break order."""
    out = []
    for c in cover:
        if net.children(c):
            out.append((Move("specialize", c), specialize(net, cover, c)))
    parents = sorted({net.parent(c) for c in cover if net.parent(c) is not None})
    for p in parents:
        kids = net.children(p)
        if all(k in cover for k in kids):
            out.append((Move("generalize", p), generalize(net, cover, kids)))
    out.sort(key=lambda mc: mc[0].sort_key())
    return out


def _evaluate(net, pref, e, cp, cover, move) -> RefinementStep:
    model = build_model(net, cover, pref)
    result: SolveResult = solve(model, e)
    cost = model_cost(model, cp)
    return RefinementStep(cover, result.best_action, result.best_eu, cost,
                          result.best_eu - cost, move)


def refine(
    net: PcNet,
    pref: PreferenceModel | None,
    e: EvidenceSet | None,
    cp: CostParams,
    init: ConceptualCover | Iterable[str],
) -> RefinementTrace:
    """Best-improvement hill climbing over covers by specialize/generalize moves."""
    try:
        init = make_cover(net, init)
    except (CoverInvalid, UnknownConcept) as exc:
        raise InitInvalid(str(exc)) from exc
    pref = pref if pref is not None else net.preference
    e = e or {}

    current = _evaluate(net, pref, e, cp, init, None)
    steps = [current]
    visited = {init.concepts}
    while True:
        best = None
        for move, cover in candidate_moves(net, current.cover):
            if cover.concepts in visited:
                continue
            step = _evaluate(net, pref, e, cp, cover, move)
            gain = step.net_value - current.net_value
            # candidates arrive in tie-break order; only a strictly larger gain displaces
            if gain > MIN_IMPROVEMENT and (best is None or gain > best[0]):
                best = (gain, step)
        if best is None:
            break
        current = best[1]
        steps.append(current)
        visited.add(current.cover.concepts)
    return RefinementTrace(tuple(steps))
