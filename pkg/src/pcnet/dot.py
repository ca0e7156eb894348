"""Graphviz DOT text for hierarchies, pc-diagrams and decision models.

Output is deterministic: nodes and edges are emitted in tree preorder or
feature rank order, never in hash order.
"""

from __future__ import annotations

from .abstraction import ConceptualCover
from .builder import CategorizationDecisionModel
from .core import PcDiagram, PcNet, subsumption_probability


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def hierarchy_dot(net: PcNet) -> str:
    """Concept tree; each subsumption edge carries p(child | parent)."""
    lines = ["digraph pc_hierarchy {", "  rankdir=TB;", "  node [shape=ellipse];"]
    for c in net.preorder():
        lines.append(f"  {_q(c)};")
    for c in net.preorder():
        for k in net.children(c):
            p = subsumption_probability(net, k, c)
            lines.append(f"  {_q(c)} -> {_q(k)} [label={_q(f'{p:.4f}')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _diagram_body(net: PcNet, d: PcDiagram, prefix: str = "", indent: str = "  ") -> list[str]:
    rank = lambda f: net.feature(f).rank  # noqa: E731
    feats = sorted(d.features, key=rank)
    cnode = _q(f"{prefix}concept:{d.concept}")
    fnode = lambda f: _q(f"{prefix}{f}")  # noqa: E731
    lines = [f"{indent}{cnode} [label={_q(d.concept)}, shape=ellipse, peripheries=2];"]
    for f in feats:
        lines.append(f"{indent}{fnode(f)} [label={_q(f)}, shape=ellipse];")
    for f in feats:
        lines.append(f"{indent}{cnode} -> {fnode(f)};")
    for f in feats:
        for p in d.parents[f]:
            lines.append(f"{indent}{fnode(p)} -> {fnode(f)};")
    return lines


def diagram_dot(net: PcNet, concept: str) -> str:
    d = net.diagram(concept)
    if d is None:
        raise KeyError(f"concept {concept!r} has no diagram")
    lines = [f"digraph {_q('pc-diagram ' + concept)} {{"]
    lines += _diagram_body(net, d)
    lines.append("}")
    return "\n".join(lines) + "\n"


def cover_dot(net: PcNet, cover: ConceptualCover) -> str:
    """The cover members' pc-diagrams, one cluster each."""
    lines = [f"digraph {_q('cover ' + str(cover))} {{"]
    for i, c in enumerate(cover):
        d = net.diagram(c)
        if d is None:
            raise KeyError(f"cover member {c!r} has no diagram")
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f"    label={_q(c)};")
        lines += _diagram_body(net, d, prefix=f"{c}/", indent="    ")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def model_dot(model: CategorizationDecisionModel) -> str:
    """Categorization decision model: chance concept node, merged features,
    decision (box), value (diamond), dashed informational arcs."""
    members = ", ".join(model.cover)
    lines = [
        "digraph categorization_model {",
        f"  \"C\" [label={_q('C: ' + members)}, shape=ellipse];",
    ]
    for f in model.features:
        lines.append(f"  {_q(f.id)} [shape=ellipse];")
    lines.append(f"  \"D\" [label={_q('decision: ' + ', '.join(model.actions))}, shape=box];")
    lines.append("  \"V\" [label=\"value\", shape=diamond];")
    for f in model.features:
        lines.append(f"  \"C\" -> {_q(f.id)};")
    for f in model.features:
        for p in model.feature_net[f.id].parents:
            lines.append(f"  {_q(p)} -> {_q(f.id)};")
    for f in model.observed_features:
        lines.append(f"  {_q(f)} -> \"D\" [style=dashed];")
    lines.append("  \"C\" -> \"V\";")
    lines.append("  \"D\" -> \"V\";")
    lines.append("}")
    return "\n".join(lines) + "\n"
