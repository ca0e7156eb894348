"""Regenerate src/pcnet/fixtures/machining.pcnet.json.

The hierarchy and feature names follow the machining example. Probabilities
and utilities are hand-chosen. The diagrams are authored so that they are
mutually consistent: inside each sibling group exactly one feature has a
CPT that differs between the siblings, and every other CPT is inherited
unchanged from the common super-concept. Concepts outside a sibling group
carry the group's mixture for that group's discriminating feature.

    machine-state          splits on dyn-rms-x
    out-of-var-limits      splits on AE-mean
    tool-failure           splits on AE-mag

Shared CPTs condition on the discriminating features, so each leaf still
shows its own signature (chatter: high AE-mag, rising AE, raised dyn-freq;
wear: gradual increases; breakage: AE peak then drop, high force peaks).
"""

import json
from pathlib import Path

FEATURES = [
    ("dyn-rms-x", ["normal", "high"]),
    ("AE-mean", ["low", "normal", "high"]),
    ("AE-mag", ["low", "normal", "high"]),
    ("delta-AE-mag", ["falling", "steady", "rising"]),
    ("AE-freq", ["normal", "high"]),
    ("dyn-freq-x", ["normal", "high"]),
    ("dyn-freq-y", ["normal", "high"]),
    ("delta-AE-mean", ["steady", "rising"]),
    ("delta-dyn-rms-x", ["steady", "rising"]),
    ("dyn-rms-y", ["normal", "high"]),
    ("delta-dyn-rms-y", ["steady", "rising"]),
    ("AE-peak", ["normal", "high"]),
    ("dyn-peak-x", ["normal", "high"]),
    ("dyn-peak-y", ["normal", "high"]),
    ("current", ["low", "normal", "high"]),
]
DOMAINS = dict(FEATURES)

ROOT = "machine-state"
WITHIN = "within-variability-limits"
OUT = "out-of-variability-limits"
TF = "tool-failure"
SF = "sensor-failure"
TS = "transient-state"
CH, WE, BR = "tool-chatter", "tool-wear", "tool-breakage"

CONCEPTS = [
    (ROOT, None, None),
    (WITHIN, ROOT, 0.80),
    (OUT, ROOT, None),
    (TF, OUT, None),
    (SF, OUT, 0.03),
    (TS, OUT, 0.07),
    (CH, TF, 0.04),
    (WE, TF, 0.04),
    (BR, TF, 0.02),
]
LEAF_PRIOR = {c: p for c, _, p in CONCEPTS if p is not None}

# (parents, {parent-config tuple: probabilities}); () is the empty config
SHARED = {
    "delta-AE-mag": (["AE-mag"], {
        ("low",): [0.70, 0.20, 0.10],
        ("normal",): [0.10, 0.80, 0.10],
        ("high",): [0.05, 0.25, 0.70],
    }),
    "AE-freq": (["AE-mag"], {
        ("low",): [0.90, 0.10], ("normal",): [0.85, 0.15], ("high",): [0.20, 0.80],
    }),
    "dyn-freq-x": (["AE-mag"], {
        ("low",): [0.85, 0.15], ("normal",): [0.85, 0.15], ("high",): [0.25, 0.75],
    }),
    "dyn-freq-y": (["dyn-freq-x"], {("normal",): [0.90, 0.10], ("high",): [0.20, 0.80]}),
    "delta-AE-mean": (["AE-mean", "AE-mag"], {
        ("low", "low"): [0.90, 0.10], ("low", "normal"): [0.90, 0.10],
        ("low", "high"): [0.90, 0.10],
        ("normal", "low"): [0.85, 0.15], ("normal", "normal"): [0.85, 0.15],
        ("normal", "high"): [0.85, 0.15],
        ("high", "low"): [0.60, 0.40], ("high", "normal"): [0.25, 0.75],
        ("high", "high"): [0.55, 0.45],
    }),
    "delta-dyn-rms-x": (["dyn-rms-x"], {("normal",): [0.90, 0.10], ("high",): [0.35, 0.65]}),
    "dyn-rms-y": (["dyn-rms-x"], {("normal",): [0.90, 0.10], ("high",): [0.30, 0.70]}),
    "delta-dyn-rms-y": (["dyn-rms-y"], {("normal",): [0.90, 0.10], ("high",): [0.35, 0.65]}),
    "AE-peak": (["AE-mag"], {
        ("low",): [0.20, 0.80], ("normal",): [0.93, 0.07], ("high",): [0.60, 0.40],
    }),
    "dyn-peak-x": (["dyn-rms-x", "AE-peak"], {
        ("normal", "normal"): [0.95, 0.05], ("normal", "high"): [0.35, 0.65],
        ("high", "normal"): [0.60, 0.40], ("high", "high"): [0.10, 0.90],
    }),
    "dyn-peak-y": (["dyn-peak-x"], {("normal",): [0.92, 0.08], ("high",): [0.20, 0.80]}),
    "current": (["dyn-rms-x", "AE-mean"], {
        ("normal", "low"): [0.30, 0.60, 0.10], ("normal", "normal"): [0.10, 0.80, 0.10],
        ("normal", "high"): [0.05, 0.70, 0.25], ("high", "low"): [0.20, 0.50, 0.30],
        ("high", "normal"): [0.05, 0.55, 0.40], ("high", "high"): [0.03, 0.37, 0.60],
    }),
}

# discriminating feature -> (group parent, {member: (parents, rows)})
SPLITS = {
    "dyn-rms-x": (ROOT, {
        WITHIN: ([], {(): [0.92, 0.08]}),
        OUT: ([], {(): [0.30, 0.70]}),
    }),
    "AE-mean": (OUT, {
        TF: ([], {(): [0.10, 0.35, 0.55]}),
        SF: ([], {(): [0.75, 0.20, 0.05]}),
        TS: ([], {(): [0.15, 0.60, 0.25]}),
    }),
    "AE-mag": (TF, {
        CH: (["dyn-rms-x"], {("normal",): [0.05, 0.30, 0.65], ("high",): [0.02, 0.13, 0.85]}),
        WE: ([], {(): [0.15, 0.70, 0.15]}),
        BR: ([], {(): [0.70, 0.20, 0.10]}),
    }),
}

ACTIONS = ["continue", "reduce-feed-rate", "reduce-depth-of-cut", "replace-tool",
           "alert-operator"]
UTILITY = {
    WITHIN: [100, 80, 75, 40, 60],
    CH: [-200, 60, 65, 20, 10],
    WE: [-80, 0, -10, 70, 20],
    BR: [-500, -300, -300, 50, -100],
    SF: [-50, -40, -40, -60, 70],
    TS: [90, 70, 70, 30, 50],
}
OBSERVED = ["AE-mag", "AE-mean", "dyn-rms-x", "dyn-rms-y", "current", "AE-peak", "dyn-peak-x"]

PARENT = {c: p for c, p, _ in CONCEPTS}
CHILDREN = {c: [k for k, p, _ in CONCEPTS if p == c] for c, _, _ in CONCEPTS}


def leaves_under(c):
    kids = CHILDREN[c]
    return [c] if not kids else [l for k in kids for l in leaves_under(k)]


def prior(c):
    return sum(LEAF_PRIOR[l] for l in leaves_under(c))


def ancestors_or_self(c):
    out = [c]
    while PARENT[out[-1]] is not None:
        out.append(PARENT[out[-1]])
    return out


def configs(parents):
    out = [()]
    for p in parents:
        out = [c + (s,) for c in out for s in DOMAINS[p]]
    return out


def mixture(members):
    """Prior-weighted mixture of member CPTs over the union of their parents."""
    order = [f for f, _ in FEATURES]
    union = sorted({p for ps, _ in members.values() for p in ps}, key=order.index)
    total = sum(prior(m) for m in members)
    rows = {}
    for config in configs(union):
        given = dict(zip(union, config))
        acc = None
        for m, (ps, table) in members.items():
            row = table[tuple(given[p] for p in ps)]
            w = prior(m) / total
            acc = [w * x for x in row] if acc is None else [a + w * x for a, x in zip(acc, row)]
        rows[config] = acc
    return union, rows


def split_cpt(feature, leaf):
    group, members = SPLITS[feature]
    for c in ancestors_or_self(leaf):
        if c in members:
            return members[c]
    return mixture(members)


def build():
    leaves = [c for c in LEAF_PRIOR]
    diagrams = []
    for leaf in leaves:
        parents, cpt = {}, {}
        for f, dom in FEATURES:
            ps, table = SHARED[f] if f in SHARED else split_cpt(f, leaf)
            if ps:
                parents[f] = list(ps)
            cpt[f] = [
                {"given": dict(zip(ps, config)), "p": dict(zip(dom, table[config]))}
                for config in configs(ps)
            ]
        diagrams.append({
            "concept": leaf,
            "features": [f for f, _ in FEATURES],
            "parents": parents,
            "cpt": cpt,
        })
    concepts = []
    for cid, parent, p in CONCEPTS:
        item = {"id": cid}
        if parent:
            item["parent"] = parent
        if p is not None:
            item["prior"] = p
        concepts.append(item)
    return {
        "features": [{"id": f, "domain": d, "rank": i} for i, (f, d) in enumerate(FEATURES)],
        "concepts": concepts,
        "diagrams": diagrams,
        "preference": {
            "actions": ACTIONS,
            "utility": {a: {leaf: UTILITY[leaf][k] for leaf in UTILITY}
                        for k, a in enumerate(ACTIONS)},
            "observed": OBSERVED,
        },
    }


if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "src/pcnet/fixtures/machining.pcnet.json"
    out.write_text(json.dumps(build(), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")
