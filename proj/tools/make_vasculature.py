#!/usr/bin/env python3
"""Regenerates data/vasculature.json, the bundled reference vasculature.

The geometry is schematic: a humanoid layout (y is the vertical axis, units
in cm) with 25 organ/limb/head regions, two heart nodes, and artery/vein
plumbing connecting them into directed flow cycles. Blood speeds follow the
usual convention here: arteries 20 cm/s, veins 10 cm/s, tissue regions
1 cm/s, hearts 10 cm/s. Left/right vessel pairs are deliberately
asymmetric in length, mirroring real anatomy; exact mirror symmetry would
make paired regions indistinguishable to any message-passing model.
"""

import json
import math
import os

ARTERY = 20.0
VEIN = 10.0
TISSUE = 1.0
HEART = 10.0

nodes = []
edges = []
ids = {}


def node(name, kind, speed, path):
    nid = len(nodes)
    ids[name] = nid
    length = sum(
        math.dist(path[i], path[i + 1]) for i in range(len(path) - 1)
    )
    nodes.append(
        {
            "id": nid,
            "name": name,
            "kind": kind,
            "blood_speed": speed,
            "path": [list(p) for p in path],
            "length": length,
        }
    )


def edge(a, b):
    edges.append({"from": ids[a], "to": ids[b]})


# Hearts
node("left_heart", "heart", HEART, [(2, 126, 0), (2, 122, 0)])
node("right_heart", "heart", HEART, [(-2, 126, 0), (-2, 122, 0)])

# Head / neck
node("aorta", "artery", ARTERY, [(2, 122, 0), (0, 130, 0), (0, 134, 0)])
node("head_artery", "artery", ARTERY, [(0, 134, 0), (1, 146, 0), (1, 156, 0)])
node("head", "head", TISSUE, [(1, 156, 0), (0, 162, 0), (-1, 168, 0), (0, 173, 0)])
node("thyroid", "organ", TISSUE, [(1, 148, 1), (0, 150, 2), (-1, 148, 1)])
node("jugular_vein", "vein", VEIN, [(-1, 156, 0), (-1, 144, 0), (-1, 134, 0)])

# Thoracic organs
node("thoracic_artery", "artery", ARTERY, [(0, 134, 0), (-1, 128, 2), (-1, 122, 3)])
node("esophagus", "organ", TISSUE, [(-1, 122, 3), (0, 118, 3), (0, 113, 2)])
node("thymus", "organ", TISSUE, [(-1, 122, 3), (0, 124, 4), (1, 126, 3)])

# Arms
node("left_subclavian", "artery", ARTERY, [(0, 134, 0), (8, 133, 0), (16, 130, 0)])
node("left_arm", "limb", TISSUE, [(16, 130, 0), (22, 120, 0), (26, 110, 0)])
node("left_hand", "limb", TISSUE, [(26, 110, 0), (29, 103, 0), (30, 98, 0)])
node("left_hand_vein", "vein", VEIN, [(30, 98, 0), (27, 106, 1), (25, 111, 1)])
node("left_arm_vein", "vein", VEIN, [(25, 111, 1), (18, 124, 1), (4, 132, 1)])
node("right_subclavian", "artery", ARTERY, [(0, 134, 0), (-7, 133, 0), (-14, 130, 0)])
node("right_arm", "limb", TISSUE, [(-14, 130, 0), (-19, 121, 0), (-23, 112, 0)])
node("right_hand", "limb", TISSUE, [(-23, 112, 0), (-25, 105, 0), (-26, 101, 0)])
node("right_hand_vein", "vein", VEIN, [(-26, 101, 0), (-24, 107, 1), (-22, 112, 1)])
node("right_arm_vein", "vein", VEIN, [(-22, 112, 1), (-16, 124, 1), (-4, 132, 1)])

# Abdomen
node("descending_aorta", "artery", ARTERY, [(0, 130, 0), (0, 118, 0), (0, 104, 0)])
node("celiac_trunk", "artery", ARTERY, [(0, 104, 0), (2, 102, 2)])
node("liver", "organ", TISSUE, [(2, 102, 2), (7, 101, 3), (10, 98, 2), (11, 94, 1)])
node("stomach", "organ", TISSUE, [(2, 102, 2), (-3, 100, 4), (-6, 96, 3)])
node("spleen", "organ", TISSUE, [(2, 102, 2), (-8, 100, 1), (-11, 97, 0)])
node("pancreas", "organ", TISSUE, [(2, 102, 2), (-1, 98, 3), (-4, 95, 2)])
node("gallbladder", "organ", TISSUE, [(2, 102, 2), (6, 97, 3), (8, 93, 2)])
node("mesenteric_artery", "artery", ARTERY, [(0, 104, 0), (0, 98, 2)])
node(
    "small_intestine",
    "organ",
    TISSUE,
    [(0, 98, 2), (4, 92, 4), (-4, 88, 4), (4, 84, 4), (-3, 81, 3)],
)
node(
    "large_intestine",
    "organ",
    TISSUE,
    [(0, 98, 2), (8, 90, 2), (8, 80, 2), (-8, 80, 2), (-8, 90, 2)],
)
node("renal_artery", "artery", ARTERY, [(0, 104, 0), (0, 99, -1)])
node("left_kidney", "organ", TISSUE, [(0, 99, -1), (5, 97, -3), (6, 92, -3)])
node("right_kidney", "organ", TISSUE, [(0, 99, -1), (-5, 97, -2), (-7, 93, -3)])
node("pelvic_artery", "artery", ARTERY, [(0, 104, 0), (0, 92, 0), (0, 84, 0)])
node("bladder", "organ", TISSUE, [(0, 84, 0), (1, 79, 3), (0, 75, 2)])
node("gonads", "organ", TISSUE, [(0, 84, 0), (-1, 78, 1), (0, 72, 1)])

# Legs
node("left_leg_artery", "artery", ARTERY, [(0, 104, 0), (5, 92, 0), (9, 80, 0)])
node("left_leg", "limb", TISSUE, [(9, 80, 0), (10, 60, 0), (11, 40, 0)])
node("left_foot", "limb", TISSUE, [(11, 40, 0), (12, 20, 0), (12, 4, 4)])
node("left_foot_vein", "vein", VEIN, [(12, 4, 4), (13, 22, 1), (12, 41, 1)])
node("left_leg_vein", "vein", VEIN, [(12, 41, 1), (10, 70, 1), (2, 98, 1)])
node("right_leg_artery", "artery", ARTERY, [(0, 104, 0), (-5, 93, 0), (-8, 82, 0)])
node("right_leg", "limb", TISSUE, [(-8, 82, 0), (-9, 63, 0), (-10, 44, 0)])
node("right_foot", "limb", TISSUE, [(-10, 44, 0), (-11, 26, 0), (-11, 10, 2)])
node("right_foot_vein", "vein", VEIN, [(-11, 10, 2), (-12, 27, 1), (-11, 44, 1)])
node("right_leg_vein", "vein", VEIN, [(-11, 44, 1), (-9, 72, 1), (-2, 98, 1)])

# Return trunks and pulmonary loop
node("svc", "vein", VEIN, [(-2, 134, 1), (-2, 128, 0)])
node("ivc", "vein", VEIN, [(0, 98, 1), (-1, 110, 0), (-2, 120, 0)])
node("pulmonary_artery", "artery", ARTERY, [(-2, 122, 0), (0, 127, -2)])
node("left_lung", "organ", TISSUE, [(0, 127, -2), (6, 130, -3), (8, 122, -4), (6, 116, -3)])
node("right_lung", "organ", TISSUE, [(0, 127, -2), (-5, 129, -3), (-7, 121, -4), (-5, 117, -3)])
node("pulmonary_vein", "vein", VEIN, [(0, 120, -2), (2, 124, -1), (2, 127, 0)])

edge("left_heart", "aorta")
edge("aorta", "head_artery")
edge("aorta", "thoracic_artery")
edge("aorta", "left_subclavian")
edge("aorta", "right_subclavian")
edge("aorta", "descending_aorta")

edge("head_artery", "head")
edge("head_artery", "thyroid")
edge("head", "jugular_vein")
edge("thyroid", "jugular_vein")
edge("jugular_vein", "svc")

edge("thoracic_artery", "esophagus")
edge("thoracic_artery", "thymus")
edge("esophagus", "svc")
edge("thymus", "svc")

for side in ("left", "right"):
    edge(f"{side}_subclavian", f"{side}_arm")
    edge(f"{side}_arm", f"{side}_hand")
    edge(f"{side}_arm", f"{side}_arm_vein")
    edge(f"{side}_hand", f"{side}_hand_vein")
    edge(f"{side}_hand_vein", f"{side}_arm_vein")
    edge(f"{side}_arm_vein", "svc")

edge("descending_aorta", "celiac_trunk")
edge("descending_aorta", "mesenteric_artery")
edge("descending_aorta", "renal_artery")
edge("descending_aorta", "pelvic_artery")
edge("descending_aorta", "left_leg_artery")
edge("descending_aorta", "right_leg_artery")

for organ in ("liver", "stomach", "spleen", "pancreas", "gallbladder"):
    edge("celiac_trunk", organ)
    edge(organ, "ivc")
for organ in ("small_intestine", "large_intestine"):
    edge("mesenteric_artery", organ)
    edge(organ, "ivc")
for organ in ("left_kidney", "right_kidney"):
    edge("renal_artery", organ)
    edge(organ, "ivc")
for organ in ("bladder", "gonads"):
    edge("pelvic_artery", organ)
    edge(organ, "ivc")

for side in ("left", "right"):
    edge(f"{side}_leg_artery", f"{side}_leg")
    edge(f"{side}_leg", f"{side}_foot")
    edge(f"{side}_leg", f"{side}_leg_vein")
    edge(f"{side}_foot", f"{side}_foot_vein")
    edge(f"{side}_foot_vein", f"{side}_leg_vein")
    edge(f"{side}_leg_vein", "ivc")

edge("svc", "right_heart")
edge("ivc", "right_heart")
edge("right_heart", "pulmonary_artery")
edge("pulmonary_artery", "left_lung")
edge("pulmonary_artery", "right_lung")
edge("left_lung", "pulmonary_vein")
edge("right_lung", "pulmonary_vein")
edge("pulmonary_vein", "left_heart")

doc = {
    "schema_version": 1,
    "anchor_heart": ids["left_heart"],
    "nodes": nodes,
    "edges": edges,
}

out = os.path.join(os.path.dirname(__file__), "..", "data", "vasculature.json")
with open(out, "w") as f:
    json.dump(doc, f, indent=1)
    f.write("\n")

events = [n for n in nodes if n["kind"] in ("organ", "limb", "head")]
print(f"{len(nodes)} nodes, {len(edges)} edges, {len(events)} event regions")
