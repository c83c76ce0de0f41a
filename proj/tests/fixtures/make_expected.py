"""Writes expected_report.json for det.csv / gt.csv.

Standalone reference: greedy best-IoU matching in descending confidence
(stable), all-point AP with a right-max precision envelope, pooled P/R/F1 on
detections with confidence >= the operating threshold.
"""
import csv
import json
import sys
from pathlib import Path

IOU_THR = 0.5
CONF_THR = 0.25


def iou(a, b):
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area = lambda r: (r[2] - r[0]) * (r[3] - r[1])
    return inter / (area(a) + area(b) - inter)


def load(path, with_conf):
    rows = []
    with open(path, newline="") as f:
        for r in csv.DictReader(f):
            box = tuple(float(r[k]) for k in ("x1", "y1", "x2", "y2"))
            rows.append((r["image_id"], int(r["class_id"]), box,
                         float(r["confidence"]) if with_conf else None))
    return rows


def evaluate(dets, gts):
    classes = sorted({g[1] for g in gts} | {d[1] for d in dets})
    out, ap_sum, n_cls, tp_all, fp_all, gt_all = [], 0.0, 0, 0, 0, 0
    for c in classes:
        cg = [g for g in gts if g[1] == c]
        cd = sorted([d for d in dets if d[1] == c], key=lambda d: -d[3])
        used = [False] * len(cg)
        flags = []
        for d in cd:
            best, slot = -1.0, None
            for k, g in enumerate(cg):
                if used[k] or g[0] != d[0]:
                    continue
                v = iou(d[2], g[2])
                if v > best:
                    best, slot = v, k
            hit = slot is not None and best >= IOU_THR
            if hit:
                used[slot] = True
            flags.append(hit)
        curve, tp = [], 0
        for k, (d, hit) in enumerate(zip(cd, flags)):
            tp += hit
            curve.append({"confidence": d[3], "precision": tp / (k + 1),
                          "recall": tp / len(cg) if cg else 0.0})
        ap = 0.0
        if cg:
            prev = 0.0
            for k, pt in enumerate(curve):
                env = max(p["precision"] for p in curve[k:])
                ap += (pt["recall"] - prev) * env
                prev = pt["recall"]
            ap_sum += ap
            n_cls += 1
        ctp = sum(1 for d, h in zip(cd, flags) if h and d[3] >= CONF_THR)
        cfp = sum(1 for d, h in zip(cd, flags) if not h and d[3] >= CONF_THR)
        tp_all, fp_all, gt_all = tp_all + ctp, fp_all + cfp, gt_all + len(cg)
        out.append({"class_id": c, "num_gt": len(cg), "num_detections": len(cd), "ap": ap,
                    "ap_defined": bool(cg), "tp": ctp, "fp": cfp, "fn": len(cg) - ctp,
                    "pr_curve": curve})
    p = tp_all / (tp_all + fp_all) if tp_all + fp_all else 0.0
    r = tp_all / gt_all if gt_all else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return {"iou_threshold": IOU_THR, "confidence_threshold": CONF_THR, "num_classes": n_cls,
            "map": ap_sum / n_cls, "precision": p, "recall": r, "f1": f1, "tp": tp_all,
            "fp": fp_all, "fn": gt_all - tp_all, "classes": out}


if __name__ == "__main__":
    here = Path(__file__).parent
    report = evaluate(load(here / "det.csv", True), load(here / "gt.csv", False))
    json.dump(report, sys.stdout if "-" in sys.argv else open(here / "expected_report.json", "w"),
              indent=2)
