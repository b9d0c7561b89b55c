#!/usr/bin/env python3
"""Regenerate the CSV + schema files under data/.

Sources:
  iris          UCI iris.data (150 rows). Any copy of the UCI file works; the
                one bundled with mlxtend (mlxtend/data/data/iris.csv.gz) is the
                UCI version with integer-coded labels.
  heart_disease Cleveland subset of the UCI Heart Disease database (303 rows,
                13 attributes, binarised target). The Orange3 wheel ships it as
                Orange/datasets/heart_disease.tab.
  balance_scale Generated: the UCI file is the full enumeration of
                (left weight, left distance, right weight, right distance) in
                1..5 with the class given by comparing the two torques.
  nursery       Not generated. Only the schema is written; drop the UCI
                nursery.data file in as data/nursery.csv (with a header line).

Usage:
  scripts/prepare_datasets.py --iris iris.csv[.gz] --heart heart_disease.tab --out data
"""

import argparse
import csv
import gzip
import itertools
import os
from collections import Counter

IRIS_CLASSES = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]

# UCI processed.cleveland.data integer codes for the Orange string levels.
HEART_CODES = {
    "gender": {"female": 0, "male": 1},
    "chest pain": {
        "typical ang": 1,
        "atypical ang": 2,
        "non-anginal": 3,
        "asymptomatic": 4,
    },
    "rest ECG": {"normal": 0, "ST-T abnormal": 1, "left vent hypertrophy": 2},
    "slope peak exc ST": {"upsloping": 1, "flat": 2, "downsloping": 3},
    "thal": {"normal": 3, "fixed defect": 6, "reversable defect": 7},
}
HEART_COLUMNS = [
    ("age", "age"),
    ("sex", "gender"),
    ("cp", "chest pain"),
    ("trestbps", "rest SBP"),
    ("chol", "cholesterol"),
    ("fbs", "fasting blood sugar > 120"),
    ("restecg", "rest ECG"),
    ("thalach", "max HR"),
    ("exang", "exerc ind ang"),
    ("oldpeak", "ST by exercise"),
    ("slope", "slope peak exc ST"),
    ("ca", "major vessels colored"),
    ("thal", "thal"),
]

NURSERY = [
    ("parents", ["usual", "pretentious", "great_pret"]),
    ("has_nurs", ["proper", "less_proper", "improper", "critical", "very_crit"]),
    ("form", ["complete", "completed", "incomplete", "foster"]),
    ("children", ["1", "2", "3", "more"]),
    ("housing", ["convenient", "less_conv", "critical"]),
    ("finance", ["convenient", "inconv"]),
    ("social", ["nonprob", "slightly_prob", "problematic"]),
    ("health", ["recommended", "priority", "not_recom"]),
]
NURSERY_CLASSES = ["not_recom", "recommend", "very_recom", "priority", "spec_prior"]


def write_schema(path, columns, label_levels):
    with open(path, "w") as f:
        for name, kind, levels in columns:
            if levels:
                f.write(f"{name} {kind} {','.join(levels)}\n")
            else:
                f.write(f"{name} {kind}\n")
        f.write(f"class label {','.join(label_levels)}\n")


def iris(src, out):
    opener = gzip.open if src.endswith(".gz") else open
    with opener(src, "rt") as f:
        rows = [r for r in csv.reader(f) if r]
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
    with open(os.path.join(out, "iris.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names + ["class"])
        for r in rows:
            label = r[4]
            if label.isdigit():
                label = IRIS_CLASSES[int(label)]
            w.writerow(r[:4] + [label])
    write_schema(
        os.path.join(out, "iris.schema"),
        [(n, "numeric", None) for n in names],
        IRIS_CLASSES,
    )


def heart(src, out):
    with open(src) as f:
        lines = f.read().splitlines()
    header = lines[0].split("\t")
    body = [l.split("\t") for l in lines[3:] if l.strip()]
    idx = {h: i for i, h in enumerate(header)}
    # six cells are missing in the source ("?", columns ca and thal); they are
    # filled with the column mode so the instance count stays at 303.
    modes = {}
    for _, src_col in HEART_COLUMNS:
        vals = [r[idx[src_col]] for r in body if r[idx[src_col]] not in ("?", "")]
        modes[src_col] = Counter(vals).most_common(1)[0][0]
    with open(os.path.join(out, "heart_disease.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([c for c, _ in HEART_COLUMNS] + ["class"])
        for r in body:
            row = []
            for _, src_col in HEART_COLUMNS:
                v = r[idx[src_col]]
                if v in ("?", ""):
                    v = modes[src_col]
                if src_col in HEART_CODES:
                    v = str(HEART_CODES[src_col][v])
                row.append(v)
            row.append(r[idx["diameter narrowing"]])
            w.writerow(row)
    write_schema(
        os.path.join(out, "heart_disease.schema"),
        [(c, "numeric", None) for c, _ in HEART_COLUMNS],
        ["0", "1"],
    )


def balance(out):
    names = ["left_weight", "left_distance", "right_weight", "right_distance"]
    with open(os.path.join(out, "balance_scale.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names + ["class"])
        for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
            left, right = lw * ld, rw * rd
            label = "L" if left > right else ("R" if right > left else "B")
            w.writerow([lw, ld, rw, rd, label])
    write_schema(
        os.path.join(out, "balance_scale.schema"),
        [(n, "numeric", None) for n in names],
        ["B", "L", "R"],
    )


def nursery_schema(out):
    write_schema(
        os.path.join(out, "nursery.schema"),
        [(n, "ordinal", levels) for n, levels in NURSERY],
        NURSERY_CLASSES,
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--iris", required=True)
    ap.add_argument("--heart", required=True)
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    iris(args.iris, args.out)
    heart(args.heart, args.out)
    balance(args.out)
    nursery_schema(args.out)


if __name__ == "__main__":
    main()
