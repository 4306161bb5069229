"""Writes the bundled toy dataset: 2000 rows, 5 categorical attributes with
planted pairwise dependencies."""

import csv
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "data"
ATTRS = [("age", 5), ("sex", 2), ("smoker", 2), ("region", 4), ("risk", 3)]


def row(rng):
    age = rng.choices(range(5), weights=[3, 4, 4, 3, 2])[0]
    sex = rng.randrange(2)
    smoker = int(rng.random() < 0.15 + 0.12 * age)
    region = sex * 2 + rng.randrange(2) if rng.random() < 0.7 else rng.randrange(4)
    base = age // 2 + smoker
    risk = min(2, base) if rng.random() < 0.8 else rng.randrange(3)
    return [age, sex, smoker, region, risk]


def main():
    rng = random.Random(20240601)
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "toy.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([name for name, _ in ATTRS])
        for _ in range(2000):
            w.writerow(row(rng))
    domain = {"attrs": [{"name": n, "cardinality": c} for n, c in ATTRS]}
    (OUT / "toy_domain.json").write_text(json.dumps(domain, indent=2) + "\n")


if __name__ == "__main__":
    main()
