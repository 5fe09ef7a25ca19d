"""Regenerate data/uci/breast_cancer.csv from scikit-learn's bundled copy.

The file is checked in so the benchmark suite works offline; this script
exists to document its provenance (UCI WDBC, 569 samples, 30 features) and
to rebuild it byte-for-byte if ever needed.
"""

import csv
from pathlib import Path

from sklearn.datasets import load_breast_cancer

OUT = Path(__file__).resolve().parent.parent / "data" / "uci" / "breast_cancer.csv"


def main() -> None:
    bunch = load_breast_cancer()
    names = [n.replace(" ", "_") for n in bunch.feature_names]
    # sklearn encodes malignant as 0, benign as 1; keep the original letters
    label = {0: "M", 1: "B"}
    with OUT.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["diagnosis"])
        for row, target in zip(bunch.data, bunch.target):
            writer.writerow([repr(float(v)) for v in row] + [label[int(target)]])
    print(f"wrote {OUT} ({bunch.data.shape[0]} rows, {bunch.data.shape[1]} features)")


if __name__ == "__main__":
    main()
