"""Write the Wisconsin diagnostic breast cancer data to CSV for the CLI.

Columns: id, diagnosis (M/B), then the 30 features. Uses the copy bundled
with scikit-learn, so no network access is needed.
"""

import argparse
import csv

from sklearn.datasets import load_breast_cancer


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="wdbc.csv")
    args = ap.parse_args()
    data = load_breast_cancer()
    names = [n.replace(" ", "_") for n in data.feature_names]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "diagnosis"] + names)
        for k, (x, t) in enumerate(zip(data.data, data.target)):
            w.writerow([k + 1, "M" if t == 0 else "B"] + [repr(float(v)) for v in x])
    print(f"wrote {len(data.target)} rows to {args.out}")


if __name__ == "__main__":
    main()
