"""Write the Wisconsin Diagnostic Breast Cancer data as CSV files.

The data (569 samples, 30 features, benign/malignant diagnosis) come from the
UCI Machine Learning Repository,
https://archive.ics.uci.edu/dataset/17/breast+cancer+wisconsin+diagnostic ,
and are read here from the copy bundled with scikit-learn.

Outputs in ``--out`` (default ``data/``):

``wdbc.csv``
    header line with feature names, then one row per sample
``wdbc_labels.txt``
    one integer diagnosis label per row
``wdbc_ward_init.txt``
    two-cluster Ward hierarchical clustering of the standardized features,
    usable as ``--init-labels``
"""
import argparse
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage


def ward_labels(x, k=2):
    std = (x - x.mean(axis=0)) / x.std(axis=0)
    return fcluster(linkage(std, "ward"), k, "maxclust") - 1


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="data")
    args = p.parse_args(argv)
    from sklearn.datasets import load_breast_cancer

    ds = load_breast_cancer()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "wdbc.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(ds.feature_names) + "\n")
        for row in ds.data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    np.savetxt(out / "wdbc_labels.txt", ds.target, fmt="%d")
    np.savetxt(out / "wdbc_ward_init.txt", ward_labels(ds.data), fmt="%d")
    print(f"wrote {len(ds.target)} rows to {out}/")


if __name__ == "__main__":
    main()
