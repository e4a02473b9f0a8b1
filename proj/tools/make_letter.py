#!/usr/bin/env python3
"""Write data/letter.scale and data/letter.scale.t (LIBSVM format).

The letter-recognition data (20000 rows, 16 integer features) is taken from
the keel-ds wheel on PyPI. Rows 1..15000 become the training file and rows
15001..20000 the test file. Features are scaled to [-1, 1] with the training
minimum and maximum, and printed with %g, the way `svm-scale -l -1 -u 1` does.
"""
import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

WHEEL_ENTRY = "keel_ds/data/balanced/raw/letter.dat"


def load_rows(wheel):
    text = zipfile.ZipFile(wheel).read(WHEEL_ENTRY).decode()
    rows = []
    for line in text.splitlines():
        if not line or line.startswith("@"):
            continue
        parts = line.strip().split(",")
        rows.append((ord(parts[-1].strip()) - ord("A") + 1, [float(v) for v in parts[:-1]]))
    return rows


def write(path, rows, lo, hi):
    with open(path, "w", newline="\n") as out:
        for label, feats in rows:
            toks = [str(label)]
            for j, v in enumerate(feats):
                s = -1.0 + 2.0 * (v - lo[j]) / (hi[j] - lo[j]) if hi[j] > lo[j] else 0.0
                if s != 0.0:
                    toks.append(f"{j + 1}:{s:g}")
            out.write(" ".join(toks) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel", help="path to a keel_ds wheel (downloaded with pip if omitted)")
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    wheel = args.wheel
    if wheel is None:
        tmp = tempfile.mkdtemp()
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                        "-d", tmp, "keel-ds==0.2.5"], check=True)
        wheel = next(pathlib.Path(tmp).glob("keel_ds-*.whl"))
    rows = load_rows(wheel)
    assert len(rows) == 20000, len(rows)
    train, test = rows[:15000], rows[15000:]
    lo = [min(r[1][j] for r in train) for j in range(16)]
    hi = [max(r[1][j] for r in train) for j in range(16)]
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write(out / "letter.scale", train, lo, hi)
    write(out / "letter.scale.t", test, lo, hi)


if __name__ == "__main__":
    main()
