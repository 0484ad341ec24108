#!/usr/bin/env python3
"""Builds the benchmark CSV files under data/.

adult and credit-g are taken from the copies bundled in the `responsibly`
wheel on PyPI (the UCI originals). blood-transfusion is read from a local file
if one is given with --blood, since no offline copy is bundled anywhere.
"""

import argparse
import csv
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education.num", "marital.status",
    "occupation", "relationship", "race", "sex", "capital.gain", "capital.loss",
    "hours.per.week", "native.country", "class",
]

CREDIT_COLUMNS = [
    "checking_status", "duration", "credit_history", "purpose", "credit_amount",
    "savings_status", "employment", "installment_commitment", "personal_status",
    "other_parties", "residence_since", "property_magnitude", "age",
    "other_payment_plans", "housing", "existing_credits", "job", "num_dependents",
    "own_telephone", "foreign_worker", "class",
]

BLOOD_COLUMNS = ["V1", "V2", "V3", "V4", "Class"]


def find_wheel(cache):
    hits = sorted(cache.glob("responsibly-*.whl"))
    if hits:
        return hits[0]
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--timeout", "60",
         "responsibly==0.1.2", "-d", str(cache)],
        check=True,
    )
    return sorted(cache.glob("responsibly-*.whl"))[0]


def adult_rows(text, strip_dot):
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(ADULT_COLUMNS):
            continue
        if strip_dot:
            cells[-1] = cells[-1].rstrip(".")
        yield cells


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        n = 0
        for r in rows:
            w.writerow(r)
            n += 1
    print(f"{path}: {n} rows")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--wheel", help="path to responsibly-0.1.2-py3-none-any.whl")
    ap.add_argument("--blood", help="local transfusion.data (UCI format: header + 5 numeric columns)")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        wheel = pathlib.Path(args.wheel) if args.wheel else find_wheel(pathlib.Path(tmp))
        z = zipfile.ZipFile(wheel)
        read = lambda name: z.read(name).decode("latin-1")
        train = read("responsibly/dataset/adult/adult.data")
        test = read("responsibly/dataset/adult/adult.test")
        rows = list(adult_rows(train, False)) + list(adult_rows(test, True))
        write_csv(out / "adult.csv", ADULT_COLUMNS, rows)

        german = read("responsibly/dataset/german/german.data")
        rows = [line.split() for line in german.splitlines() if line.strip()]
        write_csv(out / "credit-g.csv", CREDIT_COLUMNS, rows)

    if args.blood:
        with open(args.blood) as f:
            lines = [l.strip() for l in f if l.strip()]
        rows = [l.split(",") for l in lines[1:]]
        write_csv(out / "blood-transfusion.csv", BLOOD_COLUMNS, rows)


if __name__ == "__main__":
    main()
