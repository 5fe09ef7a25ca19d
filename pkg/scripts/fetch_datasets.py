"""Fetch the remaining public UCI benchmark datasets into data/uci/.

breast_cancer.csv ships with the repository; the other four need network
access to the UCI archive (and one OpenML mirror fallback). Each download is
converted to the loader's expected shape: header row, numeric feature
columns, two-valued label in the last column. Re-running skips files that
already exist.

Offline environments simply end up with fewer CSVs; the benchmark tests skip
per dataset.
"""

import csv
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "uci"

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"

# name -> (urls to try, header names incl. label, csv has header row already)
SOURCES = {
    "banknote": (
        [f"{UCI}/00267/data_banknote_authentication.txt"],
        ["variance", "skewness", "curtosis", "entropy", "class"],
    ),
    "diabetes": (
        [
            f"{UCI}/pima-indians-diabetes/pima-indians-diabetes.data",
            "https://www.openml.org/data/get_csv/37/dataset_37_diabetes.arff",
        ],
        ["pregnancies", "glucose", "blood_pressure", "skin_thickness",
         "insulin", "bmi", "pedigree", "age", "class"],
    ),
    "transfusion": (
        [f"{UCI}/blood-transfusion/transfusion.data"],
        ["recency", "frequency", "monetary", "time", "donated"],
    ),
    "haberman": (
        [f"{UCI}/haberman/haberman.data"],
        ["age", "year", "positive_nodes", "survival"],
    ),
}


def _download(urls: list[str]) -> str | None:
    for url in urls:
        try:
            with urllib.request.urlopen(url, timeout=30) as resp:
                payload = resp.read()
        except OSError as exc:
            print(f"  {url}: {exc}", file=sys.stderr)
            continue
        if url.endswith(".zip"):
            with zipfile.ZipFile(io.BytesIO(payload)) as zf:
                inner = zf.namelist()[0]
                payload = zf.read(inner)
        return payload.decode("utf-8", errors="replace")
    return None


def _normalize(name: str, text: str, header: list[str]) -> list[list[str]]:
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    # drop a header row if the source carries one
    if rows and not _numeric(rows[0][0]):
        rows = rows[1:]
    width = len(header)
    clean = []
    for row in rows:
        if len(row) != width:
            raise ValueError(f"{name}: expected {width} fields, got {len(row)}: {row}")
        clean.append([c.strip().strip("'\"") for c in row])
    return clean


def _numeric(cell: str) -> bool:
    try:
        float(cell.strip().strip("'\""))
        return True
    except ValueError:
        return False


def main() -> int:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    missing = 0
    for name, (urls, header) in SOURCES.items():
        out = DATA_DIR / f"{name}.csv"
        if out.exists():
            print(f"{name}: already present")
            continue
        print(f"{name}: fetching ...")
        text = _download(urls)
        if text is None:
            print(f"{name}: unavailable (offline?)", file=sys.stderr)
            missing += 1
            continue
        rows = _normalize(name, text, header)
        with out.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        print(f"{name}: wrote {out} ({len(rows)} rows)")
    return 1 if missing else 0


if __name__ == "__main__":
    sys.exit(main())
