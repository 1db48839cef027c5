#!/usr/bin/env python3
"""Fetch the tabular benchmark datasets and convert them to the CSV layout
the trainer expects: <root>/<name>/{train,test}.csv with a header row and a
"label" column.

Sources (Hugging Face dataset repos; set HF_ENDPOINT to use a mirror):
  mnist     ylecun/mnist parquet files (official 60k/10k split)
  adult     scikit-learn/adult-census-income adult.csv (the 32561-row UCI
            train portion; a seeded 80/20 split provides the test set here,
            since the UCI test portion is not in that repo)
  letter    mstz/letter letter.data (UCI convention: first 16000 train,
            last 4000 test)
  covertype mstz/covertype covtype.data (official first 15120 rows train,
            remainder test) — optional, enable with --covertype

Raw downloads are cached in --cache and reused when present.
"""

import argparse
import io
import os
import sys
import urllib.request

import numpy as np
import pandas as pd

FILES = {
    "mnist_train.parquet": "datasets/ylecun/mnist/resolve/main/mnist/train-00000-of-00001.parquet",
    "mnist_test.parquet": "datasets/ylecun/mnist/resolve/main/mnist/test-00000-of-00001.parquet",
    "adult.csv": "datasets/scikit-learn/adult-census-income/resolve/main/adult.csv",
    "letter.data": "datasets/mstz/letter/resolve/main/letter.data",
    "covtype.data": "datasets/mstz/covertype/resolve/main/covtype.data",
}


def endpoint() -> str:
    return os.environ.get("HF_ENDPOINT", "https://huggingface.co").rstrip("/")


def fetch(cache: str, name: str) -> str:
    path = os.path.join(cache, name)
    if os.path.exists(path) and os.path.getsize(path) > 0:
        return path
    url = f"{endpoint()}/{FILES[name]}"
    print(f"downloading {url}", file=sys.stderr)
    os.makedirs(cache, exist_ok=True)
    tmp = path + ".part"
    urllib.request.urlretrieve(url, tmp)
    os.replace(tmp, path)
    return path


def write_split(root: str, name: str, train: pd.DataFrame, test: pd.DataFrame):
    out = os.path.join(root, name)
    os.makedirs(out, exist_ok=True)
    for part, df in (("train", train), ("test", test)):
        assert "label" in df.columns
        cols = [c for c in df.columns if c != "label"] + ["label"]
        df[cols].to_csv(os.path.join(out, f"{part}.csv"), index=False)
        print(f"{out}/{part}.csv: {len(df)} rows, {len(cols) - 1} features",
              file=sys.stderr)


def mnist_frame(parquet_path: str) -> pd.DataFrame:
    from PIL import Image

    df = pd.read_parquet(parquet_path)
    pixels = np.stack([
        np.asarray(Image.open(io.BytesIO(rec["bytes"])), dtype=np.uint8).ravel()
        for rec in df["image"]
    ]).astype(np.float64) / 255.0
    out = pd.DataFrame(np.round(pixels, 6),
                       columns=[f"p{i}" for i in range(pixels.shape[1])])
    out["label"] = df["label"].to_numpy()
    return out


def convert_mnist(cache: str, root: str):
    write_split(root, "mnist",
                mnist_frame(fetch(cache, "mnist_train.parquet")),
                mnist_frame(fetch(cache, "mnist_test.parquet")))


def convert_adult(cache: str, root: str):
    df = pd.read_csv(fetch(cache, "adult.csv"))
    label = df.pop("income").rename("label")
    cat = df.select_dtypes(include="object").columns
    df = pd.get_dummies(df, columns=list(cat), dtype=np.uint8)
    df["label"] = label
    order = np.random.RandomState(0).permutation(len(df))
    n_test = len(df) // 5
    test = df.iloc[order[:n_test]]
    train = df.iloc[order[n_test:]]
    write_split(root, "adult", train, test)


def convert_letter(cache: str, root: str):
    df = pd.read_csv(fetch(cache, "letter.data"))
    df = df.rename(columns={"letter": "label"})
    write_split(root, "letter", df.iloc[:16000], df.iloc[16000:])


def convert_covertype(cache: str, root: str):
    df = pd.read_csv(fetch(cache, "covtype.data"), header=None)
    df.columns = [f"f{i}" for i in range(df.shape[1] - 1)] + ["label"]
    write_split(root, "covertype", df.iloc[:15120], df.iloc[15120:])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default=os.environ.get("MGCE_DATA_DIR", "data"))
    ap.add_argument("--cache", default=None,
                    help="raw download cache (default <root>/_cache)")
    ap.add_argument("--datasets", nargs="*",
                    default=["mnist", "adult", "letter"])
    ap.add_argument("--covertype", action="store_true",
                    help="also fetch covertype")
    args = ap.parse_args()
    cache = args.cache or os.path.join(args.root, "_cache")

    todo = list(args.datasets)
    if args.covertype and "covertype" not in todo:
        todo.append("covertype")
    converters = {"mnist": convert_mnist, "adult": convert_adult,
                  "letter": convert_letter, "covertype": convert_covertype}
    for name in todo:
        if name not in converters:
            sys.exit(f"unknown dataset '{name}'")
        converters[name](cache, args.root)


if __name__ == "__main__":
    main()
