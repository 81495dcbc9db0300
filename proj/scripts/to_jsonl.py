#!/usr/bin/env python3
"""Export a labeled text corpus as the JSONL this pipeline consumes.

One object per line: {"text": ..., "label": ...}.

Two sources:
  * default: 20 Newsgroups via scikit-learn (downloads on first use)
  * --input-dir DIR: a directory tree DIR/<label>/<file>, one document
    per file, label taken from the subdirectory name
"""

import argparse
import json
import sys
from pathlib import Path


def from_directory(root: Path):
    for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for doc in sorted(p for p in label_dir.iterdir() if p.is_file()):
            text = doc.read_text(encoding="utf-8", errors="replace")
            yield text, label_dir.name


def from_sklearn(subset: str):
    from sklearn.datasets import fetch_20newsgroups

    data = fetch_20newsgroups(
        subset=subset, remove=("headers", "footers", "quotes")
    )
    for text, target in zip(data.data, data.target):
        yield text, data.target_names[target]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="output JSONL path")
    ap.add_argument("--input-dir", help="read <label>/<file> trees instead of 20 Newsgroups")
    ap.add_argument(
        "--subset",
        default="all",
        choices=["train", "test", "all"],
        help="20 Newsgroups subset (the pipeline does its own splitting)",
    )
    args = ap.parse_args()

    docs = (
        from_directory(Path(args.input_dir))
        if args.input_dir
        else from_sklearn(args.subset)
    )

    count = 0
    labels = set()
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as out:
        for text, label in docs:
            text = " ".join(text.split())
            if not text:
                continue  # empty documents carry no features
            out.write(json.dumps({"text": text, "label": label}) + "\n")
            count += 1
            labels.add(label)

    print(f"wrote {count} documents, {len(labels)} labels -> {out_path}")
    return 0 if count else 1


if __name__ == "__main__":
    sys.exit(main())
