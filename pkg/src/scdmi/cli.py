"""Command-line entry point.

Subcommands:
  gen       dump the 50 instance polynomials, the shared denominator and a
            manifest CSV
  features  evaluate the 50-entry feature vector on P6 PPM images
  verify    run the oracle-equivalence, channel-exactness and scaling suites
  bench     classification + retrieval benchmark on a manifest or synthetic
            dataset

Exit codes: 0 success, 1 suite failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import denominator_polynomial, serialize_polynomial, catalogue_specs
from .bench import (
    ALL_KINDS,
    DatasetItem,
    DescriptorKind,
    LabeledDataset,
    generate_classification_dataset,
    run_benchmark,
)
from .engine import scdmi50
from .ppm import read_ppm, write_ppm
from .verify import rows_to_csv, run_all


def _ensure_out(path_str: str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args) -> int:
    out = _ensure_out(args.out)
    specs = catalogue_specs()
    for spec in specs:
        (out / f"scdmi_k{spec.k}_{spec.id}.poly").write_text(
            serialize_polynomial(spec.numerator)
        )
    (out / "denominator.poly").write_text(serialize_polynomial(denominator_polynomial()))
    with (out / "manifest.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "k", "n", "m", "N", "M", "e", "term_count"])
        for spec in specs:
            src = spec.source
            w.writerow(
                [
                    spec.id,
                    spec.k,
                    src.shape_point_count,
                    src.shape_degree,
                    src.color_point_count,
                    src.color_degree,
                    str(spec.area_exponent),
                    len(spec.numerator),
                ]
            )
    print(f"wrote {len(specs) + 1} polynomial files and manifest.csv to {out}")
    return 0


def cmd_features(args) -> int:
    out = _ensure_out(args.out)
    header = (
        ["path"]
        + [f"value_{i}" for i in range(1, 51)]
        + [f"valid_{i}" for i in range(1, 51)]
    )
    rows = []
    failures = 0
    for path in args.images:
        try:
            fv = scdmi50(read_ppm(path))
        except Exception as exc:  # per-file: report and continue
            failures += 1
            print(f"error: {path}: {exc}", file=sys.stderr)
            continue
        rows.append(
            [path]
            + [repr(float(v)) for v in fv.values]
            + [str(int(v)) for v in fv.valid]
        )
    target = out / "features.csv"
    with target.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {len(rows)} feature rows to {target}")
    if failures and not rows:
        return 2
    return 0


def cmd_verify(args) -> int:
    rows, ok = run_all(seed=args.seed, tol_color=args.tol_color, tol_shape=args.tol_shape)
    out = _ensure_out(args.out)
    target = out / "verify.csv"
    target.write_text(rows_to_csv(rows))
    n_fail = sum(1 for r in rows if not r.passed)
    print(f"{len(rows)} checks, {n_fail} failures; report at {target}")
    return 0 if ok else 1


def _load_manifest(path: Path) -> LabeledDataset:
    items = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == ["path", "label", "split"]:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            rel, label, split = (c.strip() for c in row)
            if split not in ("train", "test"):
                raise ValueError(f"{path}:{lineno}: split must be train or test, got {split!r}")
            items.append(DatasetItem(label=label, split=split, path=str(path.parent / rel)))
    return LabeledDataset(items)


def _write_synthetic(dataset: LabeledDataset, out: Path) -> None:
    img_dir = out / "dataset"
    img_dir.mkdir(parents=True, exist_ok=True)
    with (out / "dataset_manifest.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "label", "split"])
        for i, item in enumerate(dataset.items):
            name = f"dataset/{item.label}_{i:04d}.ppm"
            # masked-out pixels are baked to black in the exported copies;
            # the benchmark itself runs on the in-memory masked images
            img = item.image
            write_ppm(
                out / name,
                type(img)(
                    np.where(img.mask, img.red, 0.0),
                    np.where(img.mask, img.green, 0.0),
                    np.where(img.mask, img.blue, 0.0),
                    img.mask,
                ),
            )
            w.writerow([name, item.label, item.split])


def cmd_bench(args) -> int:
    out = _ensure_out(args.out)
    if args.synthetic:
        dataset = generate_classification_dataset(
            n_classes=args.classes,
            n_transforms=args.transforms,
            size=args.size,
            seed=args.seed,
            clamp=args.clamp,
        )
        _write_synthetic(dataset, out)
    elif args.manifest is not None:
        dataset = _load_manifest(Path(args.manifest))
    else:
        print("error: bench needs a manifest path or --synthetic", file=sys.stderr)
        return 2

    accuracies, curves = run_benchmark(dataset)
    with (out / "accuracy.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["descriptor", "accuracy"])
        for kind in ALL_KINDS:
            w.writerow([kind.value, repr(float(accuracies[kind]))])
    with (out / "pr_curves.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["descriptor", "recall_level", "precision"])
        for kind in ALL_KINDS:
            curve = curves[kind]
            for r, p in zip(curve.recall_levels, curve.precision):
                w.writerow([kind.value, repr(float(r)), repr(float(p))])
    print(f"wrote accuracy.csv and pr_curves.csv to {out}")
    for kind in ALL_KINDS:
        print(f"  {kind.value}: accuracy {accuracies[kind]:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scdmi", description=__doc__)
    parser.add_argument("--version", action="version", version=f"scdmi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="dump instance polynomials and manifest")
    p_gen.add_argument("--out", default="scdmi_out", help="output directory")
    p_gen.set_defaults(func=cmd_gen)

    p_feat = sub.add_parser("features", help="feature vectors for PPM images")
    p_feat.add_argument("images", nargs="+", help="P6 PPM files")
    p_feat.add_argument("--out", default="scdmi_out")
    p_feat.set_defaults(func=cmd_features)

    p_ver = sub.add_parser("verify", help="run the verification suites")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--out", default="scdmi_out")
    p_ver.add_argument("--tol-color", type=float, default=1e-9)
    p_ver.add_argument("--tol-shape", type=float, default=0.01)
    p_ver.set_defaults(func=cmd_verify)

    p_bench = sub.add_parser("bench", help="classification/retrieval benchmark")
    p_bench.add_argument("manifest", nargs="?", help="dataset manifest CSV (path,label,split)")
    p_bench.add_argument("--synthetic", action="store_true", help="generate a synthetic dataset")
    p_bench.add_argument("--classes", type=int, default=10)
    p_bench.add_argument("--transforms", type=int, default=20)
    p_bench.add_argument("--size", type=int, default=96)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--clamp", action="store_true", help="clamp transformed channels to [0,1]")
    p_bench.add_argument("--out", default="scdmi_out")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
