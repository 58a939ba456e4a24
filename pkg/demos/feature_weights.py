"""Fit the logistic model on a synthetic benchmark and list its largest weights.

Inputs are standardized before fitting, so weight magnitudes are comparable.
"""
import argparse

from templink import PipelineConfig, SyntheticSpec, generate_synthetic, ingest, run_pipeline
from templink.dataset import COLUMN_NAMES
from templink.models import feature_report, format_report


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--top", type=int, default=15)
    args = ap.parse_args()

    bench = generate_synthetic(SyntheticSpec(seed=args.seed))
    res = run_pipeline(ingest(bench.records), bench.pairs, PipelineConfig().with_seed(args.seed),
                       labels=bench.labels, classifiers=("logistic",))
    model, _ = res.models["logistic"]
    print(f"logistic AUC {res.reports['logistic'].auc:.4f}")
    print(format_report(feature_report(model, COLUMN_NAMES), top=args.top))


if __name__ == "__main__":
    main()
