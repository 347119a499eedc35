"""Family classifier accuracy on generated corpora.

For each seed: an 85/15 held-out split and a stratified k-fold run over a
freshly generated labeled corpus. Prints per-seed numbers and a summary.

    python3 scripts/classifier_experiment.py --seeds 10 --noise 0.1
"""
import argparse
import json

import numpy as np

from tabledep import synth
from tabledep.families import FamilyModel, extract_features, kfold_accuracy


def held_out(labeled, train_fraction):
    cut = int(train_fraction * len(labeled))
    X = np.stack([extract_features(t).as_array() for t, _ in labeled])
    y = [f for _, f in labeled]
    model = FamilyModel.fit(X[:cut], y[:cut])
    pred = [f for f, _ in model.predict(X[cut:])]
    return float(np.mean([p == t for p, t in zip(pred, y[cut:])])), X, y


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tables", type=int, default=130)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--noise", type=float, default=0.05)
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--train-fraction", type=float, default=0.85)
    ap.add_argument("--json", action="store_true", help="emit one JSON object per seed")
    args = ap.parse_args()

    split, cv = [], []
    for seed in range(args.seeds):
        labeled = synth.generate_tables(args.tables, seed=seed, noise=args.noise)
        acc, X, y = held_out(labeled, args.train_fraction)
        report = kfold_accuracy(X, y, k=args.folds, seed=seed)
        split.append(acc)
        cv.append(report["overall"])
        if args.json:
            print(json.dumps({"seed": seed, "held_out": acc, "kfold": report}, sort_keys=True))
        else:
            worst = min((v, k) for k, v in report.items() if k != "overall")
            print(f"seed {seed:3d}  held-out {acc:.3f}  {args.folds}-fold {report['overall']:.3f}"
                  f"  weakest {worst[1]} {worst[0]:.3f}")
    if not args.json:
        print(f"\nheld-out mean {np.mean(split):.3f} min {np.min(split):.3f}")
        print(f"{args.folds}-fold   mean {np.mean(cv):.3f} min {np.min(cv):.3f}")


if __name__ == "__main__":
    main()
