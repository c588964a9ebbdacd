"""Train the rate-coded classifier on synthetic characters and probe the rule's gradient sign."""
import argparse

import numpy as np

from pwlneuron import learning as lr


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classes", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--flip", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    data = lr.synthetic_dataset(args.classes, 39, args.flip, seed=args.seed)
    train = [p for i, p in enumerate(data) if i // args.classes < 29]
    test = [p for i, p in enumerate(data) if i // args.classes >= 29]
    cfg = lr.LearnerConfig(320, args.classes, epochs=args.epochs, seed=args.seed)
    st = lr.train(train, cfg)
    ev = lr.evaluate(st, cfg, test)
    print(f"I0 = {st.i_bias:.6f}, accuracy {ev.accuracy:.3f} on {len(test)} test patterns")
    for cls, row in ev.class_table().items():
        print(f"class {cls}: " + " ".join(f"{f:6.1f}" for f in row))

    w = np.random.default_rng(3).normal(0, 0.01, size=(320, args.classes))
    probes = lr.gradient_probes(w, cfg, st.i_bias, data[: 6 * args.classes], 200, 0.05, seed=5)
    print(f"rule sign agrees with -dE/dW on {np.mean([p.agrees for p in probes]):.1%} of probes")


if __name__ == "__main__":
    main()
