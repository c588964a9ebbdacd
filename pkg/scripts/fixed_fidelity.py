"""Spike counts of the Q8.12 datapath against float Euler at several dt shifts."""
import argparse

import numpy as np

from pwlneuron import fixedpoint as fx
from pwlneuron import models as nc
from pwlneuron.models import KCoeffs, ModelKind, NeuronParams

K = {ModelKind.PWL2: KCoeffs(0.75, 20), ModelKind.PWL3: KCoeffs(0.625, 5.8, 6.4),
     ModelKind.PWL4: KCoeffs(0.375, 0.75, 11), ModelKind.ORIGINAL_DISCRETIZED: nc.NO_K}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--current", type=float, default=14.0)
    ap.add_argument("--ms", type=float, default=1000.0)
    ap.add_argument("--shifts", type=int, nargs="+", default=[1, 2, 4, 8, 10, 12, 14])
    args = ap.parse_args()
    for c in (0.203125, 0.3125, 0.75, 0.625, 0.375, 20, 11):
        print(f"{c:g} = {fx.decompose_constant(c, 3)}")
    print(f"{'model':22s}{'shift':>6s}{'fixed':>7s}{'float':>7s}{'dev':>10s}{'sat':>8s}")
    for model, k in K.items():
        p = NeuronParams(model, 0.203125, 0.3125, -65, 6, 30, k)
        for sh in args.shifts:
            n = int(round(args.ms * 2 ** sh))
            fr = fx.fixed_simulate_fast(fx.FixedNeuron.from_params(p, dt_shift=sh), args.current, n)
            fl = nc.simulate(p, args.current, 2.0 ** -sh, n_steps=n)
            a, b = np.array(fr.spike_steps), fl.spike_steps
            m = min(len(a), len(b))
            dev = int(np.abs(a[:m] - b[:m]).max()) if m else 0
            print(f"{model.value:22s}{sh:6d}{len(a):7d}{len(b):7d}{dev:10d}{fr.saturated_steps:8d}")


if __name__ == "__main__":
    main()
