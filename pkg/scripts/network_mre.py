"""MRE of the PWL models on shared random networks, plus the population rhythm."""
import argparse
from pathlib import Path

import numpy as np

from pwlneuron import network as net
from pwlneuron.models import ModelKind
from pwlneuron.svg import raster_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--rhythm-n", type=int, default=2000)
    ap.add_argument("--out", default="out/network")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for seed in args.seeds:
        res = net.compare_models(net.NetworkConfig(n_total=args.n, seed=seed))
        rows.append([res[m].mre_pct for m in res])
        print(f"seed {seed}: " + ", ".join(f"{m.value} {r.mre_pct:.2f}%" for m, r in res.items()))
    mean = np.mean(rows, axis=0)
    print("mean:   " + ", ".join(f"{m} {v:.2f}%" for m, v in zip(("pwl2", "pwl3", "pwl4"), mean)))

    cfg = net.NetworkConfig(n_total=args.rhythm_n, seed=args.seeds[0])
    r = net.simulate_network(cfg)
    print(f"{args.rhythm_n} neurons: {r.n_spikes} spikes, rhythm {net.population_rhythm(r):.2f} Hz")
    r.write_csv(out / "raster.csv")
    raster_svg(out / "raster.svg", r.times, r.neuron, r.n_neurons, cfg.sim_ms, r.is_exc,
               f"{ModelKind.ORIGINAL.value}, {args.rhythm_n} neurons")


if __name__ == "__main__":
    main()
