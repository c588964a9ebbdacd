"""Per-type CF of each PWL model against the original, with the means."""
import argparse

from pwlneuron import models as nc
from pwlneuron import search as cs
from pwlneuron.models import ModelKind

PWL = (ModelKind.PWL2, ModelKind.PWL3, ModelKind.PWL4)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cycles", type=int, default=5)
    args = ap.parse_args()
    run = cs.TypeRun(cycles=args.cycles)
    res = {m: cs.mean_type_cf(m, run) for m in PWL}
    print(f"{'type':34s}" + "".join(f"{m.value:>10s}" for m in PWL))
    for key in nc.CANONICAL_TYPES:
        print(f"{key:34s}" + "".join(f"{res[m][1][key]:10.4g}" for m in PWL))
    print(f"{'mean':34s}" + "".join(f"{res[m][0]:10.4g}" for m in PWL))
    print(f"{'reported mean error %':34s}"
          + "".join(f"{nc.REPORTED_MEAN_ERROR_PCT[m]:10.4g}" for m in PWL))


if __name__ == "__main__":
    main()
