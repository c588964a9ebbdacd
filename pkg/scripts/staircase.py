"""Classify each level of the staircase demo for every model and plot the traces."""
import argparse
from pathlib import Path

from pwlneuron import models as nc
from pwlneuron.models import ModelKind, Stimulus
from pwlneuron.svg import traces_svg

MODELS = (ModelKind.ORIGINAL, ModelKind.PWL4, ModelKind.PWL3, ModelKind.PWL2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--segment-ms", type=float, default=250.0)
    ap.add_argument("--out", default="out/staircase")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    series = {}
    for m in MODELS:
        p = nc.STAIRCASE_DEMO.params(m)
        levels = nc.STAIRCASE_LEVELS[m]
        regimes = nc.staircase_regimes(p, levels, segment_ms=args.segment_ms)
        print(f"{m.value:9s} I={'/'.join(f'{x:g}' for x in levels):18s} {' > '.join(regimes)}")
        dur = args.segment_ms * len(levels)
        tr = nc.simulate(p, Stimulus.staircase(levels, dur), duration_ms=dur, trace=True,
                         record_every=64)
        series[m.value] = (tr.trace_times(), tr.trace)
    traces_svg(out / "staircase.svg", series, "staircase input")
    print(f"wrote {out / 'staircase.svg'}")


if __name__ == "__main__":
    main()
