"""Sweep the 2PWL coefficients for the tonic-spiking cell and report the cold zone."""
import argparse
from pathlib import Path

from pwlneuron import search as cs
from pwlneuron.models import KCoeffs, ModelKind


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--full", action="store_true", help="k1 step 0.01 instead of 0.05")
    ap.add_argument("--out", default="out/grid")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    surf = cs.grid_search(ModelKind.PWL2, "tonic_spiking",
                          cs.SearchGrid.default(ModelKind.PWL2, full=args.full))
    surf.write_csv(out / "surface.csv")
    surf.write_json(out / "surface.json")
    s = surf.summary()
    print(f"min CF {surf.min_cf:.4g} at k1={surf.argmin.k1:g}, k2={surf.argmin.k2:g}")
    print(f"stable area: {s['stable_area_size']} points, bbox {s['stable_area_bbox']}")
    for k in (KCoeffs(0.75, 20), KCoeffs(0.625, 20), KCoeffs(8.0, 10)):
        print(f"CF({k.k1:g}, {k.k2:g}) = {surf.cf_at(k):.4g}  stable: {surf.in_stable_area(k)}")


if __name__ == "__main__":
    main()
