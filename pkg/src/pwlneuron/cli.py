"""Command-line front end: ``pwlneuron <subcommand> ...``.

Every subcommand writes its artifacts under ``--out`` and prints a JSON
summary on stdout.  Library errors map to exit codes 2 (configuration),
3 (numerics) and 4 (infeasible).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fixedpoint as fx
from . import hardware as hw
from . import learning as lr
from . import models as nc
from . import network as net
from . import search as cs
from . import svg
from .errors import ConfigError, PwlNeuronError
from .models import KCoeffs, ModelKind


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _k(text: str | None) -> KCoeffs | None:
    if text is None:
        return None
    vals = _floats(text)
    if len(vals) not in (2, 3):
        raise ConfigError("--k takes k1,k2 or k1,k2,k3")
    return KCoeffs(*vals)


def _write_csv(path: Path, header: list[str], rows) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _dt_shift(dt: float) -> int:
    s = -math.log2(dt)
    if abs(s - round(s)) > 1e-12 or s < 0:
        raise ConfigError(f"the fixed backend needs dt = 2**-s, got {dt}")
    return int(round(s))


# --------------------------------------------------------------------------
# neuron


def _run_one(args, model: ModelKind, out: Path, tag: str) -> dict:
    nt = nc.neuron_type(args.type)
    params = nt.params(model, _k(args.k) if model.is_pwl else None)
    if args.staircase:
        levels = _floats(args.staircase)
        regimes = nc.staircase_regimes(params, levels, segment_ms=args.segment_ms, dt=args.dt)
        return {"model": model.value, "levels": levels, "regimes": regimes}
    if args.i is not None:
        stim = nc.Stimulus.constant(args.i)
        state = nc.rest_state(params)
    else:
        stim, state = nt.stimulus, nt.initial_state()
    duration = args.duration or nt.duration_ms
    n_steps = int(round(duration / args.dt))
    info: dict = {"model": model.value, "params": {"a": params.a, "b": params.b,
                                                   "c": params.c, "d": params.d}}
    if args.backend == "fixed":
        a = fx.nearest_dyadic(params.a) or 2.0 ** -12
        b = fx.nearest_dyadic(params.b)
        fp = nc.NeuronParams(model, a, b, params.c, params.d, params.v_th, params.k)
        fn = fx.FixedNeuron.from_params(fp, dt_shift=_dt_shift(args.dt))
        i_raw = [fx.encode(float(x)).raw for x in stim(np.arange(n_steps) * args.dt)]
        run = fx.fixed_simulate_fast(fn, i_raw, n_steps,
                                     fx.FixedState(fx.encode(state.v).raw, fx.encode(state.u).raw),
                                     trace=True)
        steps = np.array(run.spike_steps, dtype=np.int64)
        trace = np.array(run.trace[::args.record_every], float) / (1 << fn.fmt.frac_bits)
        info["params"].update(a=a, b=b)
        info["saturated_steps"] = run.saturated_steps
    else:
        tr = nc.simulate(params, stim, args.dt, n_steps, state=state, trace=True,
                         record_every=args.record_every)
        steps, trace = tr.spike_steps, tr.trace
    times = steps * args.dt
    t = np.arange(len(trace)) * args.record_every * args.dt
    _write_csv(out / f"trace_{tag}.csv", ["t_ms", "v_mv"],
               ([repr(float(a)), repr(float(b))] for a, b in zip(t, trace)))
    _write_csv(out / f"spikes_{tag}.csv", ["spike_time_ms"], ([repr(float(x))] for x in times))
    info.update(spikes=int(len(steps)), trace=(t, trace))
    return info


def cmd_neuron(args) -> dict:
    out = Path(args.out)
    models = [ModelKind.parse(m) for m in args.compare.split(",")] if args.compare \
        else [ModelKind.parse(args.model)]
    runs = [_run_one(args, m, out, m.value) for m in models]
    summary: dict = {"type": args.type, "dt": args.dt, "backend": args.backend}
    if args.staircase:
        summary["runs"] = runs
        return summary
    if len(runs) == 2:
        cfg = cs.CfConfig(cycles=args.cycles, resync=True)
        summary["cf"] = cs.cost_function(runs[0]["trace"][1], runs[1]["trace"][1], cfg)
    if args.format == "svg":
        svg.traces_svg(out / "trace.svg", {r["model"]: r["trace"] for r in runs},
                       title=f"{args.type}")
    for r in runs:
        r.pop("trace")
    summary["runs"] = runs
    return summary


# --------------------------------------------------------------------------
# search


def _grid(spec: str, model: ModelKind) -> cs.SearchGrid:
    if spec in ("default", "full"):
        return cs.SearchGrid.default(model, full=spec == "full")
    axes = []
    for part in spec.split(","):
        vals = [float(x) for x in part.split(":")]
        if len(vals) != 3:
            raise ConfigError("grid axes are lo:hi:step separated by commas")
        axes.append(cs.AxisRange(*vals))
    return cs.SearchGrid(*axes)


def cmd_search(args) -> dict:
    model = ModelKind.parse(args.model)
    setup = cs.SearchSetup.for_type(args.type, duration_ms=args.duration, dt=args.dt,
                                    record_every=args.record_every, settle_ms=args.settle_ms,
                                    cycles=args.cycles)
    surf = cs.grid_search(model, args.type, _grid(args.grid, model), setup)
    out = Path(args.out)
    surf.write_csv(out / "surface.csv")
    surf.write_json(out / "surface.json")
    s = surf.summary()
    s.pop("target_area")
    s["target_area_size"] = int(surf.target_mask.sum())
    return s


# --------------------------------------------------------------------------
# network


def cmd_network(args) -> dict:
    cfg = net.NetworkConfig(n_total=args.n, seed=args.seed, sim_ms=args.sim_ms, dt=args.dt,
                            model=ModelKind.parse(args.model), k=_k(args.k))
    out = Path(args.out)
    network = net.build_network(cfg)
    noise = net.thalamic_noise(cfg)
    raster = net.run_network(network, cfg, noise)
    raster.write_csv(out / "raster.csv")
    net.write_rate_csv(raster, out / "rate.csv")
    net.write_config_json(cfg, out / "config.json")
    summary = {"model": cfg.model.value, "n": cfg.n_total, "seed": cfg.seed,
               "spikes": raster.n_spikes}
    try:
        summary["rhythm_hz"] = net.population_rhythm(raster)
    except PwlNeuronError as e:
        summary["rhythm_hz"] = None
        summary["rhythm_note"] = str(e)
    if args.compare:
        other = cfg.with_model(ModelKind.parse(args.compare))
        ref = net.run_network(network, other, noise)
        res = net.mre(ref, raster)
        summary.update(compare=other.model.value, mre_pct=res.mre_pct, matched=res.matched,
                       surplus=res.surplus)
    if args.format == "svg":
        svg.raster_svg(out / "raster.svg", raster.times, raster.neuron, raster.n_neurons,
                       cfg.sim_ms, raster.is_exc, title=f"{cfg.model.value} n={cfg.n_total}")
    return summary


# --------------------------------------------------------------------------
# train / eval


def _patterns(args, train: bool) -> list[lr.Pattern]:
    if args.dataset:
        return lr.read_manifest(args.dataset)
    data = lr.synthetic_dataset(args.classes, args.train_writers + args.test_writers,
                                args.flip, seed=args.seed)
    cut = args.classes * args.train_writers
    return data[:cut] if train else data[cut:]


def _learner(args, n_inputs: int, n_outputs: int) -> lr.LearnerConfig:
    return lr.LearnerConfig(n_inputs, n_outputs, alpha_shift=args.alpha_shift,
                            window_ms=args.window_ms, epochs=args.epochs, dt=args.dt,
                            model=ModelKind.parse(args.model), backend=args.backend,
                            seed=args.seed)


def cmd_train(args) -> dict:
    pats = _patterns(args, train=True)
    n_out = max(p.label for p in pats) + 1
    cfg = _learner(args, pats[0].bipolar.size, n_out)
    state = lr.train(pats, cfg)
    out = Path(args.out)
    lr.write_weights_csv(state, cfg, out / "weights.csv")
    lr.write_log_csv(state, out / "convergence.csv")
    last = {c: f for e, c, f in state.log if e == cfg.epochs - 1}
    return {"model": cfg.model.value, "patterns": len(pats), "outputs": n_out,
            "i_bias": state.i_bias, "presentations": state.presentations,
            "final_target_hz": {str(k): v for k, v in sorted(last.items())}}


def cmd_eval(args) -> dict:
    w, i0, fmt = lr.read_weights_csv(args.weights)
    pats = _patterns(args, train=False)
    cfg = _learner(args, w.shape[0], w.shape[1])
    state = lr.LearnerState(w, i0, np.zeros(w.shape[1], dtype=np.int64))
    ev = lr.evaluate(state, cfg, pats)
    out = Path(args.out)
    _write_csv(out / "predictions.csv", ["label", "predicted"],
               zip(ev.labels.tolist(), ev.predictions.tolist()))
    return {"accuracy": ev.accuracy, "patterns": len(pats), "weights_format": fmt,
            "class_frequencies_hz": {str(k): v for k, v in ev.class_table().items()}}


# --------------------------------------------------------------------------
# hwplan


def cmd_hwplan(args) -> dict:
    model = ModelKind.parse(args.model)
    spec = hw.plan_pipeline(model, args.neurons, args.i_s)
    rep = hw.resources(model)
    out = Path(args.out)
    hw.write_json(spec, out / "pipeline.json")
    hw.write_json(rep, out / "resources.json")
    return {"pipeline": spec.to_json(), "resources": rep.to_json()}


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwlneuron", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory (created if missing)")
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv",
                   help="svg also writes a plot next to the data files")
    p.add_argument("--backend", choices=lr.BACKENDS, default="float")
    p.add_argument("--config", help="JSON file of option defaults; flags override it")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("neuron", help="simulate one neuron")
    s.add_argument("--model", default="original")
    s.add_argument("--type", default="tonic_spiking")
    s.add_argument("--k", help="k1,k2[,k3]; default is the registry value")
    s.add_argument("--i", type=float, help="constant input instead of the type's protocol")
    s.add_argument("--staircase", help="comma-separated current levels")
    s.add_argument("--segment-ms", type=float, default=250.0)
    s.add_argument("--compare", help="two models, e.g. original,pwl2; reports CF")
    s.add_argument("--cycles", type=int, default=1)
    s.add_argument("--dt", type=float, default=nc.DT_HW)
    s.add_argument("--duration", type=float)
    s.add_argument("--record-every", type=int, default=64)
    s.set_defaults(func=cmd_neuron)

    s = sub.add_parser("search", help="grid search over k coefficients")
    s.add_argument("--model", default="pwl2")
    s.add_argument("--type", default="tonic_spiking")
    s.add_argument("--grid", default="default", help="default, full or lo:hi:step,...")
    s.add_argument("--duration", type=float, default=1000.0)
    s.add_argument("--dt", type=float, default=2.0 ** -8)
    s.add_argument("--record-every", type=int, default=8)
    s.add_argument("--settle-ms", type=float, default=200.0)
    s.add_argument("--cycles", type=int, default=5)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("network", help="random excitatory/inhibitory network")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--model", default="original")
    s.add_argument("--k")
    s.add_argument("--compare", help="reference model for the MRE")
    s.add_argument("--sim-ms", type=float, default=1000.0)
    s.add_argument("--dt", type=float, default=0.5)
    s.set_defaults(func=cmd_network)

    for name, fn in (("train", cmd_train), ("eval", cmd_eval)):
        s = sub.add_parser(name, help={"train": "train", "eval": "evaluate"}[name] + " the rate-coded classifier")
        s.add_argument("--model", default="original")
        s.add_argument("--dataset", help="CSV manifest (path,label) of PBM bitmaps")
        s.add_argument("--classes", type=int, default=5)
        s.add_argument("--train-writers", type=int, default=29)
        s.add_argument("--test-writers", type=int, default=10)
        s.add_argument("--flip", type=float, default=0.1, help="synthetic pixel-flip rate")
        s.add_argument("--epochs", type=int, default=5)
        s.add_argument("--alpha-shift", type=int, default=17)
        s.add_argument("--window-ms", type=float, default=250.0)
        s.add_argument("--dt", type=float, default=2.0 ** -4)
        if name == "eval":
            s.add_argument("--weights", required=True)
        s.set_defaults(func=fn)

    s = sub.add_parser("hwplan", help="pipeline schedule and resource counts")
    s.add_argument("--model", default="pwl2")
    s.add_argument("--neurons", type=int, default=30)
    s.add_argument("--is", dest="i_s", type=int, default=25)
    s.set_defaults(func=cmd_hwplan)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read config {args.config}: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    # Re-parse with the file's values as defaults so explicit flags still win.
    known = vars(args)
    unknown = sorted(set(cfg) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    parser.set_defaults(**cfg)
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k: v for k, v in cfg.items()
                               if any(a.dest == k for a in sp._actions)})
    return parser.parse_args(argv)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, sys.argv[1:] if argv is None else argv)
        out = Path(args.out)
        if out.exists() and not out.is_dir():
            raise ConfigError(f"--out {out} exists and is not a directory")
        for name in ("weights", "dataset"):
            path = getattr(args, name, None)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"--{name} {path} does not exist")
        out.mkdir(parents=True, exist_ok=True)
        summary = args.func(args)
    except PwlNeuronError as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return e.exit_code
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
