"""Plan the time-multiplexed pipeline and check it against independent neuron runs."""
import argparse

import numpy as np

from pwlneuron import fixedpoint as fx
from pwlneuron import hardware as hw
from pwlneuron import models as nc
from pwlneuron.models import ModelKind, NeuronParams


def neurons_for(model, n, shift):
    keys = list(nc.CANONICAL_TYPES)
    out = []
    for j in range(n):
        t = nc.neuron_type(keys[j % len(keys)])
        a = fx.nearest_dyadic(abs(t.a)) * np.sign(t.a)
        b = fx.nearest_dyadic(t.b) if t.b else 0.0
        k = t.k_for(model) if model.is_pwl else nc.NO_K
        out.append(fx.FixedNeuron.from_params(NeuronParams(model, a, b, t.c, t.d, 30, k), shift))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--neurons", type=int, default=30)
    ap.add_argument("--is", dest="i_s", type=int, default=20)
    ap.add_argument("--steps", type=int, default=600)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    for model in (ModelKind.PWL2, ModelKind.PWL3, ModelKind.PWL4, ModelKind.ORIGINAL_DISCRETIZED):
        spec = hw.plan_pipeline(model, args.neurons, args.i_s)
        neurons = neurons_for(model, args.neurons, 4)
        inputs = rng.integers(0, 20 * 4096, size=(args.steps, args.neurons))
        runs = hw.schedule_simulate(spec, neurons, inputs, args.steps)
        same = all(r.spike_steps == fx.fixed_simulate_fast(n, inputs[:, j], args.steps).spike_steps
                   for j, (n, r) in enumerate(zip(neurons, runs)))
        res = hw.resources(model)
        print(f"{model.value:22s} V_S={spec.v_s} D_S={spec.d_s} buffer={spec.v_buffer_size} "
              f"adders={res.adders} mul={res.multipliers} mux={res.multiplexers} "
              f"critical={res.critical_path} identical={same}")


if __name__ == "__main__":
    main()
