"""Static model and cycle emulation of the shared neuron pipeline.

N virtual neurons share one V datapath and one U datapath.  State circulates
through a ring made of the V_S pipeline registers plus an (N - V_S)-deep
buffer, so each neuron is updated once every N clocks.  An input unit with
I_S compute stages and D_S delay stages delivers each neuron's current the
cycle it re-enters the pipeline.
"""
from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import fixedpoint as fx
from .errors import ConfigError, Infeasible
from .fixedpoint import FixedNeuron, FixedRun, FixedState
from .models import ModelKind

V_STAGES = {
    ModelKind.ORIGINAL: 6,
    ModelKind.ORIGINAL_DISCRETIZED: 6,
    ModelKind.PWL2: 5,
    ModelKind.PWL3: 6,
    ModelKind.PWL4: 7,
}
U_STAGES = len(fx.U_STAGES)
WORD_BITS = 20


@dataclass(frozen=True)
class PipelineSpec:
    model: ModelKind
    n_neurons: int
    v_s: int
    u_s: int
    i_s: int
    d_s: int
    v_buffer_size: int
    u_buffer_size: int
    wb: int = WORD_BITS
    vb: int = WORD_BITS
    ub: int = WORD_BITS

    def __post_init__(self):
        bad = self.violations()
        if bad:
            raise ConfigError("pipeline spec breaks the synchronisation identities: "
                              + "; ".join(bad))

    def violations(self) -> list[str]:
        out = []
        if min(self.v_s, self.u_s, self.i_s, self.d_s, self.v_buffer_size,
               self.u_buffer_size) < 0:
            out.append("stage counts and buffer sizes must be >= 0")
        if self.n_neurons != self.v_buffer_size + self.v_s:
            out.append("N != V_buffer + V_S")
        if self.n_neurons != self.u_buffer_size + self.u_s:
            out.append("N != U_buffer + U_S")
        if self.v_buffer_size != self.u_buffer_size:
            out.append("V_buffer != U_buffer")
        if self.v_s != self.u_s:
            out.append("V_S != U_S")
        if self.i_s + self.d_s + self.v_s != self.n_neurons:
            out.append("I_S + D_S + V_S != N")
        if self.v_s != V_STAGES[self.model]:
            out.append(f"V_S must be {V_STAGES[self.model]} for {self.model.value}")
        return out

    @property
    def u_delay_stages(self) -> int:
        return self.u_s - U_STAGES

    def to_json(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d


def plan_pipeline(model: ModelKind, n_neurons: int, i_s: int) -> PipelineSpec:
    """Smallest consistent schedule: delay stages make up any slack."""
    v_s = V_STAGES[model]
    if i_s < 0:
        raise ConfigError("i_s must be >= 0")
    if n_neurons < i_s + v_s:
        raise Infeasible(f"{n_neurons} neurons cannot fill {i_s} input + {v_s} V stages; "
                         f"need at least {i_s + v_s}")
    buf = n_neurons - v_s
    return PipelineSpec(model, n_neurons, v_s, v_s, i_s, n_neurons - i_s - v_s, buf, buf)


@dataclass(frozen=True)
class ResourceReport:
    """Minimum V-datapath resources; clock figures are not modelled."""

    model: ModelKind
    adders: int
    multipliers: int
    multiplexers: int
    critical_path: str
    v_pipeline_stages: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d


_RESOURCES = {
    ModelKind.ORIGINAL: (6, 1, 2),
    ModelKind.PWL2: (6, 0, 3),
    ModelKind.PWL3: (8, 0, 4),
    ModelKind.PWL4: (11, 0, 5),
}


def resources(model: ModelKind) -> ResourceReport:
    key = ModelKind.ORIGINAL if model is ModelKind.ORIGINAL_DISCRETIZED else model
    add, mul, mux = _RESOURCES[key]
    # The multiplier sets the clock for the quadratic model, an adder otherwise.
    crit = "Multiply" if mul else "Add"
    return ResourceReport(model, add, mul, mux, crit, V_STAGES[model])


# --------------------------------------------------------------------------
# Cycle emulation


@dataclass
class _Slot:
    neuron: int
    step: int
    vs: dict | None      # V-path registers; None while the ring is being loaded
    us: dict | None
    state: FixedState


class ScheduleError(RuntimeError):
    def __init__(self, msg, cycle, neuron):
        super().__init__(f"cycle {cycle}, neuron {neuron}: {msg}")
        self.cycle = cycle
        self.neuron = neuron


def _input_for(inputs, j: int, n: int) -> int:
    if isinstance(inputs, (int, np.integer)):
        return int(inputs)
    arr = np.asarray(inputs)
    return int(arr[j]) if arr.ndim == 1 else int(arr[n, j])


def schedule_simulate(spec: PipelineSpec, neurons: list[FixedNeuron], inputs, n_steps: int,
                      states: list[FixedState] | None = None,
                      trace: list | None = None) -> list[FixedRun]:
    """Clock-by-clock emulation of the shared pipeline.

    ``inputs`` is one raw current for all neurons, one per neuron, or an
    ``(n_steps, N)`` array.  Pass a list as ``trace`` to collect
    ``(cycle, unit, neuron)`` occupancy records.
    """
    n = spec.n_neurons
    if len(neurons) != n:
        raise ConfigError(f"spec is for {n} neurons, got {len(neurons)}")
    if any(nr.model is not spec.model for nr in neurons):
        raise ConfigError("every neuron must use the pipeline's model")
    if len({nr.dt_shift for nr in neurons}) != 1:
        raise ConfigError("neurons must share one dt shift")
    if states is None:
        states = [FixedState(nr.c, fx._plan_raw(nr.c, nr.b_plan)) for nr in neurons]
    v_fns = fx.V_STAGES[spec.model]
    u_fns = fx.U_STAGES + [None] * spec.u_delay_stages
    assert len(v_fns) == spec.v_s and len(u_fns) == spec.u_s

    # Ring at cycle 0: register s (1-based) holds the neuron that "entered"
    # s cycles ago, i.e. N - s; those slots only carry their initial state.
    regs: list[_Slot | None] = [_Slot(n - s, 0, None, None, states[n - s])
                                for s in range(1, spec.v_s + 1)]
    buffer = deque(_Slot(j, 0, None, None, states[j]) for j in range(spec.v_buffer_size))
    lag = spec.i_s + spec.d_s
    # Input unit: entries are (neuron, step, current); the head is consumed by
    # the neuron entering the V pipeline this cycle.
    iline = deque((j, 0, _input_for(inputs, j, 0)) for j in range(lag))
    spikes = [[] for _ in range(n)]
    sats = [0] * n
    done = [0] * n
    cycle = 0
    while min(done) < n_steps:
        # Exit of the last V/U register back into the buffer.
        out = regs[-1]
        if out.vs is None:
            nxt = out
        else:
            j = out.neuron
            merged = {"v_next": out.vs["v_next"], "u_next": out.us["u_next"],
                      "saturated": out.vs["saturated"] or out.us["saturated"]}
            v, u, fired, _ = fx.apply_reset(neurons[j], merged)
            if fired:
                spikes[j].append(out.step)
            if merged["saturated"]:
                sats[j] += 1
            done[j] = out.step + 1
            nxt = _Slot(j, out.step + 1, None, None, FixedState(v, u))
        if len(iline) != lag:
            raise ScheduleError("input line length drifted", cycle, nxt.neuron)
        # The input unit starts on the neuron that just left the pipeline.
        if lag:
            iline.append((nxt.neuron, nxt.step, _input_for_safe(inputs, nxt, n_steps)))
        buffer.append(nxt)
        # Shift registers; each stage's logic acts as the slot moves into it.
        regs[1:] = regs[:-1]
        entering = buffer.popleft()
        if lag:
            ij, istep, i_raw = iline.popleft()
        else:
            ij, istep, i_raw = (entering.neuron, entering.step,
                                _input_for_safe(inputs, entering, n_steps))
        if (ij, istep) != (entering.neuron, entering.step):
            raise ScheduleError(f"input for neuron {ij} step {istep} met state of step "
                                f"{entering.step}", cycle, entering.neuron)
        j = entering.neuron
        if done[j] >= n_steps or entering.step >= n_steps:
            regs[0] = _Slot(j, entering.step, None, None, entering.state)
        else:
            st = entering.state
            regs[0] = _Slot(j, entering.step, fx.new_slot(st.v, st.u, i_raw),
                            fx.new_slot(st.v, st.u, i_raw), st)
        for s, slot in enumerate(regs):
            if slot is None or slot.vs is None:
                continue
            # Register s was just loaded; run its stage logic once.
            v_fns[s](neurons[slot.neuron], slot.vs)
            if u_fns[s] is not None:
                u_fns[s](neurons[slot.neuron], slot.us)
            if trace is not None:
                trace.append((cycle, f"V{s + 1}", slot.neuron))
        cycle += 1
    final = {}
    for slot in list(buffer) + [r for r in regs if r is not None]:
        if slot.vs is None:
            final[slot.neuron] = slot.state
    return [FixedRun(spikes[j], None, sats[j], final.get(j), neurons[j].dt) for j in range(n)]


def _input_for_safe(inputs, slot: _Slot, n_steps: int) -> int:
    if slot.step >= n_steps:
        return 0
    return _input_for(inputs, slot.neuron, slot.step)


def write_trace_csv(trace: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle", "unit", "neuron_id"])
        w.writerows(trace)


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj.to_json(), indent=2, sort_keys=True) + "\n")
