"""Izhikevich neuron and its piecewise-linear (2/3/4-segment) variants.

All four models share the recovery equation ``u' = a(bv - u)`` and the reset
``v >= v_th -> v = c, u = u + d``; they differ only in the v-nullcline term
``f(v)`` that replaces ``0.04 v^2 + 5 v + 140``.

Time is in ms and voltage in mV.  Integration is forward Euler.  Step ``n``
uses the input sampled at ``t = n * dt`` and produces the state at
``t = (n + 1) * dt``; a spike "at step n" means that update crossed threshold.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConfigError, NonFinite, WindowTooShort

BREAKPOINT = -62.5
"""v at which every absolute-value term of the PWL nullclines is centred."""

ORIGINAL_VERTEX = -16.25
"""Minimum of 0.04 v^2 + 5 v + 140, attained at v = -62.5."""

DT_HW = 1.0 / (16 * 1024)
V_TH = 30.0

BURST_GAP_RATIO = 3.0
TONIC_MAX_CV = 0.2


class ModelKind(enum.Enum):
    ORIGINAL = "original"
    PWL2 = "pwl2"
    PWL3 = "pwl3"
    PWL4 = "pwl4"
    ORIGINAL_DISCRETIZED = "original_discretized"

    @property
    def code(self) -> int:
        return _MODEL_CODES[self]

    @property
    def is_pwl(self) -> bool:
        return self in (ModelKind.PWL2, ModelKind.PWL3, ModelKind.PWL4)

    @classmethod
    def parse(cls, text: str) -> "ModelKind":
        key = text.strip().lower().replace("-", "_")
        aliases = {"2pwl": "pwl2", "3pwl": "pwl3", "4pwl": "pwl4",
                   "orig": "original", "discretized": "original_discretized"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown model {text!r}; choose from "
                              f"{', '.join(m.value for m in cls)}") from None


_MODEL_CODES = {ModelKind.ORIGINAL: 0, ModelKind.PWL2: 1, ModelKind.PWL3: 2,
                ModelKind.PWL4: 3, ModelKind.ORIGINAL_DISCRETIZED: 4}


@dataclass(frozen=True)
class KCoeffs:
    k1: float
    k2: float
    k3: float = 0.0

    def validate(self, model: ModelKind) -> None:
        if not model.is_pwl:
            return
        if not (self.k1 > 0 and self.k2 > 0):
            raise ConfigError(f"k1 and k2 must be positive, got {self}")
        if model is not ModelKind.PWL2 and not self.k3 > 0:
            raise ConfigError(f"{model.value} needs k3 > 0, got {self}")

    def as_tuple(self, model: ModelKind) -> tuple:
        if model is ModelKind.PWL2:
            return (self.k1, self.k2)
        if model.is_pwl:
            return (self.k1, self.k2, self.k3)
        return ()


NO_K = KCoeffs(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class NeuronParams:
    model: ModelKind
    a: float
    b: float
    c: float
    d: float
    v_th: float = V_TH
    k: KCoeffs = NO_K

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "v_th"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.v_th > self.c:
            raise ConfigError(f"v_th ({self.v_th}) must exceed reset c ({self.c})")
        # Two canonical types (inhibition-induced spiking/bursting) use a < 0,
        # so only a == 0 (frozen recovery) is rejected here.
        if self.a == 0:
            raise ConfigError("a must be nonzero")
        self.k.validate(self.model)

    def with_model(self, model: ModelKind, k: KCoeffs | None = None) -> "NeuronParams":
        return replace(self, model=model, k=self.k if k is None else k)

    def packed(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.v_th,
                         self.k.k1, self.k.k2, self.k.k3], dtype=np.float64)


@dataclass
class NeuronState:
    v: float
    u: float


@dataclass
class SpikeTrain:
    spike_steps: np.ndarray
    dt: float
    trace: np.ndarray | None = None
    record_every: int = 1
    n_steps: int = 0

    @property
    def spike_times(self) -> np.ndarray:
        return self.spike_steps * self.dt

    @property
    def count(self) -> int:
        return len(self.spike_steps)

    def trace_times(self) -> np.ndarray:
        if self.trace is None:
            raise ValueError("train has no trace")
        return np.arange(len(self.trace)) * self.record_every * self.dt


# --------------------------------------------------------------------------
# Nullclines and derivatives


@njit(cache=True)
def _f(code, k1, k2, k3, v):
    x = v - BREAKPOINT
    if code == 0:
        return 0.04 * v * v + 5.0 * v + 140.0
    if code == 1:
        return k1 * abs(x) - k2
    if code == 2:
        return k1 * (abs(x + k2) + abs(x - k2)) - k3 * k2 * k1
    if code == 3:
        return k2 * (abs(x + k3) + abs(x - k3)) + k1 * abs(x) - 4.0 * k2 * k3
    return v * v / 32.0 + 4.0 * v + 140.0


def nullcline_value(model: ModelKind, k: KCoeffs, v):
    """v-equation right-hand side with u = 0 and I = 0.

    Accepts scalars or arrays; ``k`` is ignored for the quadratic models.
    """
    x = np.asarray(v, dtype=float) - BREAKPOINT
    if model is ModelKind.ORIGINAL:
        vv = x + BREAKPOINT
        out = 0.04 * vv * vv + 5.0 * vv + 140.0
    elif model is ModelKind.ORIGINAL_DISCRETIZED:
        vv = x + BREAKPOINT
        out = vv * vv / 32.0 + 4.0 * vv + 140.0
    elif model is ModelKind.PWL2:
        out = k.k1 * np.abs(x) - k.k2
    elif model is ModelKind.PWL3:
        out = k.k1 * (np.abs(x + k.k2) + np.abs(x - k.k2)) - k.k3 * k.k2 * k.k1
    else:
        out = k.k2 * (np.abs(x + k.k3) + np.abs(x - k.k3)) + k.k1 * np.abs(x) - 4.0 * k.k2 * k.k3
    return float(out) if out.ndim == 0 else out


def nullcline_slope(model: ModelKind, k: KCoeffs, v: float) -> float:
    """Analytic df/dv on the outer branch (v > breakpoint side of all kinks)."""
    if model is ModelKind.ORIGINAL:
        return 0.08 * v + 5.0
    if model is ModelKind.ORIGINAL_DISCRETIZED:
        return v / 16.0 + 4.0
    if model is ModelKind.PWL2:
        return k.k1
    if model is ModelKind.PWL3:
        return 2.0 * k.k1
    return 2.0 * k.k2 + k.k1


def derivative(params: NeuronParams, state: NeuronState, i_in: float) -> tuple[float, float]:
    dv = nullcline_value(params.model, params.k, state.v) - state.u + i_in
    du = params.a * (params.b * state.v - state.u)
    return dv, du


def step(params: NeuronParams, state: NeuronState, i_in: float, dt: float):
    """One Euler step with spike reset.

    Returns ``(new_state, fired, emitted_v)``; ``emitted_v`` is clamped to
    ``v_th`` on a firing step so every spike has the same amplitude.
    """
    if not dt > 0:
        raise ConfigError("dt must be positive")
    dv, du = derivative(params, state, i_in)
    v = state.v + dt * dv
    u = state.u + dt * du
    if not (math.isfinite(v) and math.isfinite(u)):
        raise NonFinite(f"non-finite state v={v}, u={u} (dt={dt} too large?)")
    if v >= params.v_th:
        return NeuronState(params.c, u + params.d), True, params.v_th
    return NeuronState(v, u), False, v


# --------------------------------------------------------------------------
# Stimulus protocols


@dataclass(frozen=True)
class Piece:
    """Current ``level + slope * (t - t0)`` added while ``t0 < t < t1`` (ms)."""

    t0: float
    t1: float
    level: float
    slope: float = 0.0


@dataclass(frozen=True)
class Stimulus:
    baseline: float = 0.0
    pieces: tuple[Piece, ...] = ()

    @classmethod
    def constant(cls, value: float) -> "Stimulus":
        return cls(baseline=float(value))

    @classmethod
    def staircase(cls, levels: Sequence[float], duration_ms: float) -> "Stimulus":
        """Each level held for an equal share of ``duration_ms``."""
        seg = duration_ms / len(levels)
        pieces = tuple(Piece(i * seg, (i + 1) * seg, float(lv))
                       for i, lv in enumerate(levels) if lv != 0)
        # Open intervals would drop the sample exactly at each boundary.
        pieces = tuple(Piece(p.t0 - 1e-9, p.t1 - 1e-9, p.level) for p in pieces)
        return cls(0.0, pieces)

    def packed(self) -> np.ndarray:
        if not self.pieces:
            return np.zeros((0, 4))
        return np.array([[p.t0, p.t1, p.level, p.slope] for p in self.pieces], dtype=np.float64)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.baseline)
        for p in self.pieces:
            on = (t > p.t0) & (t < p.t1)
            out = out + np.where(on, p.level + p.slope * (t - p.t0), 0.0)
        return out

    def shifted(self, offset_ms: float) -> "Stimulus":
        return Stimulus(self.baseline, tuple(Piece(p.t0 + offset_ms, p.t1 + offset_ms, p.level, p.slope)
                                             for p in self.pieces))


# --------------------------------------------------------------------------
# Compiled integrator


@njit(cache=True)
def _stim(t, baseline, pieces):
    cur = baseline
    for j in range(pieces.shape[0]):
        if t > pieces[j, 0] and t < pieces[j, 1]:
            cur += pieces[j, 2] + pieces[j, 3] * (t - pieces[j, 0])
    return cur


@njit(cache=True)
def _integrate(code, p, v0, u0, n_steps, dt, baseline, pieces, i_arr, record_every, want_trace):
    a, b, c, d, vth, k1, k2, k3 = p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]
    spikes = np.empty(1024, dtype=np.int64)
    n_sp = 0
    n_rec = (n_steps + record_every - 1) // record_every if want_trace else 0
    trace = np.empty(n_rec, dtype=np.float64)
    v = v0
    u = u0
    use_arr = i_arr.shape[0] > 0
    for n in range(n_steps):
        if use_arr:
            cur = i_arr[n]
        else:
            cur = _stim(n * dt, baseline, pieces)
        dv = _f(code, k1, k2, k3, v) - u + cur
        du = a * (b * v - u)
        v = v + dt * dv
        u = u + dt * du
        if not (np.isfinite(v) and np.isfinite(u)):
            return spikes[:n_sp], trace, n, v, u
        emitted = v
        if v >= vth:
            emitted = vth
            v = c
            u = u + d
            if n_sp == spikes.shape[0]:
                grown = np.empty(2 * n_sp, dtype=np.int64)
                grown[:n_sp] = spikes
                spikes = grown
            spikes[n_sp] = n
            n_sp += 1
        # Decimated samples keep spikes: a window containing one shows v_th.
        if want_trace and (n % record_every == 0 or emitted == vth):
            trace[n // record_every] = emitted
    return spikes[:n_sp], trace, -1, v, u


def simulate(params: NeuronParams, stimulus, dt: float = DT_HW, n_steps: int | None = None,
             *, duration_ms: float | None = None, state: NeuronState | None = None,
             trace: bool = False, record_every: int = 1) -> SpikeTrain:
    """Integrate one neuron.

    ``stimulus`` is a :class:`Stimulus`, a constant, or an array with one
    current sample per step.  ``record_every`` decimates the recorded trace
    (spike steps are always exact, and a decimated sample whose window holds
    a spike reads ``v_th``).
    """
    if n_steps is None:
        if duration_ms is None:
            raise ConfigError("give n_steps or duration_ms")
        n_steps = int(round(duration_ms / dt))
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if state is None:
        state = rest_state(params)
    if isinstance(stimulus, Stimulus):
        baseline, pieces, arr = stimulus.baseline, stimulus.packed(), np.zeros(0)
    elif np.ndim(stimulus) == 0:
        baseline, pieces, arr = float(stimulus), np.zeros((0, 4)), np.zeros(0)
    else:
        arr = np.ascontiguousarray(stimulus, dtype=np.float64)
        if len(arr) < n_steps:
            raise ConfigError(f"input has {len(arr)} samples, need {n_steps}")
        baseline, pieces = 0.0, np.zeros((0, 4))
    spikes, tr, bad, v, u = _integrate(params.model.code, params.packed(), float(state.v),
                                       float(state.u), int(n_steps), float(dt), float(baseline),
                                       pieces, arr, int(record_every), bool(trace))
    if bad >= 0:
        raise NonFinite(f"state diverged at step {bad} (v={v}, u={u}); reduce dt", step=int(bad))
    return SpikeTrain(spikes.copy(), dt, tr if trace else None, record_every, int(n_steps))


def rest_state(params: NeuronParams, v0: float | None = None) -> NeuronState:
    v = params.c if v0 is None else v0
    return NeuronState(v, params.b * v)


# --------------------------------------------------------------------------
# Regime classification


def classify_regime(train: SpikeTrain, window: tuple[int, int] | None = None,
                    gap_ratio: float = BURST_GAP_RATIO, max_cv: float = TONIC_MAX_CV) -> str:
    """Label a spike-train window as resting, tonic-spiking, bursting or other.

    Bursting means the sorted inter-spike intervals split into two groups
    whose boundary ratio is at least ``gap_ratio``; tonic means one group
    with coefficient of variation at most ``max_cv``.
    """
    steps = np.asarray(train.spike_steps)
    if window is not None:
        lo, hi = window
        if lo < 0 or hi > max(train.n_steps, lo) or hi <= lo:
            raise ConfigError(f"window {window} outside train extent {train.n_steps}")
        steps = steps[(steps >= lo) & (steps < hi)]
    if len(steps) == 0:
        return "resting"
    if len(steps) < 3:
        raise WindowTooShort(f"{len(steps)} spikes in window; need >= 3 to classify")
    return classify_intervals(np.diff(steps), gap_ratio, max_cv)


def classify_intervals(isi, gap_ratio: float = BURST_GAP_RATIO,
                       max_cv: float = TONIC_MAX_CV) -> str:
    isi = np.sort(np.asarray(isi, dtype=float))
    ratios = isi[1:] / isi[:-1]
    if len(ratios) and ratios.max() >= gap_ratio:
        cut = int(np.argmax(ratios)) + 1
        short, long_ = isi[:cut], isi[cut:]
        # A single long interval on its own is just the lead-in, not a burst
        # pattern, unless the short group holds at least two intervals.
        if len(short) >= 2 or len(long_) >= 2:
            return "bursting"
    cv = isi.std() / isi.mean()
    return "tonic-spiking" if cv <= max_cv else "other"


def staircase_regimes(params: NeuronParams, levels: Sequence[float], segment_ms: float = 250.0,
                      dt: float = DT_HW, settle_fraction: float = 0.4) -> list[str]:
    """Classify each level of a staircase input.

    The first ``settle_fraction`` of every segment is skipped so the onset
    transient of a step does not count as a burst.
    """
    duration = segment_ms * len(levels)
    train = simulate(params, Stimulus.staircase(levels, duration), dt, duration_ms=duration)
    seg = int(round(segment_ms / dt))
    labels = []
    for i in range(len(levels)):
        lo = i * seg + int(settle_fraction * seg)
        try:
            labels.append(classify_regime(train, (lo, (i + 1) * seg)))
        except WindowTooShort:
            labels.append("other")
    return labels


# --------------------------------------------------------------------------
# Canonical neuron types and optimised coefficients


@dataclass(frozen=True)
class NeuronType:
    """One canonical firing pattern: parameters, start state and test input.

    ``k_pwl2/3/4`` are the optimised PWL coefficients for this type.
    """

    key: str
    label: str
    a: float
    b: float
    c: float
    d: float
    v0: float
    stimulus: Stimulus
    duration_ms: float
    k_pwl2: KCoeffs
    k_pwl3: KCoeffs
    k_pwl4: KCoeffs
    err_p: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))
    u0: float | None = None

    def k_for(self, model: ModelKind) -> KCoeffs:
        return {ModelKind.PWL2: self.k_pwl2, ModelKind.PWL3: self.k_pwl3,
                ModelKind.PWL4: self.k_pwl4}.get(model, NO_K)

    def params(self, model: ModelKind = ModelKind.ORIGINAL, k: KCoeffs | None = None,
               v_th: float = V_TH) -> NeuronParams:
        return NeuronParams(model, self.a, self.b, self.c, self.d, v_th,
                            self.k_for(model) if k is None else k)

    def initial_state(self) -> NeuronState:
        return NeuronState(self.v0, self.b * self.v0 if self.u0 is None else self.u0)


def _step(t0, level, t1=1e12):
    return Piece(t0, t1, level)


_K3_A = KCoeffs(0.625, 5.8, 6.4)
_K3_B = KCoeffs(0.5, 7.0, 6.5)
_K4 = KCoeffs(0.375, 0.75, 11.0)


def _T(key, label, a, b, c, d, v0, stim, dur, k2, k3, e2, e3, u0=None):
    return NeuronType(key, label, a, b, c, d, v0, stim, dur, KCoeffs(*k2),
                      k3, _K4, (e2, e3, 0.25), u0)


# (a, b, c, d), start voltage and stimulus follow the published 20-pattern
# Izhikevich figure script; the two special-cased v-equations there
# (4.1 v + 108 for class 1 / integrator, u' = a b (v + 65) for
# accommodation) are replaced by the common form used by every model here.
REGISTRY: dict[str, NeuronType] = {t.key: t for t in [
    _T("tonic_spiking", "Tonic spiking", 0.02, 0.2, -65, 6, -70,
       Stimulus(0, (_step(10, 14),)), 100, (0.75, 20), _K3_A, 3.75, 0.3),
    _T("phasic_spiking", "Phasic spiking", 0.02, 0.25, -65, 6, -64,
       Stimulus(0, (_step(20, 0.5),)), 200, (0.5, 18), _K3_A, 1.75, 0.3),
    _T("tonic_bursting", "Tonic bursting", 0.02, 0.2, -50, 2, -70,
       Stimulus(0, (_step(22, 15),)), 220, (0.625, 20), _K3_A, 3.75, 0.3),
    _T("phasic_bursting", "Phasic bursting", 0.02, 0.25, -55, 0.05, -64,
       Stimulus(0, (_step(20, 0.6),)), 200, (0.5, 20), _K3_B, 3.75, 0.5),
    _T("mixed_mode", "Mixed mode", 0.02, 0.2, -55, 4, -70,
       Stimulus(0, (_step(16, 10),)), 160, (0.5, 18), _K3_B, 1.75, 0.5),
    _T("spike_frequency_adaptation", "Spike frequency adaptation", 0.01, 0.2, -65, 8, -70,
       Stimulus(0, (_step(8.5, 30),)), 85, (0.375, 18), _K3_B, 1.75, 0.5),
    _T("class_1", "Class 1", 0.02, -0.1, -55, 6, -60,
       Stimulus(0, (Piece(30, 1e12, 0.0, 0.075),)), 300, (0.375, 18), _K3_B, 1.75, 0.5),
    _T("class_2", "Class 2", 0.2, 0.26, -65, 0, -64,
       Stimulus(-0.5, (Piece(30, 1e12, 0.0, 0.015),)), 300, (0.625, 18), _K3_B, 1.75, 0.5),
    _T("spike_latency", "Spike latency", 0.02, 0.2, -65, 6, -70,
       Stimulus(0, (Piece(10, 13, 7.04),)), 100, (0.625, 18), _K3_B, 1.75, 0.5),
    _T("subthreshold_oscillations", "Subthreshold oscillations", 0.05, 0.26, -60, 0, -62,
       Stimulus(0, (Piece(20, 25, 2.0),)), 200, (0.875, 18), _K3_B, 1.75, 0.5),
    _T("resonator", "Resonator", 0.1, 0.26, -60, -1, -62,
       Stimulus(0, (Piece(40, 44, 0.65), Piece(60, 64, 0.65),
                    Piece(280, 284, 0.65), Piece(320, 324, 0.65))), 400,
       (0.875, 18), _K3_B, 1.75, 0.5),
    _T("integrator", "Integrator", 0.02, -0.1, -55, 6, -60,
       Stimulus(0, (Piece(100 / 11, 100 / 11 + 2, 9.0), Piece(100 / 11 + 5, 100 / 11 + 7, 9.0),
                    Piece(70, 72, 9.0), Piece(80, 82, 9.0))), 100,
       (0.875, 18), _K3_B, 1.75, 0.5),
    _T("rebound_spike", "Rebound spike", 0.03, 0.25, -60, 4, -64,
       Stimulus(0, (Piece(20, 25, -15.0),)), 200, (0.875, 18), _K3_B, 1.75, 0.5),
    _T("rebound_burst", "Rebound burst", 0.03, 0.25, -52, 0, -64,
       Stimulus(0, (Piece(20, 25, -15.0),)), 200, (0.375, 18), _K3_B, 1.75, 0.5),
    _T("threshold_variability", "Threshold variability", 0.03, 0.25, -60, 4, -64,
       Stimulus(0, (Piece(10, 15, 1.0), Piece(70, 75, -6.0), Piece(80, 85, 1.0))), 100,
       (0.375, 18), _K3_B, 1.75, 0.5),
    _T("bistability", "Bistability", 0.1, 0.26, -60, 0, -61,
       Stimulus(0.24, (Piece(37.5, 42.5, 1.0), Piece(216, 221, 1.0))), 300,
       (2.0, 22), KCoeffs(1.25, 12.0, 3.0), 5.75, 1.75),
    _T("depolarizing_after_potential", "Depolarizing after-potential", 1.0, 0.2, -60, -21, -70,
       Stimulus(0, (Piece(9, 11, 20.0),)), 50, (0.625, 18), _K3_B, 1.75, 0.5),
    _T("accommodation", "Accommodation", 0.02, 1.0, -55, 4, -65,
       Stimulus(0, (Piece(0, 200, 0.0, 0.04), Piece(300, 312.5, 0.0, 0.32))), 400,
       (0.625, 18), _K3_B, 1.75, 0.5, u0=-16.0),
    _T("inhibition_induced_spiking", "Inhibition-induced spiking", -0.02, -1.0, -60, 8, -63.8,
       Stimulus(80, (Piece(50, 250, -5.0),)), 350, (0.625, 18), _K3_B, 1.75, 0.5),
    _T("inhibition_induced_bursting", "Inhibition-induced bursting", -0.026, -1.0, -45, -2, -63.8,
       Stimulus(80, (Piece(50, 250, -5.0),)), 350, (0.625, 18), _K3_B, 1.75, 0.5),
]}

CANONICAL_TYPES: tuple[str, ...] = tuple(REGISTRY)

# Not one of the twenty canonical patterns: a type whose regime walks from
# rest through bursting to tonic firing as a staircase current rises.
STAIRCASE_DEMO = NeuronType("bursting_to_tonic", "Bursting to tonic", 0.02, 0.25, -55, 1, -65,
                            Stimulus(0, ()), 1000, KCoeffs(0.625, 20), _K3_A, _K4,
                            (3.75, 0.3, 0.25))
# Levels that walk the demo cell through rest, bursts and tonic firing.  The
# 2PWL nullcline sits 3.75 mV higher at its vertex, so it needs more drive.
STAIRCASE_LEVELS = {
    ModelKind.ORIGINAL: (0.0, 4.5, 12.5, 19.5),
    ModelKind.ORIGINAL_DISCRETIZED: (0.0, 4.5, 12.5, 19.5),
    ModelKind.PWL2: (0.0, 5.5, 14.0, 22.0),
    ModelKind.PWL3: (0.0, 4.5, 12.5, 19.5),
    ModelKind.PWL4: (0.0, 4.5, 12.5, 19.5),
}
EXTRA_TYPES = {STAIRCASE_DEMO.key: STAIRCASE_DEMO}

REPORTED_MEAN_ERROR_PCT = {ModelKind.PWL2: 8.865, ModelKind.PWL3: 5.295, ModelKind.PWL4: 1.235}


def neuron_type(key: str) -> NeuronType:
    try:
        return REGISTRY[key] if key in REGISTRY else EXTRA_TYPES[key]
    except KeyError:
        known = ", ".join([*REGISTRY, *EXTRA_TYPES])
        raise ConfigError(f"unknown neuron type {key!r}; known: {known}") from None


def resolve_params(type_key: str, model: ModelKind, k: KCoeffs | None = None,
                   overrides: dict | None = None) -> NeuronParams:
    p = neuron_type(type_key).params(model, k)
    return replace(p, **overrides) if overrides else p


