"""Coefficient search for the PWL models.

Analytic slope/vertex errors against the quadratic nullcline, the
synchronised relative-error cost between two membrane traces, and an
exhaustive grid sweep over the k coefficients.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import models as nc
from .errors import (ConfigError, DivisionGuard, EmptyGrid, InsufficientSamples, NoSpikeFound,
                     NonFinite, NotRepresentable)
from .fixedpoint import decompose_constant
from .models import KCoeffs, ModelKind, NeuronParams, SpikeTrain

GUARD_MV = 0.5
STABILITY_FACTOR = 2.0
CF_INF = math.inf


def err_slope(model: ModelKind, k: KCoeffs, v: float) -> float:
    """Slope mismatch between the quadratic and PWL nullclines at ``v``.

    Valid on the excitation path, i.e. the outer branch right of every kink.
    """
    return abs(0.08 * v + 5.0 - nc.nullcline_slope(model, k, v))


def err_peak(model: ModelKind, k: KCoeffs) -> float:
    """Vertical distance between the nullcline minima at v = -62.5."""
    return abs(nc.nullcline_value(model, k, nc.BREAKPOINT) - nc.ORIGINAL_VERTEX)


@dataclass(frozen=True)
class CfConfig:
    """Sample counts for the cost function, all in trace samples.

    ``sample_points`` of ``None`` means "``cycles`` reference periods".
    With ``resync`` both traces are re-aligned at their next spike before
    every cycle instead of once at the start.
    """

    settle_steps: int = 0
    cycles: int = 5
    sample_points: int | None = None
    sync_window: int | None = None
    guard_mv: float = GUARD_MV
    resync: bool = True

    def __post_init__(self):
        if self.settle_steps < 0:
            raise ConfigError("settle_steps must be >= 0")
        if self.cycles < 1:
            raise ConfigError("cycles must be >= 1")

    @classmethod
    def from_ms(cls, sample_dt: float, settle_ms: float = 200.0, cycles: int = 5,
                sync_ms: float = 500.0, sample_ms: float | None = None,
                resync: bool = True) -> "CfConfig":
        n = None if sample_ms is None else int(round(sample_ms / sample_dt))
        return cls(int(round(settle_ms / sample_dt)), cycles, n, int(round(sync_ms / sample_dt)),
                   resync=resync)


def _crossings(trace: np.ndarray, v_th: float, start: int, stop: int) -> np.ndarray:
    seg = trace[start:stop]
    return np.flatnonzero(seg >= v_th) + start


def synchronize(reference: np.ndarray, candidate: np.ndarray, v_th: float,
                window: int | None = None, settle: int = 0) -> tuple[int, int]:
    """First post-settle threshold sample in each trace."""
    idx = []
    for name, tr in (("reference", reference), ("candidate", candidate)):
        stop = len(tr) if window is None else min(len(tr), settle + window)
        hits = _crossings(tr, v_th, settle, stop)
        if len(hits) == 0:
            raise NoSpikeFound(f"{name} trace has no spike in samples [{settle}, {stop})")
        idx.append(int(hits[0]))
    return idx[0], idx[1]


def relative_sq_error(ref: np.ndarray, cand: np.ndarray, guard_mv: float = GUARD_MV) -> float:
    keep = np.abs(ref) >= guard_mv
    if not keep.any():
        raise DivisionGuard("every reference sample is inside the zero guard")
    r = ref[keep]
    return float(np.mean((r - cand[keep]) ** 2 / (r * r)))


def cost_function(reference, candidate, cfg: CfConfig = CfConfig(), v_th: float = nc.V_TH) -> float:
    """Mean squared relative error over ``N`` phase-aligned samples.

    Both traces are advanced to their first spike after the settle period
    and compared from there.  Samples where the reference lies within
    ``cfg.guard_mv`` of zero are skipped.
    """
    ref = _trace_of(reference)
    cand = _trace_of(candidate)
    i0, j0 = synchronize(ref, cand, v_th, cfg.sync_window, cfg.settle_steps)
    if cfg.resync:
        return _resync_cost(ref, cand, i0, j0, cfg, v_th)
    n = cfg.sample_points
    if n is None:
        hits = _crossings(ref, v_th, i0 + 1, len(ref))
        if len(hits) == 0:
            raise InsufficientSamples("reference has a single spike; give sample_points")
        period = np.diff(np.concatenate([[i0], hits]))
        n = int(round(cfg.cycles * float(np.median(period))))
    if i0 + n > len(ref) or j0 + n > len(cand):
        raise InsufficientSamples(f"need {n} samples after sync, have "
                                  f"{len(ref) - i0} (ref) / {len(cand) - j0} (cand)")
    return relative_sq_error(ref[i0:i0 + n], cand[j0:j0 + n], cfg.guard_mv)


def _resync_cost(ref, cand, i, j, cfg: CfConfig, v_th: float) -> float:
    per = None if cfg.sample_points is None else cfg.sample_points // cfg.cycles
    num, cnt = 0.0, 0
    for m in range(cfg.cycles):
        if m:
            # Each trace waits for its own next spike.
            ri = _crossings(ref, v_th, i, len(ref))
            ci = _crossings(cand, v_th, j, len(cand))
            if len(ri) == 0 or len(ci) == 0:
                raise InsufficientSamples(f"trace ran out of spikes after {m} of "
                                          f"{cfg.cycles} cycles")
            i, j = int(ri[0]), int(ci[0])
        n = per
        if n is None:
            nxt = _crossings(ref, v_th, i + 1, len(ref))
            if len(nxt) == 0:
                raise InsufficientSamples(f"reference has no spike after sample {i}")
            n = int(nxt[0]) - i
        if i + n > len(ref) or j + n > len(cand):
            raise InsufficientSamples(f"cycle {m} needs {n} samples past sync")
        r, c = ref[i:i + n], cand[j:j + n]
        keep = np.abs(r) >= cfg.guard_mv
        num += float(np.sum((r[keep] - c[keep]) ** 2 / (r[keep] ** 2)))
        cnt += int(keep.sum())
        i, j = i + n, j + n
    if cnt == 0:
        raise DivisionGuard("every reference sample is inside the zero guard")
    return num / cnt


def _trace_of(x) -> np.ndarray:
    if isinstance(x, SpikeTrain):
        if x.trace is None:
            raise ConfigError("spike train carries no trace")
        return x.trace
    return np.asarray(x, dtype=float)


# --------------------------------------------------------------------------
# Per-type comparison


@dataclass(frozen=True)
class TypeRun:
    """Simulation settings used to compare a model against the original."""

    dt: float = 2.0 ** -10
    record_every: int = 32
    settle_ms: float = 0.0
    cycles: int = 5


def type_cf(type_key: str, model: ModelKind, k: KCoeffs | None = None,
            run: TypeRun = TypeRun(), reference: np.ndarray | None = None) -> float:
    """CF of ``model`` against the original for one canonical neuron type.

    Both models receive the type's own stimulus protocol.  Each trace is
    aligned at its first post-settle spike; a trace without one is aligned
    where the other trace was (or at the settle sample if both are silent),
    so missing or extra spikes are charged as waveform error instead of
    making the score infinite.  When the reference fires fewer than two
    spikes after sync the comparison runs to the end of the protocol.
    Diverging candidates score ``inf``.
    """
    nt = nc.neuron_type(type_key)
    if reference is None:
        reference = _type_trace(nt, nt.params(ModelKind.ORIGINAL), run)
    try:
        cand = _type_trace(nt, nt.params(model, k), run)
    except NonFinite:
        return CF_INF
    sample_dt = run.dt * run.record_every
    settle = int(round(run.settle_ms / sample_dt))
    r_hits = _crossings(reference, nc.V_TH, settle, len(reference))
    c_hits = _crossings(cand, nc.V_TH, settle, len(cand))
    i0 = int(r_hits[0]) if len(r_hits) else None
    j0 = int(c_hits[0]) if len(c_hits) else None
    i0 = i0 if i0 is not None else (j0 if j0 is not None else settle)
    j0 = j0 if j0 is not None else i0
    hits = _crossings(reference, nc.V_TH, i0 + 1, len(reference))
    room = min(len(reference) - i0, len(cand) - j0)
    if len(hits) >= 1:
        n = int(round(run.cycles * float(np.median(np.diff(np.concatenate([[i0], hits]))))))
        n = min(n, room)
    else:
        n = room
    return relative_sq_error(reference[i0:i0 + n], cand[j0:j0 + n])


def _type_trace(nt: nc.NeuronType, params: NeuronParams, run: TypeRun) -> np.ndarray:
    tr = nc.simulate(params, nt.stimulus, run.dt, duration_ms=nt.duration_ms,
                     state=nt.initial_state(), trace=True, record_every=run.record_every)
    return tr.trace


def mean_type_cf(model: ModelKind, run: TypeRun = TypeRun(), types=None) -> tuple[float, dict]:
    types = list(nc.CANONICAL_TYPES if types is None else types)
    per = {}
    for key in types:
        nt = nc.neuron_type(key)
        ref = _type_trace(nt, nt.params(ModelKind.ORIGINAL), run)
        per[key] = type_cf(key, model, None, run, ref)
    return float(np.mean(list(per.values()))), per


# --------------------------------------------------------------------------
# Grid search


@dataclass(frozen=True)
class AxisRange:
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"grid step must be positive: {self}")
        if not self.lo < self.hi:
            raise ConfigError(f"grid needs lo < hi: {self}")

    @property
    def count(self) -> int:
        """Closed interval: span/step increments plus the starting point."""
        return int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1

    def values(self) -> np.ndarray:
        # Rounded so 0.1 + 13 * 0.05 is exactly 0.75.
        return np.round(self.lo + self.step * np.arange(self.count), 10)


@dataclass(frozen=True)
class SearchGrid:
    k1_range: AxisRange
    k2_range: AxisRange
    k3_range: AxisRange | None = None

    def axes(self) -> list[np.ndarray]:
        out = [self.k1_range.values(), self.k2_range.values()]
        if self.k3_range is not None:
            out.append(self.k3_range.values())
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes())

    @classmethod
    def singleton(cls, k: KCoeffs, model: ModelKind) -> "SearchGrid":
        def one(x):
            return AxisRange(x, x + 1.0, 2.0)
        return cls(one(k.k1), one(k.k2), None if model is ModelKind.PWL2 else one(k.k3))

    @classmethod
    def default(cls, model: ModelKind, full: bool = False) -> "SearchGrid":
        if model is ModelKind.PWL2:
            return cls(AxisRange(0.1, 8.0, 0.01 if full else 0.05), AxisRange(10.0, 25.0, 1.0))
        step = 0.0625 if full else 0.125
        k3 = AxisRange(1.0, 12.0, 0.25 if full else 0.5)
        if model is ModelKind.PWL3:
            return cls(AxisRange(0.125, 2.0, step), AxisRange(1.0, 12.0, 4 * step), k3)
        return cls(AxisRange(0.125, 2.0, step), AxisRange(0.125, 2.0, step), k3)


@dataclass
class ErrorSurface:
    model: ModelKind
    axes: list[np.ndarray]
    cf_values: np.ndarray
    argmin: KCoeffs
    min_cf: float
    stable_mask: np.ndarray
    target_mask: np.ndarray
    stability_factor: float = STABILITY_FACTOR
    meta: dict = field(default_factory=dict)

    def index_of(self, k: KCoeffs) -> tuple[int, ...]:
        vals = (k.k1, k.k2, k.k3)[: len(self.axes)]
        idx = []
        for ax, x in zip(self.axes, vals):
            hit = np.flatnonzero(np.isclose(ax, x, atol=1e-9))
            if len(hit) == 0:
                raise KeyError(f"{x} is not a grid value")
            idx.append(int(hit[0]))
        return tuple(idx)

    def cf_at(self, k: KCoeffs) -> float:
        return float(self.cf_values[self.index_of(k)])

    def in_stable_area(self, k: KCoeffs) -> bool:
        return bool(self.stable_mask[self.index_of(k)])

    def _points(self, mask) -> list[dict]:
        names = ("k1", "k2", "k3")
        return [{names[d]: float(self.axes[d][i]) for d, i in enumerate(ix)}
                for ix in zip(*np.nonzero(mask))]

    def summary(self) -> dict:
        box = {}
        if self.stable_mask.any():
            nz = np.nonzero(self.stable_mask)
            for d, name in enumerate(("k1", "k2", "k3")[: len(self.axes)]):
                box[name] = [float(self.axes[d][nz[d].min()]), float(self.axes[d][nz[d].max()])]
        return {"model": self.model.value,
                "argmin": {n: v for n, v in zip(("k1", "k2", "k3"), (self.argmin.k1, self.argmin.k2,
                                                                    self.argmin.k3))
                           if n != "k3" or len(self.axes) == 3},
                "min_cf": self.min_cf,
                "stability_factor": self.stability_factor,
                "stable_area_bbox": box,
                "stable_area_size": int(self.stable_mask.sum()),
                "target_area": self._points(self.target_mask),
                **self.meta}

    def write_csv(self, path) -> None:
        names = ["k1", "k2", "k3"][: len(self.axes)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names + ["cf"])
            for ix in np.ndindex(*self.cf_values.shape):
                w.writerow([repr(float(self.axes[d][i])) for d, i in enumerate(ix)]
                           + [repr(float(self.cf_values[ix]))])

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def read_surface_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


def is_dyadic(x: float, max_terms: int = 3) -> bool:
    try:
        decompose_constant(x, max_terms)
    except NotRepresentable:
        return False
    return True


def stable_area(cf: np.ndarray, factor: float = STABILITY_FACTOR) -> np.ndarray:
    """Connected low-CF region around the global minimum."""
    finite = np.isfinite(cf)
    if not finite.any():
        return np.zeros(cf.shape, bool)
    best = np.nanmin(np.where(finite, cf, np.nan))
    low = finite & (cf <= factor * best)
    labels, _ = ndimage.label(low)
    seed = labels[np.unravel_index(_argmin(cf), cf.shape)]
    return labels == seed


def _argmin(cf: np.ndarray) -> int:
    """Flat index of the minimum; ties go to the lexicographically smallest k."""
    flat = np.where(np.isfinite(cf), cf, np.inf).ravel()
    return int(np.argmin(flat))  # C order == lexicographic (k1, k2, k3)


@dataclass(frozen=True)
class SearchSetup:
    """Stimulus and sampling for one neuron type's coefficient sweep."""

    type_key: str
    stimulus: nc.Stimulus
    duration_ms: float
    dt: float = 2.0 ** -8
    record_every: int = 8
    cf: CfConfig | None = None

    @classmethod
    def for_type(cls, type_key: str, duration_ms: float = 1000.0, dt: float = 2.0 ** -8,
                 record_every: int = 8, settle_ms: float = 200.0, cycles: int = 5,
                 sync_ms: float = 500.0) -> "SearchSetup":
        nt = nc.neuron_type(type_key)
        sample_dt = dt * record_every
        return cls(type_key, nt.stimulus, duration_ms, dt, record_every,
                   CfConfig.from_ms(sample_dt, settle_ms, cycles, sync_ms))


def grid_search(model: ModelKind, type_key: str, grid: SearchGrid,
                setup: SearchSetup | None = None, max_terms: int = 3,
                stability_factor: float = STABILITY_FACTOR) -> ErrorSurface:
    """Evaluate the CF at every grid point and locate the low-error zone.

    Each point starts from the same initial state.  A point whose
    simulation diverges, never spikes or runs out of samples gets CF = inf
    and the sweep continues.
    """
    if not model.is_pwl:
        raise ConfigError("grid search applies to PWL models only")
    axes = grid.axes()
    if model is ModelKind.PWL2 and len(axes) != 2 or model is not ModelKind.PWL2 and len(axes) != 3:
        raise ConfigError(f"{model.value} needs a {'2' if model is ModelKind.PWL2 else '3'}-D grid")
    if any(len(a) == 0 for a in axes):
        raise EmptyGrid("grid has no points")
    setup = setup or SearchSetup.for_type(type_key)
    nt = nc.neuron_type(type_key)
    ref = nc.simulate(nt.params(ModelKind.ORIGINAL), setup.stimulus, setup.dt,
                      duration_ms=setup.duration_ms, state=nt.initial_state(), trace=True,
                      record_every=setup.record_every).trace
    cf = np.full(tuple(len(a) for a in axes), np.inf)
    for ix in np.ndindex(*cf.shape):
        vals = [float(axes[d][i]) for d, i in enumerate(ix)]
        k = KCoeffs(*vals) if len(vals) == 3 else KCoeffs(vals[0], vals[1])
        cf[ix] = _point_cf(nt, model, k, setup, ref)
    if not np.isfinite(cf).any():
        best_ix = (0,) * cf.ndim
    else:
        best_ix = np.unravel_index(_argmin(cf), cf.shape)
    best = [float(axes[d][i]) for d, i in enumerate(best_ix)]
    argmin = KCoeffs(*best) if len(best) == 3 else KCoeffs(best[0], best[1])
    stable = stable_area(cf, stability_factor)
    k1_ok = np.array([is_dyadic(x, max_terms) for x in axes[0]])
    shape = [-1] + [1] * (cf.ndim - 1)
    target = stable & k1_ok.reshape(shape)
    return ErrorSurface(model, axes, cf, argmin, float(cf[best_ix]), stable, target,
                        stability_factor, {"type": type_key, "dt": setup.dt,
                                           "record_every": setup.record_every})


def _point_cf(nt, model, k, setup: SearchSetup, ref: np.ndarray) -> float:
    try:
        p = nt.params(model, k)
        tr = nc.simulate(p, setup.stimulus, setup.dt, duration_ms=setup.duration_ms,
                         state=nt.initial_state(), trace=True, record_every=setup.record_every)
        return cost_function(ref, tr.trace, setup.cf)
    except (NonFinite, NoSpikeFound, InsufficientSamples, DivisionGuard, ConfigError):
        return CF_INF

