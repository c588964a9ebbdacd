"""Randomly coupled excitatory/inhibitory networks with noisy thalamic drive.

Heterogeneity, weights and noise follow the classic 1000-neuron cortical
recipe: excitatory cells span regular spiking to chattering through
``c = -65 + 15 r^2, d = 8 - 6 r^2``, inhibitory cells span fast spiking to
low-threshold spiking through ``a = 0.02 + 0.08 r, b = 0.25 - 0.05 r``.
Inputs (noise plus the synaptic kick from last tick's spikes) are held for a
1 ms tick that is integrated in ``tick_ms / dt`` Euler substeps.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from . import models as nc
from .errors import ConfigError, EmptyReference, NonFinite, TooShort
from .models import KCoeffs, ModelKind, SpikeTrain, _f

RHYTHM_BIN_MS = 5.0


@dataclass(frozen=True)
class NetworkConfig:
    n_total: int = 200
    exc_ratio: float = 0.8
    seed: int = 0
    sim_ms: float = 1000.0
    dt: float = 0.5
    tick_ms: float = 1.0
    model: ModelKind = ModelKind.ORIGINAL
    k: KCoeffs | None = None
    noise_exc: float = 5.0
    noise_inh: float = 2.0
    exc_weight: float = 0.5
    inh_scale: float = 1.0
    v_th: float = nc.V_TH

    def __post_init__(self):
        if self.n_total < 2:
            raise ConfigError("n_total must be >= 2")
        if not 0.0 < self.exc_ratio < 1.0:
            raise ConfigError("exc_ratio must lie in (0, 1)")
        if not (self.dt > 0 and self.tick_ms > 0 and self.sim_ms > 0):
            raise ConfigError("dt, tick_ms and sim_ms must be positive")
        sub = self.tick_ms / self.dt
        if abs(sub - round(sub)) > 1e-9:
            raise ConfigError("tick_ms must be a whole number of dt steps")
        if self.inh_scale < 0 or self.exc_weight < 0:
            raise ConfigError("weight scales must be >= 0")

    @property
    def n_exc(self) -> int:
        return int(round(self.n_total * self.exc_ratio))

    @property
    def n_inh(self) -> int:
        return self.n_total - self.n_exc

    @property
    def substeps(self) -> int:
        return int(round(self.tick_ms / self.dt))

    @property
    def n_ticks(self) -> int:
        return int(round(self.sim_ms / self.tick_ms))

    def resolved_k(self) -> KCoeffs:
        if self.k is not None:
            return self.k
        # Regular spiking dominates the population, so the tonic-spiking
        # coefficients stand in for every cell.
        return nc.neuron_type("tonic_spiking").k_for(self.model)

    def with_model(self, model: ModelKind, k: KCoeffs | None = None) -> "NetworkConfig":
        return NetworkConfig(**{**self.__dict__, "model": model, "k": k})

    def to_json(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        d["k"] = list(self.resolved_k().as_tuple(self.model))
        return d


@dataclass
class Network:
    weights: np.ndarray          # (post, pre), diagonal zero
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    is_exc: np.ndarray

    @property
    def n(self) -> int:
        return len(self.a)


@dataclass
class RasterData:
    neuron: np.ndarray           # neuron index per spike, time ordered
    step: np.ndarray             # substep index per spike
    dt: float
    n_neurons: int
    is_exc: np.ndarray
    sim_ms: float

    @property
    def times(self) -> np.ndarray:
        return self.step * self.dt

    @property
    def n_spikes(self) -> int:
        return len(self.step)

    def train(self, i: int) -> SpikeTrain:
        return SpikeTrain(self.step[self.neuron == i].copy(), self.dt,
                          n_steps=int(round(self.sim_ms / self.dt)))

    def per_neuron_times(self) -> list[np.ndarray]:
        order = np.argsort(self.neuron, kind="stable")
        t = self.times[order]
        cuts = np.searchsorted(self.neuron[order], np.arange(self.n_neurons + 1))
        return [t[cuts[i]:cuts[i + 1]] for i in range(self.n_neurons)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["neuron_id", "class", "spike_time_ms"])
            for i, t in zip(self.neuron, self.times):
                w.writerow([int(i), "exc" if self.is_exc[i] else "inh", repr(float(t))])


def read_raster_csv(path, cfg: NetworkConfig) -> RasterData:
    """Inverse of :meth:`RasterData.write_csv` for a run made with ``cfg``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    nid = np.array([int(r[0]) for r in rows], dtype=np.int64)
    step = np.array([int(round(float(r[2]) / cfg.dt)) for r in rows], dtype=np.int64)
    is_exc = np.arange(cfg.n_total) < cfg.n_exc
    return RasterData(nid, step, cfg.dt, cfg.n_total, is_exc, cfg.sim_ms)


def _streams(seed: int, n: int):
    root = np.random.SeedSequence(seed)
    structure, noise = root.spawn(2)
    return (np.random.Generator(np.random.Philox(structure)),
            [np.random.Generator(np.random.Philox(s)) for s in noise.spawn(n)])


def build_network(cfg: NetworkConfig) -> Network:
    rng, _ = _streams(cfg.seed, 0)
    ne, ni, n = cfg.n_exc, cfg.n_inh, cfg.n_total
    re = rng.random(ne)
    ri = rng.random(ni)
    a = np.concatenate([np.full(ne, 0.02), 0.02 + 0.08 * ri])
    b = np.concatenate([np.full(ne, 0.2), 0.25 - 0.05 * ri])
    c = np.concatenate([-65 + 15 * re ** 2, np.full(ni, -65.0)])
    d = np.concatenate([8 - 6 * re ** 2, np.full(ni, 2.0)])
    w = np.hstack([cfg.exc_weight * rng.random((n, ne)), -cfg.inh_scale * rng.random((n, ni))])
    np.fill_diagonal(w, 0.0)
    is_exc = np.arange(n) < ne
    return Network(w, a, b, c, d, is_exc)


def thalamic_noise(cfg: NetworkConfig) -> np.ndarray:
    """(ticks, n) noise; each neuron draws from its own Philox stream."""
    _, gens = _streams(cfg.seed, cfg.n_total)
    amp = np.where(np.arange(cfg.n_total) < cfg.n_exc, cfg.noise_exc, cfg.noise_inh)
    cols = [g.standard_normal(cfg.n_ticks) for g in gens]
    return np.ascontiguousarray(np.stack(cols, axis=1) * amp)


@njit(cache=True)
def _run(code, k1, k2, k3, a, b, c, d, vth, w_pre, noise, substeps, dt):
    n_ticks, n = noise.shape
    v = c.copy()
    for i in range(n):
        v[i] = -65.0
    u = b * v
    fired = np.zeros(n, dtype=np.bool_)
    cur = np.empty(n)
    cap = 1024
    out_n = np.empty(cap, dtype=np.int64)
    out_s = np.empty(cap, dtype=np.int64)
    m = 0
    for t in range(n_ticks):
        for i in range(n):
            cur[i] = noise[t, i]
        for j in range(n):
            if fired[j]:
                for i in range(n):
                    cur[i] += w_pre[j, i]
        fired[:] = False
        for s in range(substeps):
            step = t * substeps + s
            for i in range(n):
                vi = v[i]
                ui = u[i]
                dv = _f(code, k1, k2, k3, vi) - ui + cur[i]
                du = a[i] * (b[i] * vi - ui)
                vi = vi + dt * dv
                ui = ui + dt * du
                if not (np.isfinite(vi) and np.isfinite(ui)):
                    return out_n[:m], out_s[:m], step, i
                if vi >= vth:
                    vi = c[i]
                    ui = ui + d[i]
                    fired[i] = True
                    if m == cap:
                        cap *= 2
                        g1 = np.empty(cap, dtype=np.int64)
                        g2 = np.empty(cap, dtype=np.int64)
                        g1[:m] = out_n[:m]
                        g2[:m] = out_s[:m]
                        out_n, out_s = g1, g2
                    out_n[m] = i
                    out_s[m] = step
                    m += 1
                v[i] = vi
                u[i] = ui
    return out_n[:m], out_s[:m], -1, -1


def run_network(net: Network, cfg: NetworkConfig, noise: np.ndarray | None = None) -> RasterData:
    """Simulate ``cfg.sim_ms``; every cell starts at v = -65, u = b v."""
    if noise is None:
        noise = thalamic_noise(cfg)
    if noise.shape != (cfg.n_ticks, net.n):
        raise ConfigError(f"noise shape {noise.shape} != {(cfg.n_ticks, net.n)}")
    k = cfg.resolved_k()
    w_pre = np.ascontiguousarray(net.weights.T)
    nid, step, bad_step, bad_n = _run(cfg.model.code, k.k1, k.k2, k.k3, net.a, net.b, net.c,
                                      net.d, cfg.v_th, w_pre, noise, cfg.substeps, cfg.dt)
    if bad_step >= 0:
        raise NonFinite(f"neuron {bad_n} diverged at step {bad_step}", step=int(bad_step),
                        neuron=int(bad_n))
    return RasterData(nid.copy(), step.copy(), cfg.dt, net.n, net.is_exc.copy(), cfg.sim_ms)


def simulate_network(cfg: NetworkConfig) -> RasterData:
    return run_network(build_network(cfg), cfg)


@dataclass
class MreResult:
    mre_pct: float
    matched: int
    surplus: int
    per_neuron: np.ndarray = field(repr=False)


def mre(reference: RasterData, candidate: RasterData) -> MreResult:
    """Mean relative spike-timing error in percent.

    Spikes are paired i-th to i-th within each neuron and scored
    ``|t_cand - t_ref| / t_ref``.  Spikes without a partner are charged that
    neuron's mean paired error, or 100% when the neuron has no pairs at all.
    Reference spikes at t = 0 have no relative error and are skipped.
    """
    if reference.n_neurons != candidate.n_neurons:
        raise ConfigError("rasters have different neuron counts")
    if reference.n_spikes == 0:
        raise EmptyReference("reference raster has no spikes")
    rt, ct = reference.per_neuron_times(), candidate.per_neuron_times()
    total, count, matched, surplus = 0.0, 0, 0, 0
    per = np.full(reference.n_neurons, np.nan)
    for i, (r, c) in enumerate(zip(rt, ct)):
        m = min(len(r), len(c))
        r_m, c_m = r[:m], c[:m]
        ok = r_m > 0
        errs = np.abs(c_m[ok] - r_m[ok]) / r_m[ok]
        extra = abs(len(r) - len(c))
        mean_i = float(errs.mean()) if len(errs) else 1.0
        if len(errs) or extra:
            per[i] = mean_i * 100
        total += float(errs.sum()) + extra * mean_i
        count += len(errs) + extra
        matched += len(errs)
        surplus += extra
    return MreResult(100.0 * total / count, matched, surplus, per)


def population_rate(raster: RasterData, bin_ms: float = RHYTHM_BIN_MS) -> tuple[np.ndarray, np.ndarray]:
    """Bin centres (ms) and population rate (spikes / neuron / s)."""
    n_bins = int(np.floor(raster.sim_ms / bin_ms + 1e-9))
    edges = np.arange(n_bins + 1) * bin_ms
    counts, _ = np.histogram(raster.times, bins=edges)
    rate = counts / (raster.n_neurons * bin_ms * 1e-3)
    return edges[:-1] + bin_ms / 2, rate


def population_rhythm(raster: RasterData, bin_ms: float = RHYTHM_BIN_MS) -> float:
    """Dominant non-DC frequency (Hz) of the binned population rate."""
    if raster.sim_ms < 1000.0:
        raise TooShort(f"need at least 1000 ms, got {raster.sim_ms}")
    if raster.n_spikes == 0:
        raise TooShort("raster is empty; no rhythm to estimate")
    _, rate = population_rate(raster, bin_ms)
    spec = np.abs(np.fft.rfft(rate - rate.mean()))
    freqs = np.fft.rfftfreq(len(rate), d=bin_ms * 1e-3)
    j = 1 + int(np.argmax(spec[1:]))
    return float(freqs[j])


def write_rate_csv(raster: RasterData, path, bin_ms: float = RHYTHM_BIN_MS) -> None:
    t, r = population_rate(raster, bin_ms)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "rate"])
        for a, b in zip(t, r):
            w.writerow([repr(float(a)), repr(float(b))])


def write_config_json(cfg: NetworkConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n")


def compare_models(cfg: NetworkConfig, models=(ModelKind.PWL2, ModelKind.PWL3, ModelKind.PWL4)
                   ) -> dict[ModelKind, MreResult]:
    """MRE of each PWL model against the original on one shared network and noise."""
    base = cfg.with_model(ModelKind.ORIGINAL)
    net = build_network(base)
    noise = thalamic_noise(base)
    ref = run_network(net, base, noise)
    return {m: mre(ref, run_network(net, cfg.with_model(m), noise)) for m in models}
