"""Rate-coded two-layer learner trained toward teacher firing periods.

Each output neuron j integrates ``I_j = x . W[:, j] + I_0`` with bipolar
pixels ``x``.  Whenever j fires, the steps elapsed since its previous spike
(its counter) are compared with the target period ``t_j`` and the column is
moved by ``alpha * x * (counter - t_j)``: firing too slowly raises the
current on the pattern's own pixels.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy.linalg import hadamard

from . import models as nc
from .errors import ConfigError, DimensionMismatch, NoFiring
from .fixedpoint import Q8_12
from .models import ModelKind, NeuronParams, _f

BACKENDS = ("float", "fixed")


@dataclass(frozen=True)
class Pattern:
    pixels: np.ndarray       # (rows, cols) bool, True = black
    label: int

    def __post_init__(self):
        if np.asarray(self.pixels).ndim != 2:
            raise ConfigError("pattern pixels must be a 2-D bitmap")

    @property
    def bipolar(self) -> np.ndarray:
        return np.where(np.asarray(self.pixels, bool).ravel(), 1.0, -1.0)

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(np.asarray(self.pixels).shape)


@dataclass(frozen=True)
class LearnerConfig:
    n_inputs: int
    n_outputs: int
    alpha_shift: int = 17
    i_bias: float | None = None
    f_high: float = 80.0
    f_low: float = 10.0
    window_ms: float = 250.0
    epochs: int = 10
    dt: float = 2.0 ** -4
    model: ModelKind = ModelKind.ORIGINAL
    type_key: str = "tonic_spiking"
    backend: str = "float"
    seed: int = 0

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_outputs < 1:
            raise ConfigError("n_inputs and n_outputs must be >= 1")
        if self.alpha_shift < 0 or int(self.alpha_shift) != self.alpha_shift:
            raise ConfigError("alpha is 2**-alpha_shift with an integer shift >= 0")
        if not self.f_high > self.f_low > 0:
            raise ConfigError("need f_high > f_low > 0")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        if self.window_ms < 2000.0 / self.f_low:
            raise ConfigError("presentation window must span two low-target periods")

    @property
    def alpha(self) -> float:
        return 2.0 ** -self.alpha_shift

    @property
    def t_high(self) -> int:
        return period_steps(self.f_high, self.dt)

    @property
    def t_low(self) -> int:
        return period_steps(self.f_low, self.dt)

    @property
    def window_steps(self) -> int:
        return int(round(self.window_ms / self.dt))

    def neuron(self) -> NeuronParams:
        return nc.neuron_type(self.type_key).params(self.model)


def period_steps(f_hz: float, dt_ms: float) -> int:
    return int(round(1000.0 / (f_hz * dt_ms)))


@dataclass
class LearnerState:
    weights: np.ndarray          # (n_inputs, n_outputs)
    i_bias: float
    counters: np.ndarray         # steps since each output's last spike
    presentations: int = 0
    log: list = field(default_factory=list)   # (epoch, class, frequency_hz)


def init_state(cfg: LearnerConfig) -> LearnerState:
    i0 = cfg.i_bias if cfg.i_bias is not None else find_bias(cfg.neuron(), cfg.f_low, cfg.dt)
    return LearnerState(np.zeros((cfg.n_inputs, cfg.n_outputs)), float(i0),
                        np.zeros(cfg.n_outputs, dtype=np.int64))


def input_current(pattern, w_col: np.ndarray, i_bias: float) -> float:
    x = pattern.bipolar if isinstance(pattern, Pattern) else np.asarray(pattern, float)
    if x.shape != np.shape(w_col):
        raise DimensionMismatch(f"{x.shape[0]} inputs vs {np.shape(w_col)} weights")
    return float(x @ w_col + i_bias)


def weight_update(i_i, counter_j: int, t_j: int, alpha: float):
    return alpha * (np.asarray(i_i, float) * (counter_j - t_j))


def steady_frequency(params: NeuronParams, current: float, dt: float,
                     duration_ms: float = 1000.0) -> float:
    """Firing rate from the last interspike interval of a constant-drive run."""
    tr = nc.simulate(params, float(current), dt, duration_ms=duration_ms)
    if tr.count < 2:
        return 0.0
    return 1000.0 / (float(np.diff(tr.spike_steps)[-1]) * dt)


def find_bias(params: NeuronParams, f_low: float, dt: float, hi: float = 60.0,
              iters: int = 40) -> float:
    """Smallest constant current whose steady rate reaches ``f_low``."""
    lo = 0.0
    if steady_frequency(params, hi, dt) < f_low:
        raise NoFiring(f"even I = {hi} does not reach {f_low} Hz")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if steady_frequency(params, mid, dt) >= f_low:
            hi = mid
        else:
            lo = mid
    return hi


@njit(cache=True)
def _present(code, p, x, w, i0, targets, alpha, n_steps, dt, learn, quant, w_lo, w_hi, res):
    a, b, c, d, vth, k1, k2, k3 = p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]
    n_out = w.shape[1]
    v = np.full(n_out, c)
    u = np.full(n_out, b * c)
    cur = np.empty(n_out)
    for j in range(n_out):
        cur[j] = i0 + np.dot(x, np.ascontiguousarray(w[:, j]))
    counter = np.zeros(n_out, dtype=np.int64)
    count = np.zeros(n_out, dtype=np.int64)
    first = np.full(n_out, -1, dtype=np.int64)
    last = np.full(n_out, -1, dtype=np.int64)
    for n in range(n_steps):
        for j in range(n_out):
            vj = v[j]
            uj = u[j]
            dv = _f(code, k1, k2, k3, vj) - uj + cur[j]
            du = a * (b * vj - uj)
            vj = vj + dt * dv
            uj = uj + dt * du
            counter[j] += 1
            if vj >= vth:
                vj = c
                uj = uj + d
                if learn and count[j] > 0:
                    g = alpha * (counter[j] - targets[j])
                    for i in range(x.shape[0]):
                        nw = w[i, j] + g * x[i]
                        if quant:
                            nw = math.floor(nw / res) * res
                            nw = min(max(nw, w_lo), w_hi)
                        w[i, j] = nw
                    cur[j] = i0 + np.dot(x, np.ascontiguousarray(w[:, j]))
                if count[j] == 0:
                    first[j] = n
                last[j] = n
                count[j] += 1
                counter[j] = 0
            v[j] = vj
            u[j] = uj
    return count, first, last, counter


@dataclass
class Presentation:
    counts: np.ndarray
    frequency_hz: np.ndarray


def present(state: LearnerState, cfg: LearnerConfig, pattern: Pattern, learn: bool,
            require_firing: bool = True) -> Presentation:
    """Show one pattern for a window; outputs start from rest each time.

    Frequency is the mean rate between first and last spike (zero with
    fewer than two spikes).  The first spike of a window only starts the
    counter: its latency is not a period and drives no update.
    """
    x = pattern.bipolar
    if x.shape[0] != cfg.n_inputs:
        raise DimensionMismatch(f"pattern has {x.shape[0]} pixels, learner expects {cfg.n_inputs}")
    targets = np.full(cfg.n_outputs, cfg.t_low, dtype=np.int64)
    if 0 <= pattern.label < cfg.n_outputs:
        targets[pattern.label] = cfg.t_high
    p = cfg.neuron()
    count, first, last, counter = _present(
        p.model.code, p.packed(), x, state.weights, state.i_bias, targets, cfg.alpha,
        cfg.window_steps, cfg.dt, learn, cfg.backend == "fixed",
        Q8_12.min_raw * Q8_12.resolution, Q8_12.max_raw * Q8_12.resolution, Q8_12.resolution)
    state.counters = counter.copy()
    if learn:
        state.presentations += 1
    if require_firing and (count == 0).any():
        j = int(np.flatnonzero(count == 0)[0])
        raise NoFiring(f"output {j} stayed silent for a whole presentation; raise I_0")
    span = (last - first) * cfg.dt
    freq = np.where(count >= 2, 1000.0 * (count - 1) / np.where(span > 0, span, 1.0), 0.0)
    return Presentation(count, freq)


def train(patterns: list[Pattern], cfg: LearnerConfig, state: LearnerState | None = None
          ) -> LearnerState:
    """Round-robin over classes in a per-seed shuffled order, ``cfg.epochs`` times.

    A silent output makes no weight change, so single silent windows are
    tolerated; an output that stays silent for a whole epoch can never
    learn and raises :class:`NoFiring`.
    """
    if not patterns:
        raise ConfigError("no training patterns")
    state = state or init_state(cfg)
    rng = np.random.default_rng(cfg.seed)
    by_class: dict[int, list[Pattern]] = {}
    for pt in patterns:
        by_class.setdefault(pt.label, []).append(pt)
    labels = sorted(by_class)
    for epoch in range(cfg.epochs):
        queues = {c: [by_class[c][i] for i in rng.permutation(len(by_class[c]))] for c in labels}
        freqs = {c: [] for c in labels}
        fired = np.zeros(cfg.n_outputs, dtype=bool)
        for r in range(max(len(q) for q in queues.values())):
            for c in labels:
                if r < len(queues[c]):
                    pres = present(state, cfg, queues[c][r], learn=True, require_firing=False)
                    fired |= pres.counts > 0
                    if 0 <= c < cfg.n_outputs:
                        freqs[c].append(pres.frequency_hz[c])
        if not fired.all():
            j = int(np.flatnonzero(~fired)[0])
            raise NoFiring(f"output {j} never fired during epoch {epoch}; raise I_0")
        for c in labels:
            if freqs[c]:
                state.log.append((epoch, c, float(np.mean(freqs[c]))))
    return state


@dataclass
class Evaluation:
    accuracy: float
    predictions: np.ndarray
    labels: np.ndarray
    frequencies: np.ndarray      # (patterns, outputs)

    def class_table(self) -> dict[int, list[float]]:
        """Mean output frequencies per true class."""
        return {int(c): self.frequencies[self.labels == c].mean(axis=0).tolist()
                for c in np.unique(self.labels)}


def evaluate(state: LearnerState, cfg: LearnerConfig, patterns: list[Pattern]) -> Evaluation:
    """Predict the output with the highest frequency (spike count breaks ties)."""
    freqs, preds = [], []
    for pt in patterns:
        pres = present(state, cfg, pt, learn=False, require_firing=False)
        score = pres.frequency_hz + 1e-6 * pres.counts
        freqs.append(pres.frequency_hz)
        preds.append(int(np.argmax(score)))
    labels = np.array([pt.label for pt in patterns])
    preds = np.array(preds)
    return Evaluation(float(np.mean(preds == labels)), preds, labels, np.array(freqs))


def steady_period(params: NeuronParams, current: float, dt: float,
                  duration_ms: float = 1000.0) -> int:
    """Counter value at steady firing: steps between the last two spikes."""
    tr = nc.simulate(params, float(current), dt, duration_ms=duration_ms)
    if tr.count < 2:
        raise NoFiring(f"no steady firing at I = {current}")
    return int(np.diff(tr.spike_steps)[-1])


@dataclass
class GradientProbe:
    pattern: int
    output: int
    pixel: int
    rule: float              # weight change from the learning rule
    finite_difference: float  # -dE/dW from central differences

    @property
    def agrees(self) -> bool:
        return np.sign(self.rule) == np.sign(self.finite_difference) != 0


def gradient_probes(weights: np.ndarray, cfg: LearnerConfig, i_bias: float,
                    patterns: list[Pattern], n_probes: int = 50, delta: float = 0.25,
                    seed: int = 0) -> list[GradientProbe]:
    """Compare the rule's sign with -dE/dW measured through simulation.

    E = (counter - t)^2 uses the steady-state counter for the current the
    weights produce; each probe perturbs a single weight by +-delta.
    Draws where any of the three runs is silent have no defined E and are
    redrawn (at most ``10 * n_probes`` draws in total).
    """
    rng = np.random.default_rng(seed)
    params = cfg.neuron()
    out = []
    for _ in range(10 * n_probes):
        if len(out) == n_probes:
            break
        pi = int(rng.integers(len(patterns)))
        j = int(rng.integers(cfg.n_outputs))
        i = int(rng.integers(cfg.n_inputs))
        pt = patterns[pi]
        x = pt.bipolar
        t = cfg.t_high if pt.label == j else cfg.t_low

        def energy(w_ij):
            col = weights[:, j].copy()
            col[i] = w_ij
            return (steady_period(params, input_current(x, col, i_bias), cfg.dt) - t) ** 2

        w0 = weights[i, j]
        try:
            counter = steady_period(params, input_current(x, weights[:, j], i_bias), cfg.dt)
            fd = -(energy(w0 + delta) - energy(w0 - delta)) / (2 * delta)
        except NoFiring:
            continue
        out.append(GradientProbe(pi, j, i, float(weight_update(x[i], counter, t, cfg.alpha)),
                                 float(fd)))
    return out


# --------------------------------------------------------------------------
# Synthetic data


def prototypes(n_classes: int, shape: tuple[int, int] = (20, 16)) -> np.ndarray:
    """Mutually orthogonal bipolar bitmaps (rows of a Sylvester Hadamard matrix).

    Rows 1..n of H_{2^k} restricted to the first ``rows * cols`` columns stay
    orthogonal as long as the prefix length splits into whole blocks; for
    20 x 16 = 256 + 64 that holds for every row index below 64.
    """
    m = shape[0] * shape[1]
    order = 1 << max(1, (m - 1).bit_length())
    if n_classes >= 64 or n_classes >= order:
        raise ConfigError("too many classes for exactly orthogonal prototypes")
    h = hadamard(order)[1:n_classes + 1, :m]
    return h.reshape(n_classes, *shape) > 0


def synthetic_dataset(n_classes: int, writers: int, flip_prob: float = 0.1,
                      shape: tuple[int, int] = (20, 16), seed: int = 0) -> list[Pattern]:
    """``writers`` noisy copies per class, each pixel flipped with ``flip_prob``."""
    rng = np.random.default_rng(seed)
    protos = prototypes(n_classes, shape)
    out = []
    for w in range(writers):
        for c in range(n_classes):
            flips = rng.random(shape) < flip_prob
            out.append(Pattern(protos[c] ^ flips, c))
    return out


# --------------------------------------------------------------------------
# Files


def write_pbm(path, pixels: np.ndarray) -> None:
    """Plain (P1) PBM; 1 = black."""
    px = np.asarray(pixels, bool)
    rows = [" ".join("1" if v else "0" for v in r) for r in px]
    Path(path).write_text(f"P1\n{px.shape[1]} {px.shape[0]}\n" + "\n".join(rows) + "\n")


def read_pbm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        raise ConfigError(f"{path}: not a PBM file")
    # Header tokens, skipping comments.
    tokens, pos = [], 2
    while len(tokens) < 2:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(int(data[pos:end]))
        pos = end
    w, h = tokens
    if magic == b"P1":
        bits = [c for c in data[pos:].decode("ascii").split("\n") if not c.lstrip().startswith("#")]
        digits = [ch for ch in "".join(bits) if ch in "01"]
        if len(digits) < w * h:
            raise ConfigError(f"{path}: truncated bitmap")
        return np.array(digits[:w * h], dtype=int).reshape(h, w).astype(bool)
    pos += 1
    row_bytes = (w + 7) // 8
    raw = np.frombuffer(data[pos:pos + row_bytes * h], dtype=np.uint8)
    if raw.size < row_bytes * h:
        raise ConfigError(f"{path}: truncated bitmap")
    return np.unpackbits(raw.reshape(h, row_bytes), axis=1)[:, :w].astype(bool)


def read_manifest(path) -> list[Pattern]:
    """CSV with ``path,label`` rows; paths are relative to the manifest."""
    base = Path(path).parent
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(Pattern(read_pbm(base / row["path"]), int(row["label"])))
    if not out:
        raise ConfigError(f"{path}: empty manifest")
    shapes = {p.shape for p in out}
    if len(shapes) != 1:
        raise DimensionMismatch(f"{path}: mixed bitmap sizes {sorted(shapes)}")
    return out


def write_dataset(patterns: list[Pattern], directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = d / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "label"])
        for i, p in enumerate(patterns):
            name = f"p{i:05d}_c{p.label}.pbm"
            write_pbm(d / name, p.pixels)
            w.writerow([name, p.label])
    return manifest


def write_weights_csv(state: LearnerState, cfg: LearnerConfig, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M", "n_outputs", "format", "i_bias"])
        w.writerow([cfg.n_inputs, cfg.n_outputs, cfg.backend, repr(state.i_bias)])
        for row in state.weights:
            w.writerow([repr(float(x)) for x in row])


def read_weights_csv(path) -> tuple[np.ndarray, float, str]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    m, n, fmt, i0 = int(rows[1][0]), int(rows[1][1]), rows[1][2], float(rows[1][3])
    w = np.array([[float(x) for x in r] for r in rows[2:]])
    if w.shape != (m, n):
        raise DimensionMismatch(f"{path}: header says {(m, n)}, body is {w.shape}")
    return w, i0, fmt


def write_log_csv(state: LearnerState, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "class", "frequency_hz"])
        for e, c, f in state.log:
            w.writerow([e, c, repr(f)])
