"""Desk-scale flow matching: a small feedforward velocity field with exact
reverse-mode gradients, the plain and tangent-projected losses, logit-normal
time sampling with a rational timestep shift, an Adam-style optimizer written
out by hand, and three ODE samplers (Euler, projected Euler, exponential map).

Everything runs in float64 on numpy; no autodiff framework is involved, so
the gradient path is fully auditable against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import container
from .errors import (
    DimensionMismatch,
    DivergenceDetected,
    RadiusMismatch,
    UnknownCondition,
)
from .paths import PathKind, path_rows
from .sphere import (
    ON_SPHERE_RTOL,
    expmap_rows,
    project_rows,
    tangent_rows,
    uniform_rows,
)

LOSS_KINDS = ("linear", "slerp")
SAMPLERS = ("euler", "euler_project", "exp_map")
TIME_SAMPLING = ("uniform", "logit-normal")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


# ---------------------------------------------------------------------------
# time handling


def timestep_shift(u, s: float):
    """Rational shift t = s*u / (1 + (s-1)*u); monotone on [0,1] for s > 0."""
    s = float(s)
    if s <= 0.0:
        raise ValueError("shift must be positive")
    u = np.asarray(u, dtype=np.float64)
    out = s * u / (1.0 + (s - 1.0) * u)
    return float(out) if out.ndim == 0 else out


def time_embedding(t, dim: int) -> np.ndarray:
    """Sinusoidal features sin/cos(pi * 2**j * t), j = 0..dim/2-1."""
    if dim < 2 or dim % 2:
        raise ValueError("embedding width must be even and at least 2")
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    freqs = np.pi * 2.0 ** np.arange(dim // 2)
    phase = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(phase), np.cos(phase)], axis=1)


# ---------------------------------------------------------------------------
# configuration and network


@dataclass
class TrainConfig:
    learning_rate: float = 3e-3
    batch_size: int = 128
    steps: int = 2000
    time_sampling: str = "logit-normal"
    time_mean: float = 0.0
    time_std: float = 1.0
    shift: float = 1.0
    loss_kind: str = "slerp"
    seed: int = 0
    weight_decay: float = 0.0
    grad_clip: float = 1.0

    def __post_init__(self):
        if self.learning_rate < 0.0:
            raise ValueError("learning rate must be nonnegative")
        if self.batch_size < 1 or self.steps < 0:
            raise ValueError("batch size must be positive, steps nonnegative")
        if self.time_sampling not in TIME_SAMPLING:
            raise ValueError(f"time sampling must be one of {TIME_SAMPLING}")
        if self.time_std <= 0.0:
            raise ValueError("time std must be positive")
        if self.shift < 1.0:
            raise ValueError("shift below 1 is not monotone-preserving here")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss kind must be one of {LOSS_KINDS}")
        if self.weight_decay < 0.0 or self.grad_clip <= 0.0:
            raise ValueError("weight decay nonnegative, grad clip positive")


@dataclass
class VelocityField:
    """Feedforward net v(z, t, cond): tanh hidden layers, linear output.

    Input is the concatenation of the token, a sinusoidal time embedding,
    and a learned per-condition embedding row.
    """

    weights: list
    biases: list
    cond_table: np.ndarray
    kind: str
    radius: float
    time_dim: int

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"field kind must be one of {LOSS_KINDS}")
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionMismatch("weights and biases must pair up")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        self.cond_table = np.asarray(self.cond_table, dtype=np.float64)
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionMismatch("layer shapes inconsistent")
        for a, b in zip(self.weights[:-1], self.weights[1:]):
            if a.shape[1] != b.shape[0]:
                raise DimensionMismatch("consecutive layer widths do not chain")
        expect = self.d + self.time_dim + self.cond_table.shape[1]
        if self.weights[0].shape[0] != expect:
            raise DimensionMismatch(
                f"first layer width {self.weights[0].shape[0]} != d + embeddings {expect}"
            )
        if not all(np.all(np.isfinite(p)) for p in self.parameters()):
            raise ValueError("non-finite parameters")

    @property
    def d(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def n_cond(self) -> int:
        return self.cond_table.shape[0]

    @property
    def widths(self) -> list:
        return [int(w.shape[0]) for w in self.weights] + [self.d]

    def parameters(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        out.append(self.cond_table)
        return out

    @classmethod
    def create(
        cls,
        d: int,
        hidden=(64, 64),
        time_dim: int = 16,
        n_cond: int = 1,
        cond_dim: int = 8,
        kind: str = "slerp",
        radius: float | None = None,
        rng: np.random.Generator | None = None,
    ) -> "VelocityField":
        if rng is None:
            rng = np.random.default_rng()
        if radius is None:
            radius = float(np.sqrt(d))
        widths = [d + time_dim + cond_dim, *hidden, d]
        weights = []
        biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), (fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        cond_table = rng.normal(0.0, 1.0, (n_cond, cond_dim))
        return cls(weights, biases, cond_table, kind, radius, time_dim)


def _forward_rows(field: VelocityField, z, t, cond):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != field.d:
        raise DimensionMismatch(f"expected (n, {field.d}) tokens, got {z.shape}")
    n = z.shape[0]
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (n,))
    cond = np.broadcast_to(np.asarray(cond, dtype=np.int64), (n,))
    if cond.size and (cond.min() < 0 or cond.max() >= field.n_cond):
        raise UnknownCondition(
            f"condition ids must lie in [0, {field.n_cond}), got {cond.min()}..{cond.max()}"
        )
    x = np.concatenate([z, time_embedding(t, field.time_dim), field.cond_table[cond]], axis=1)
    acts = [x]
    a = x
    for w, b in zip(field.weights[:-1], field.biases[:-1]):
        a = np.tanh(a @ w + b)
        acts.append(a)
    out = acts[-1] @ field.weights[-1] + field.biases[-1]
    return out, (acts, cond)


def _backward_rows(field: VelocityField, cache, g_out):
    """Gradients of sum(out * g_out) w.r.t. every parameter."""
    acts, cond = cache
    n_layers = len(field.weights)
    g_w = [None] * n_layers
    g_b = [None] * n_layers
    g = g_out
    g_w[-1] = acts[-1].T @ g
    g_b[-1] = g.sum(axis=0)
    g = g @ field.weights[-1].T
    for i in range(n_layers - 2, -1, -1):
        g = g * (1.0 - acts[i + 1] ** 2)
        g_w[i] = acts[i].T @ g
        g_b[i] = g.sum(axis=0)
        g = g @ field.weights[i].T
    g_table = np.zeros_like(field.cond_table)
    np.add.at(g_table, cond, g[:, field.d + field.time_dim :])
    grads = []
    for gw, gb in zip(g_w, g_b):
        grads.append(gw)
        grads.append(gb)
    grads.append(g_table)
    return grads


def forward(field: VelocityField, z, t: float, cond: int) -> np.ndarray:
    """Evaluate the field at one token; ``t`` must lie in [0, 1]."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise DimensionMismatch("forward takes a single token vector")
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t = {t!r} outside [0, 1]")
    out, _ = _forward_rows(field, z[None, :], t, int(cond))
    return out[0]


# ---------------------------------------------------------------------------
# losses


def loss_and_grad(field: VelocityField, batch, kind: str):
    """Mean squared velocity error over a batch and its exact gradient.

    ``batch`` is (z0, z1, t, cond) row stacks.  The ``slerp`` kind tangent-
    projects both the model output and the target at z_t; backprop runs
    through the output's projection (the target's is parameter-free).
    Returns (loss, grads) with grads parallel to ``field.parameters()``.
    """

    if kind not in LOSS_KINDS:
        raise ValueError(f"loss kind must be one of {LOSS_KINDS}")
    z0, z1, t, cond = batch
    z0 = np.asarray(z0, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if kind == "slerp":
        for name, z in (("z0", z0), ("z1", z1)):
            dev = np.max(np.abs(np.linalg.norm(z, axis=-1) - field.radius))
            if dev > ON_SPHERE_RTOL * field.radius:
                raise RadiusMismatch(
                    f"{name} rows off the field's sphere by up to {dev!r}"
                )
        z_t, u_t = path_rows(z0, z1, t, PathKind.SLERP, radius=field.radius)
    else:
        z_t, u_t = path_rows(z0, z1, t, PathKind.LINEAR)

    pred, cache = _forward_rows(field, z_t, t, cond)
    n = pred.shape[0]
    if kind == "slerp":
        diff = tangent_rows(pred, z_t) - tangent_rows(u_t, z_t)
        g_pred = tangent_rows(2.0 * diff / n, z_t)
    else:
        diff = pred - u_t
        g_pred = 2.0 * diff / n
    loss = float(np.mean(np.sum(diff * diff, axis=1)))
    return loss, _backward_rows(field, cache, g_pred)


# ---------------------------------------------------------------------------
# optimizer


class Adam:
    """Adaptive-moment SGD with bias correction and decoupled weight decay."""

    def __init__(self, params, learning_rate: float, weight_decay: float = 0.0):
        self.params = list(params)
        self.learning_rate = float(learning_rate)
        self.weight_decay = float(weight_decay)
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        c1 = 1.0 - ADAM_BETA1 ** self.t
        c2 = 1.0 - ADAM_BETA2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m[...] = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
            v[...] = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g
            if self.weight_decay:
                p[...] -= self.learning_rate * self.weight_decay * p
            p[...] -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def clip_gradients(grads, max_norm: float) -> float:
    """Scale ``grads`` in place to global norm ``max_norm``; returns the
    pre-clip norm."""
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if total > max_norm > 0.0:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return total


# ---------------------------------------------------------------------------
# data


@dataclass
class SyntheticDataset:
    """Projected-Gaussian mixture on the sphere: sample around a center,
    push back to the radius.  ``labels`` maps centers to condition ids."""

    d: int
    radius: float
    centers: np.ndarray
    spread: float
    weights: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64)
        if self.centers.ndim != 2 or self.centers.shape[1] != self.d:
            raise DimensionMismatch(f"centers must be (k, {self.d})")
        dev = np.max(np.abs(np.linalg.norm(self.centers, axis=-1) - self.radius))
        if dev > ON_SPHERE_RTOL * self.radius:
            raise RadiusMismatch(f"centers off the sphere by up to {dev!r}")
        if self.spread <= 0.0:
            raise ValueError("spread must be positive")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        k = self.centers.shape[0]
        if self.weights.shape != (k,) or np.any(self.weights < 0.0):
            raise ValueError("weights must be k nonnegative reals")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        if self.labels is None:
            self.labels = np.zeros(k, dtype=np.int64)
        else:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (k,):
                raise DimensionMismatch("labels must give one condition id per center")

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    def sample(self, n: int, rng: np.random.Generator):
        """Draw n tokens; returns (rows, condition ids)."""
        comp = rng.choice(self.n_centers, size=n, p=self.weights)
        noise = self.spread * rng.standard_normal((n, self.d))
        rows = project_rows(self.centers[comp] + noise, self.radius)
        return rows, self.labels[comp]


def random_dataset(
    d: int,
    radius: float,
    n_centers: int,
    spread: float,
    rng: np.random.Generator,
    weights=None,
) -> SyntheticDataset:
    """Dataset with uniformly drawn centers; weights default to uniform."""
    centers = uniform_rows(n_centers, d, radius, rng)
    if weights is None:
        weights = np.full(n_centers, 1.0 / n_centers)
    return SyntheticDataset(d, radius, centers, spread, np.asarray(weights, float))


def assignment_histogram(outputs, centers) -> np.ndarray:
    """Frequency of nearest-center assignment for each center."""
    outputs = np.asarray(outputs, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if outputs.ndim != 2 or centers.ndim != 2 or outputs.shape[1] != centers.shape[1]:
        raise DimensionMismatch("outputs and centers must be row stacks of equal width")
    d2 = np.sum((outputs[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    nearest = np.argmin(d2, axis=1)
    counts = np.bincount(nearest, minlength=centers.shape[0])
    return counts / outputs.shape[0]


# ---------------------------------------------------------------------------
# training


def prior_rows(field: VelocityField, n: int, rng: np.random.Generator) -> np.ndarray:
    """Noise endpoint for the field's kind: standard Gaussian rows for the
    linear kind, uniform sphere rows for the slerp kind."""
    if field.kind == "slerp":
        return uniform_rows(n, field.d, field.radius, rng)
    return rng.standard_normal((n, field.d))


def sample_time(rng: np.random.Generator, config: TrainConfig, size=None):
    """Draw training times: uniform or logit-normal, then the shift map.

    Draws are nudged into the open interval so t never hits 0 or 1 exactly.
    """

    if config.time_sampling == "uniform":
        u = rng.uniform(size=size)
    else:
        u = 1.0 / (1.0 + np.exp(-rng.normal(config.time_mean, config.time_std, size=size)))
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    return timestep_shift(u, config.shift)


# Window for the smoothed initial/final loss readings.  25 steps averages
# 3200 samples at the default batch size, enough to damp batch noise while
# staying a small prefix of a 2000-step run (the first 100 steps already
# descend well below the untrained loss).
SMOOTH_WINDOW = 25


def smoothed_endpoints(trace, window: int = SMOOTH_WINDOW):
    """Mean loss over the first and last ``window`` steps of a trace."""
    trace = np.asarray(trace, dtype=np.float64)
    if trace.size == 0:
        raise ValueError("empty loss trace")
    w = max(1, min(int(window), trace.size))
    return float(trace[:w].mean()), float(trace[-w:].mean())


def train(
    field: VelocityField,
    dataset: SyntheticDataset,
    config: TrainConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Run mini-batch training in place; returns the per-step loss trace."""
    if config.loss_kind != field.kind:
        raise ValueError(
            f"config loss kind {config.loss_kind!r} does not match field kind {field.kind!r}"
        )
    if dataset.d != field.d:
        raise DimensionMismatch("dataset and field dimensions differ")
    opt = Adam(field.parameters(), config.learning_rate, config.weight_decay)
    trace = np.empty(config.steps)
    for step in range(config.steps):
        z1, cond = dataset.sample(config.batch_size, rng)
        z0 = prior_rows(field, config.batch_size, rng)
        t = sample_time(rng, config, size=config.batch_size)
        loss, grads = loss_and_grad(field, (z0, z1, t, cond), config.loss_kind)
        if not np.isfinite(loss):
            raise DivergenceDetected(f"non-finite loss at step {step}")
        clip_gradients(grads, config.grad_clip)
        opt.step(grads)
        trace[step] = loss
    return trace


# ---------------------------------------------------------------------------
# sampling


@dataclass
class SampleRun:
    sampler: str
    nfe: int
    outputs: np.ndarray
    kind: str
    radius: float

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")
        if self.nfe < 1:
            raise ValueError("nfe must be at least 1")
        self.outputs = np.asarray(self.outputs, dtype=np.float64)
        if self.kind == "slerp" and self.sampler in ("euler_project", "exp_map"):
            dev = np.max(
                np.abs(np.linalg.norm(self.outputs, axis=-1) - self.radius)
            )
            if dev > 1e-5 * self.radius:
                raise ValueError(
                    f"sphere-preserving sampler left the sphere by {dev!r}"
                )

    @property
    def max_radius_deviation(self) -> float:
        """max |norm - R| / R over the outputs."""
        dev = np.abs(np.linalg.norm(self.outputs, axis=-1) - self.radius)
        return float(np.max(dev)) / self.radius


def integrate(vel_fn, z0, nfe: int, sampler: str, radius: float) -> np.ndarray:
    """Drive rows from t=0 to t=1 on the uniform grid t_k = k/nfe.

    ``vel_fn(z_rows, t)`` supplies the velocity.  The exp_map sampler
    tangent-projects the velocity before each step.
    """

    if sampler not in SAMPLERS:
        raise ValueError(f"sampler must be one of {SAMPLERS}")
    if nfe < 1:
        raise ValueError("nfe must be at least 1")
    z = np.array(z0, dtype=np.float64, copy=True)
    h = 1.0 / nfe
    for k in range(nfe):
        v = vel_fn(z, k / nfe)
        if sampler == "euler":
            z = z + h * v
        elif sampler == "euler_project":
            z = project_rows(z + h * v, radius)
        else:
            z = expmap_rows(z, h * tangent_rows(v, z), radius)
    return z


def sample(
    field: VelocityField,
    n: int,
    sampler: str,
    nfe: int,
    cond: int,
    rng: np.random.Generator,
) -> SampleRun:
    """Integrate ``n`` chains from the field's prior."""
    if n < 1:
        raise ValueError("need at least one chain")
    z0 = prior_rows(field, n, rng)

    def vel(z, t):
        out, _ = _forward_rows(field, z, t, int(cond))
        return out

    outputs = integrate(vel, z0, nfe, sampler, field.radius)
    return SampleRun(sampler, nfe, outputs, field.kind, field.radius)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, field: VelocityField, config: TrainConfig | None = None, extra: dict | None = None) -> None:
    """Parameter blob as a 1-item container plus a JSON sidecar at
    ``path + ".json"``.  Parameters are stored in 32-bit like any payload."""
    flat = np.concatenate([p.ravel() for p in field.parameters()])
    container.write_container(path, flat.reshape(1, flat.size, 1, 1))
    meta = {
        "format": "slfm-checkpoint",
        "format_version": 1,
        "widths": field.widths,
        "time_dim": field.time_dim,
        "n_cond": field.n_cond,
        "cond_dim": int(field.cond_table.shape[1]),
        "kind": field.kind,
        "radius": field.radius,
        "param_count": int(flat.size),
    }
    if config is not None:
        meta["config"] = asdict(config)
    if extra:
        meta["extra"] = extra
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    """Rebuild (field, sidecar dict) from :func:`save_checkpoint` output."""
    with open(str(path) + ".json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    flat = container.read_container(path).ravel()
    if flat.size != meta["param_count"]:
        raise DimensionMismatch(
            f"blob holds {flat.size} parameters, sidecar says {meta['param_count']}"
        )
    widths = meta["widths"]
    weights = []
    biases = []
    offset = 0
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        weights.append(flat[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out))
        offset += fan_in * fan_out
        biases.append(flat[offset : offset + fan_out])
        offset += fan_out
    table = flat[offset:].reshape(meta["n_cond"], meta["cond_dim"])
    field = VelocityField(
        weights, biases, table, meta["kind"], meta["radius"], meta["time_dim"]
    )
    return field, meta
