"""Ground-truth simulation and noisy training data.

The integrator is the Dormand-Prince 5(4) pair with its free 4th-order
continuous extension, so requested sample times never constrain the step
size.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "VectorField",
    "Trajectory",
    "Dataset",
    "BoxSampler",
    "IntegrationError",
    "integrate",
    "integrate_fixed",
    "generate_dataset",
    "finite_difference_outputs",
    "save_dataset",
    "load_dataset",
]


class IntegrationError(RuntimeError):
    """Raised when the adaptive step collapses (blow-up or extreme stiffness)."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class VectorField:
    """Autonomous vector field ``x' = f(x)``.

    ``func`` maps a length-``nvars`` array to a length-``nvars`` array. It may
    also accept a ``(k, nvars)`` batch; if it does not, batches fall back to a
    Python loop.
    """

    nvars: int
    func: Callable[[np.ndarray], np.ndarray]
    name: str = "field"
    vectorized: bool = False

    def __call__(self, x) -> np.ndarray:
        out = np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)
        if out.shape != (self.nvars,):
            raise ValueError(f"{self.name}: expected output of length {self.nvars}, got {out.shape}")
        return out

    def eval_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.vectorized:
            return np.asarray(self.func(X), dtype=float).reshape(X.shape)
        return np.array([self(x) for x in X]).reshape(X.shape)


@dataclass
class Trajectory:
    timestamps: np.ndarray
    states: np.ndarray
    initial_condition: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.initial_condition = np.asarray(self.initial_condition, dtype=float)
        if self.states.shape[0] != self.timestamps.shape[0]:
            raise ValueError("one state row per timestamp required")


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
# difference between 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension (Shampine), y(t + th) = y + h * sum_j (K^T P)[:, j] th^(j+1)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def _dopri_step(f, y, fy, h):
    K = np.empty((7, y.size))
    K[0] = fy
    for s in range(1, 7):
        K[s] = f(y + h * (np.asarray(_A[s]) @ K[:s]))
    y_new = y + h * (_B[:6] @ K[:6])
    K[6] = f(y_new)
    return y_new, K


def _initial_step(f, y0, f0, rtol, atol, span):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f(y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def integrate(field: VectorField | Callable, x0, timestamps, rtol: float = 1e-8,
              atol: float = 1e-10, max_steps: int = 1_000_000) -> Trajectory:
    """Adaptive Dormand-Prince integration sampled at ``timestamps``.

    The first timestamp is the initial time; states between accepted steps
    come from the continuous extension.
    """
    t_eval = np.asarray(timestamps, dtype=float)
    if t_eval.ndim != 1 or t_eval.size < 2:
        raise ValueError("need at least two timestamps")
    if np.any(np.diff(t_eval) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    f = (lambda y: np.asarray(field(y), dtype=float))
    y = np.array(x0, dtype=float)
    n = y.size
    out = np.empty((t_eval.size, n))
    out[0] = y
    t, t_end = t_eval[0], t_eval[-1]
    fy = f(y)
    h = _initial_step(f, y, fy, rtol, atol, t_end - t)
    nxt = 1
    steps = 0
    while nxt < t_eval.size:
        steps += 1
        if steps > max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps at t={t:.6g}", t)
        min_step = 10 * np.finfo(float).eps * max(abs(t), 1.0)
        h = min(h, t_end - t)
        if h < min_step:
            raise IntegrationError(f"step size underflow at t={t:.6g}", t)
        y_new, K = _dopri_step(f, y, fy, h)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((h * (_E @ K) / scale) ** 2))
        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            h *= 0.2
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        t_new = t + h
        Q = K.T @ _P
        while nxt < t_eval.size and t_eval[nxt] <= t_new + 1e-12 * max(1.0, abs(t_new)):
            theta = (t_eval[nxt] - t) / h
            out[nxt] = y + h * (Q @ (theta ** np.arange(1, 5)))
            nxt += 1
        t, y, fy = t_new, y_new, K[6]
        h *= 10.0 if err == 0 else min(10.0, 0.9 * err ** -0.2)
    return Trajectory(t_eval, out, np.array(x0, dtype=float))


def integrate_fixed(field: VectorField | Callable, x0, t_span, nsteps: int) -> np.ndarray:
    """Fixed-step Dormand-Prince (5th-order weights); returns the end state."""
    t0, t1 = t_span
    h = (t1 - t0) / nsteps
    f = (lambda y: np.asarray(field(y), dtype=float))
    y = np.array(x0, dtype=float)
    for _ in range(nsteps):
        y, _K = _dopri_step(f, y, f(y), h)
    return y


@dataclass(frozen=True)
class BoxSampler:
    """Uniform initial conditions over an axis-aligned box."""

    low: tuple
    high: tuple

    def __post_init__(self):
        if len(self.low) != len(self.high):
            raise ValueError("box bounds differ in length")
        if any(lo > hi for lo, hi in zip(self.low, self.high)):
            raise ValueError("box lower bound exceeds upper bound")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(np.asarray(self.low, float), np.asarray(self.high, float))

    def to_dict(self) -> dict:
        return {"kind": "box", "low": list(map(float, self.low)), "high": list(map(float, self.high))}


def trajectory_rng(seed: int, j: int) -> np.random.Generator:
    """Counter-based stream for trajectory ``j``; independent of worker order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(j,))))


@dataclass
class Dataset:
    """Noisy samples of ``m`` trajectories, each with ``r`` rows.

    ``trajectories[j].states`` hold the recorded (noisy) states and
    ``outputs[j]`` the recorded (noisy) vector-field values at those rows.
    """

    trajectories: list[Trajectory]
    outputs: list[np.ndarray]
    sigma_S: float = 0.0
    sigma_Y: float = 0.0
    seed: int = 0
    output_mode: str = "measured"
    sampler: dict | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.trajectories:
            raise ValueError("dataset has no trajectories")
        shape = self.trajectories[0].states.shape
        for tr, out in zip(self.trajectories, self.outputs, strict=True):
            if tr.states.shape != shape:
                raise ValueError("all trajectories must share r and n")
            if np.shape(out) != shape:
                raise ValueError("outputs must match the state shape")
        if self.output_mode not in ("measured", "finite_difference"):
            raise ValueError(f"unknown output_mode {self.output_mode!r}")

    @property
    def m(self) -> int:
        return len(self.trajectories)

    @property
    def r(self) -> int:
        return self.trajectories[0].states.shape[0]

    @property
    def n(self) -> int:
        return self.trajectories[0].states.shape[1]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset([self.trajectories[j] for j in indices], [self.outputs[j] for j in indices],
                       self.sigma_S, self.sigma_Y, self.seed, self.output_mode, self.sampler,
                       dict(self.meta))

    def metadata(self) -> dict:
        return {
            "m": self.m, "r": self.r, "n": self.n,
            "sigma_S": self.sigma_S, "sigma_Y": self.sigma_Y, "seed": self.seed,
            "output_mode": self.output_mode, "sampler": self.sampler, **self.meta,
        }


def finite_difference_outputs(traj: Trajectory) -> np.ndarray:
    """Backward differences: row ``i`` estimates ``f`` at ``states[i + 1]``."""
    if traj.states.shape[0] < 2:
        raise ValueError("need at least two samples")
    return np.diff(traj.states, axis=0) / np.diff(traj.timestamps)[:, None]


def generate_dataset(field: VectorField, m: int, r: int, t_span, ic_sampler: BoxSampler,
                     sigma_S: float, sigma_Y: float, seed: int,
                     output_mode: str = "measured", rtol: float = 1e-8,
                     atol: float = 1e-10) -> Dataset:
    """Simulate ``m`` trajectories at ``r`` evenly spaced times and add noise.

    Outputs are evaluated on the clean states, then states and outputs receive
    independent Gaussian noise with standard deviations ``sigma_S`` and
    ``sigma_Y``. Trajectory ``j`` draws its initial condition, state noise and
    output noise, in that order, from its own stream keyed by ``(seed, j)``.
    In ``finite_difference`` mode the outputs are backward differences of the
    noisy states (plus output noise) and the first row of every trajectory is
    dropped.
    """
    if m < 1 or r < 2:
        raise ValueError("need m >= 1 and r >= 2")
    if sigma_S < 0 or sigma_Y < 0:
        raise ValueError("noise levels must be nonnegative")
    if output_mode not in ("measured", "finite_difference"):
        raise ValueError(f"unknown output_mode {output_mode!r}")
    t = np.linspace(t_span[0], t_span[1], r)
    trajs, outs = [], []
    for j in range(m):
        rng = trajectory_rng(seed, j)
        x0 = ic_sampler.sample(rng)
        try:
            clean = integrate(field, x0, t, rtol=rtol, atol=atol)
        except IntegrationError as exc:
            raise IntegrationError(f"trajectory {j}: {exc}", exc.t) from exc
        eps = rng.normal(0.0, 1.0, clean.states.shape) * sigma_S
        eta = rng.normal(0.0, 1.0, clean.states.shape) * sigma_Y
        states = clean.states + eps
        if output_mode == "measured":
            y = field.eval_many(clean.states) + eta
            trajs.append(Trajectory(t, states, x0))
        else:
            noisy = Trajectory(t, states, x0)
            y = finite_difference_outputs(noisy) + eta[1:]
            trajs.append(Trajectory(t[1:], states[1:], x0))
        outs.append(y)
    return Dataset(trajs, outs, float(sigma_S), float(sigma_Y), int(seed), output_mode,
                   ic_sampler.to_dict(), {"field": field.name, "t_span": [float(t_span[0]), float(t_span[1])]})


def save_dataset(data: Dataset, path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` (traj_id, t, x1..xn, y1..yn) and a JSON sidecar."""
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    json_path = path.with_suffix(".json")
    n = data.n
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["traj_id", "t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)])
        for j, (tr, out) in enumerate(zip(data.trajectories, data.outputs)):
            for i in range(tr.states.shape[0]):
                w.writerow([j, repr(float(tr.timestamps[i]))]
                           + [repr(float(v)) for v in tr.states[i]]
                           + [repr(float(v)) for v in out[i]])
    meta = data.metadata()
    meta["initial_conditions"] = [tr.initial_condition.tolist() for tr in data.trajectories]
    json_path.write_text(json.dumps(meta, indent=2))
    return csv_path, json_path


def load_dataset(path) -> Dataset:
    """Read a dataset CSV; the JSON sidecar is optional."""
    path = Path(path)
    csv_path = path if path.suffix == ".csv" else path.with_suffix(".csv")
    raw = np.genfromtxt(csv_path, delimiter=",", names=True)
    names = raw.dtype.names
    xs = [c for c in names if c.startswith("x")]
    ys = [c for c in names if c.startswith("y")]
    meta = {}
    side = csv_path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
    trajs, outs = [], []
    ids = raw["traj_id"].astype(int)
    for j in np.unique(ids):
        rows = raw[ids == j]
        states = np.column_stack([rows[c] for c in xs])
        ics = meta.get("initial_conditions")
        x0 = np.asarray(ics[j]) if ics else states[0]
        trajs.append(Trajectory(rows["t"], states, x0))
        outs.append(np.column_stack([rows[c] for c in ys]))
    return Dataset(trajs, outs, float(meta.get("sigma_S", 0.0)), float(meta.get("sigma_Y", 0.0)),
                   int(meta.get("seed", 0)), meta.get("output_mode", "measured"), meta.get("sampler"))
