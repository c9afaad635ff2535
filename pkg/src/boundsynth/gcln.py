"""Gated continuous logic network (CNF or DNF) with hand-derived gradients.

Gates live in [0, 1]. Literal gates select which literals enter each clause
(or term); clause gates select which clauses enter the output. ``⊗`` is the
product t-norm, and its dual ``1 - (1-a)(1-b)`` plays the t-conorm.
"""

from __future__ import annotations

import enum
import json
import time
from dataclasses import dataclass

import numpy as np

from .formula import BfsError, EmptyOutputs

__all__ = [
    "Arch", "GclnParams", "TrainConfig", "TrainResult", "EmptyTable", "TrainingFailed",
    "literal_vector", "gated_tconorm", "gated_tnorm", "forward", "forward_batch",
    "loss", "gradient", "loss_and_gradient", "init_params", "train", "train_all_outputs",
]


class EmptyTable(BfsError):
    pass


class TrainingFailed(BfsError):
    def __init__(self, output: str, message: str = "did not converge"):
        super().__init__(f"output {output!r}: {message}")
        self.output = output


class Arch(enum.Enum):
    CNF = "cnf"
    DNF = "dnf"


@dataclass
class GclnParams:
    arch: Arch
    literal_gates: np.ndarray  # (k, 2n); column 2i is x_i, 2i+1 is not x_i
    clause_gates: np.ndarray  # (k,)

    @property
    def k(self) -> int:
        return self.clause_gates.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.literal_gates.shape[1] // 2

    def copy(self) -> "GclnParams":
        return GclnParams(self.arch, self.literal_gates.copy(), self.clause_gates.copy())

    def to_json(self) -> str:
        return json.dumps({
            "arch": self.arch.value,
            "k": self.k,
            "n_inputs": self.n_inputs,
            "literal_gates": self.literal_gates.tolist(),
            "clause_gates": self.clause_gates.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "GclnParams":
        d = json.loads(text)
        lit = np.asarray(d["literal_gates"], dtype=float).reshape(d["k"], 2 * d["n_inputs"])
        return cls(Arch(d["arch"]), lit, np.asarray(d["clause_gates"], dtype=float))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    l1_lambda: float = 1e-6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    decision_threshold: float = 0.5
    extract_threshold: float = 0.5
    max_wall_time: float = 60.0
    max_epochs: int | None = None
    seed: int = 0
    init_noise: float = 0.1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.decision_threshold < 1:
            raise ValueError("decision_threshold must lie in (0, 1)")


@dataclass
class TrainResult:
    params: GclnParams
    epochs: int
    final_accuracy: float
    converged: bool
    elapsed: float
    final_loss: float = float("nan")


def literal_vector(x_row) -> np.ndarray:
    """Interleave each input with its complement: (x0, 1-x0, x1, 1-x1, ...)."""
    x = np.asarray(x_row, dtype=float)
    out = np.empty(x.shape[:-1] + (2 * x.shape[-1],))
    out[..., 0::2] = x
    out[..., 1::2] = 1.0 - x
    return out


def gated_tconorm(l, g) -> float:
    """1 - prod_i (1 - g_i * l_i); a gate of 0 drops its input from the disjunction."""
    return float(1.0 - np.prod(1.0 - np.asarray(g, float) * np.asarray(l, float)))


def gated_tnorm(c, h) -> float:
    """prod_j (1 + h_j * (c_j - 1)); a gate of 0 drops its input from the conjunction."""
    return float(np.prod(1.0 + np.asarray(h, float) * (np.asarray(c, float) - 1.0)))


def _prod_except(a: np.ndarray, axis: int) -> np.ndarray:
    """Product over ``axis`` leaving out each position in turn (zero-safe)."""
    a = np.moveaxis(a, axis, -1)
    ones = np.ones(a.shape[:-1] + (1,))
    left = np.cumprod(np.concatenate([ones, a[..., :-1]], axis=-1), axis=-1)
    right = np.cumprod(np.concatenate([ones, a[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    return np.moveaxis(left * right, -1, axis)


def forward_batch(params: GclnParams, lits: np.ndarray) -> np.ndarray:
    """Network output for a batch of literal vectors, shape (N, 2n) -> (N,)."""
    G, h = params.literal_gates, params.clause_gates
    if params.arch is Arch.CNF:
        clause = 1.0 - np.prod(1.0 - G[None] * lits[:, None, :], axis=2)
        return np.prod(1.0 + h[None] * (clause - 1.0), axis=1)
    term = np.prod(1.0 + G[None] * (lits[:, None, :] - 1.0), axis=2)
    return 1.0 - np.prod(1.0 - h[None] * term, axis=1)


def forward(params: GclnParams, x_row) -> float:
    x = np.asarray(x_row, dtype=float)
    if x.shape != (params.n_inputs,):
        raise ValueError(f"expected {params.n_inputs} inputs, got shape {x.shape}")
    return float(forward_batch(params, literal_vector(x)[None])[0])


def _xy(table, output_index):
    X = np.asarray(table.x_matrix(), dtype=float)
    y = np.asarray(table.y_column(output_index), dtype=float)
    if len(y) == 0:
        raise EmptyTable("cannot train on an empty table")
    return literal_vector(X), y


def loss_and_gradient(params: GclnParams, lits: np.ndarray, y: np.ndarray, l1: float):
    """Mean squared error plus L1 on all gates, and its exact gradient."""
    G, h = params.literal_gates, params.clause_gates
    N = len(y)
    if params.arch is Arch.CNF:
        a = 1.0 - G[None] * lits[:, None, :]  # (N, k, 2n)
        P = np.prod(a, axis=2)  # (N, k); clause value is 1 - P
        b = 1.0 - h[None] * P
        yhat = np.prod(b, axis=1)
        err = yhat - y
        dy = 2.0 * err / N
        dyb = dy[:, None] * _prod_except(b, 1)  # dL/db_j
        dh = np.sum(dyb * -P, axis=0)
        dc = dyb * h[None]  # dL/dc_j
        dG = np.sum(dc[:, :, None] * lits[:, None, :] * _prod_except(a, 2), axis=0)
    else:
        a = 1.0 + G[None] * (lits[:, None, :] - 1.0)
        t = np.prod(a, axis=2)  # term values
        b = 1.0 - h[None] * t
        yhat = 1.0 - np.prod(b, axis=1)
        err = yhat - y
        dy = 2.0 * err / N
        dyb = -dy[:, None] * _prod_except(b, 1)
        dh = np.sum(dyb * -t, axis=0)
        dt = dyb * -h[None]
        dG = np.sum(dt[:, :, None] * (lits[:, None, :] - 1.0) * _prod_except(a, 2), axis=0)
    value = float(np.mean(err ** 2) + l1 * (np.abs(G).sum() + np.abs(h).sum()))
    dG = dG + l1 * np.sign(G)
    dh = dh + l1 * np.sign(h)
    return value, dG, dh, yhat


def loss(params: GclnParams, table, output_index: int, l1_lambda: float = 1e-6) -> float:
    lits, y = _xy(table, output_index)
    return loss_and_gradient(params, lits, y, l1_lambda)[0]


def gradient(params: GclnParams, table, output_index: int, l1_lambda: float = 1e-6):
    """(d loss / d literal_gates, d loss / d clause_gates)."""
    lits, y = _xy(table, output_index)
    _, dG, dh, _ = loss_and_gradient(params, lits, y, l1_lambda)
    return dG, dh


def init_params(n_inputs: int, k: int, arch: Arch, rng: np.random.Generator, noise: float = 0.1) -> GclnParams:
    lo, hi = 0.5 - noise, 0.5 + noise
    return GclnParams(
        arch,
        rng.uniform(lo, hi, size=(k, 2 * n_inputs)),
        rng.uniform(lo, hi, size=k),
    )


def _discretize(params: GclnParams, threshold: float) -> GclnParams:
    return GclnParams(
        params.arch,
        (params.literal_gates > threshold).astype(float),
        (params.clause_gates > threshold).astype(float),
    )


def train(table, output_index: int, k: int, arch: Arch = Arch.CNF, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Full-batch Adam with projection onto [0, 1] until every row is classified.

    Convergence needs both the continuous network (thresholded at
    ``decision_threshold``) and its gate-rounded counterpart (rounded at
    ``extract_threshold``) to reproduce the target column exactly, so the
    formula read off the gates agrees with the table.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    start = time.monotonic()
    lits, y = _xy(table, output_index)
    target = y >= 0.5
    rng = np.random.default_rng(cfg.seed)
    params = init_params(lits.shape[1] // 2, k, arch, rng, cfg.init_noise)
    G, h = params.literal_gates, params.clause_gates
    mG, vG = np.zeros_like(G), np.zeros_like(G)
    mh, vh = np.zeros_like(h), np.zeros_like(h)
    b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.learning_rate
    epoch = 0
    acc = 0.0
    while True:
        value, dG, dh, yhat = loss_and_gradient(params, lits, y, cfg.l1_lambda)
        acc = float(np.mean((yhat >= cfg.decision_threshold) == target))
        if acc == 1.0:
            rounded = _discretize(params, cfg.extract_threshold)
            if np.array_equal(forward_batch(rounded, lits) >= 0.5, target):
                return TrainResult(params, epoch, acc, True, time.monotonic() - start, value)
        if cfg.max_epochs is not None and epoch >= cfg.max_epochs:
            break
        if time.monotonic() - start >= cfg.max_wall_time:
            break
        epoch += 1
        mG = b1 * mG + (1 - b1) * dG
        vG = b2 * vG + (1 - b2) * dG * dG
        mh = b1 * mh + (1 - b1) * dh
        vh = b2 * vh + (1 - b2) * dh * dh
        c1, c2 = 1 - b1 ** epoch, 1 - b2 ** epoch
        G -= lr * (mG / c1) / (np.sqrt(vG / c2) + eps)
        h -= lr * (mh / c1) / (np.sqrt(vh / c2) + eps)
        np.clip(G, 0.0, 1.0, out=G)
        np.clip(h, 0.0, 1.0, out=h)
    return TrainResult(params, epoch, acc, False, time.monotonic() - start, value)


def train_all_outputs(table, spec, k: int, arch: Arch = Arch.CNF, cfg: TrainConfig = TrainConfig()) -> list[TrainResult]:
    """One independent network per output, trained in declaration order.

    Raises :class:`TrainingFailed` naming the first output that does not converge.
    The wall-time budget in ``cfg`` is shared by all outputs.
    """
    outputs = spec.output_names
    if not outputs:
        raise EmptyOutputs("specification has no outputs to train")
    deadline = time.monotonic() + cfg.max_wall_time
    results = []
    for i, name in enumerate(outputs):
        remaining = max(deadline - time.monotonic(), 0.0)
        sub = TrainConfig(**{**cfg.__dict__, "max_wall_time": remaining, "seed": _output_seed(cfg.seed, i)})
        res = train(table, i, k, arch, sub)
        if not res.converged:
            raise TrainingFailed(name, f"did not converge with k={k} after {res.epochs} epochs")
        results.append(res)
    return results


def _output_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, index]).generate_state(1, np.uint64)[0])
