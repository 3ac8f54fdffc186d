"""Mini-batch training loop for the regression networks.

The optimizer is Adam (adaptive per-parameter moment estimates) on the MSE
loss, with early stopping on the test split. The network state returned to
the caller is the snapshot with the lowest test MSE seen during training.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .network import DenseNetwork, NetworkSpec, forward_batch, mse_loss_and_gradients


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainingConfig:
    max_epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    early_stop_patience: int = 50
    weight_decay: float = 3e-3  # L2 on weight matrices only; biases stay free

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.early_stop_patience < 0:
            raise ValueError(f"early_stop_patience must be >= 0, got {self.early_stop_patience}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")


@dataclass
class LabeledData:
    """Feature matrix (n, d) with scalar targets (n,)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2 or self.y.ndim != 1 or self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"inconsistent data shapes: x {self.x.shape}, y {self.y.shape}")

    def __len__(self) -> int:
        return self.x.shape[0]


@dataclass
class RegressionSplit:
    train: LabeledData
    test: LabeledData


@dataclass
class TrainingReport:
    mse_history: list[tuple[float, float]]  # (train MSE, test MSE) per epoch
    final_test_mse: float
    wall_time_seconds: float
    spec: NetworkSpec | None = None
    stopped_epoch: int = field(default=0)


def mse(net: DenseNetwork, data: LabeledData) -> float:
    """Mean squared prediction error over `data`."""
    if len(data) == 0:
        raise ValueError("cannot compute MSE on an empty data set")
    pred = forward_batch(net, data.x)
    return float(np.mean((pred - data.y) ** 2))


class _Adam:
    """Adam moment state for one list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g**2
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def train(net: DenseNetwork, data: RegressionSplit, cfg: TrainingConfig) -> TrainingReport:
    """Train `net` in place and return the per-epoch MSE history.

    After return, `net` holds the parameter snapshot with the lowest test
    MSE observed over the run, and `final_test_mse` is that minimum.
    Deterministic for a fixed (seed, data, config).
    """
    if len(data.train) == 0 or len(data.test) == 0:
        raise ValueError("train and test splits must both be nonempty")
    if data.train.x.shape[1] != net.input_dim:
        raise ValueError(
            f"feature dim {data.train.x.shape[1]} does not match network input dim {net.input_dim}"
        )

    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    opt_w = _Adam(net.weights, cfg.learning_rate)
    opt_b = _Adam(net.biases, cfg.learning_rate)

    n = len(data.train)
    best_test = np.inf
    best_params = net.copy_parameters()
    since_improve = 0
    history: list[tuple[float, float]] = []
    epoch = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        for start_idx in range(0, n, cfg.batch_size):
            batch = order[start_idx : start_idx + cfg.batch_size]
            loss, gw, gb = mse_loss_and_gradients(net, data.train.x[batch], data.train.y[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            if cfg.weight_decay > 0.0:
                for w, g in zip(net.weights, gw):
                    g += cfg.weight_decay * w
            opt_w.step(net.weights, gw)
            opt_b.step(net.biases, gb)

        train_mse = mse(net, data.train)
        test_mse = mse(net, data.test)
        if not (np.isfinite(train_mse) and np.isfinite(test_mse)):
            raise TrainingDivergedError(epoch)
        history.append((train_mse, test_mse))

        if test_mse < best_test:
            best_test = test_mse
            best_params = net.copy_parameters()
            since_improve = 0
        else:
            since_improve += 1
            if since_improve > cfg.early_stop_patience:
                break

    net.set_parameters(*best_params)
    return TrainingReport(
        mse_history=history,
        final_test_mse=float(best_test),
        wall_time_seconds=time.perf_counter() - start,
        spec=net.spec,
        stopped_epoch=epoch,
    )
