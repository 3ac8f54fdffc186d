"""Dense feedforward regression networks with explicit backpropagation.

Networks map a layout vector to a single scalar metric. Hidden layers use
ReLU, the output layer is linear. Parameters are float64 numpy arrays, so
forward passes, gradients and serialization are exact and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_CATALOG_ROWS = (
    (20, 10),
    (50, 20, 10),
    (100, 50, 20, 10),
    (500, 100, 50, 20, 10),
    (500, 100, 20, 10),
    (1000, 100, 50, 20, 10),
    (1000, 100, 10),
    (400, 300, 200, 100, 50, 20, 10),
    (1000, 300, 200, 100, 50, 20, 10),
    (5000, 1000, 500, 400, 300, 200, 100, 50, 20, 10),
)

ACTIVATIONS = ("relu", "identity")


class InvalidSpecError(ValueError):
    """Raised for a malformed network specification."""


@dataclass(frozen=True)
class NetworkSpec:
    """Hidden-layer widths of a dense regression network.

    `table_index` is the 1-based position in the built-in catalog of ten
    stock architectures, or None for a custom spec.
    """

    hidden_widths: tuple[int, ...]
    table_index: int | None = None

    def __post_init__(self):
        widths = tuple(int(w) for w in self.hidden_widths)
        object.__setattr__(self, "hidden_widths", widths)
        if not widths:
            raise InvalidSpecError("hidden_widths must be nonempty")
        if any(w < 1 for w in widths):
            raise InvalidSpecError(f"hidden widths must all be >= 1, got {widths}")
        if self.table_index is not None and not 1 <= int(self.table_index) <= len(_CATALOG_ROWS):
            raise InvalidSpecError(f"table_index must be in [1, {len(_CATALOG_ROWS)}], got {self.table_index}")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)

    @property
    def total_nodes(self) -> int:
        return sum(self.hidden_widths)


def table1_specs() -> list[NetworkSpec]:
    """The ten stock architectures, in catalog order (table_index 1..10)."""
    return [NetworkSpec(row, table_index=i + 1) for i, row in enumerate(_CATALOG_ROWS)]


def spec_by_index(index: int) -> NetworkSpec:
    """Stock architecture with the given 1-based catalog index."""
    if not 1 <= index <= len(_CATALOG_ROWS):
        raise InvalidSpecError(f"catalog index must be in [1, {len(_CATALOG_ROWS)}], got {index}")
    return NetworkSpec(_CATALOG_ROWS[index - 1], table_index=index)


@dataclass
class DenseNetwork:
    """Stack of affine layers with elementwise activations.

    weights[k] has shape (fan_in, fan_out); a row vector x propagates as
    x @ W + b. The final activation must be "identity" (regression output).
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]
    spec: NetworkSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise InvalidSpecError("weights, biases and activations must have equal length")
        if not self.weights:
            raise InvalidSpecError("network needs at least one layer")
        for k, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise InvalidSpecError(f"layer {k}: weight {w.shape} and bias {b.shape} do not chain")
            if k > 0 and w.shape[0] != self.weights[k - 1].shape[1]:
                raise InvalidSpecError(
                    f"layer {k}: fan-in {w.shape[0]} does not match previous fan-out "
                    f"{self.weights[k - 1].shape[1]}"
                )
            if act not in ACTIVATIONS:
                raise InvalidSpecError(f"layer {k}: unknown activation {act!r}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise InvalidSpecError(f"layer {k}: non-finite parameters")
        if self.activations[-1] != "identity":
            raise InvalidSpecError("output layer activation must be identity")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def num_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy_parameters(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]

    def set_parameters(self, weights: list[np.ndarray], biases: list[np.ndarray]) -> None:
        self.weights = [w.copy() for w in weights]
        self.biases = [b.copy() for b in biases]


def build_network(spec: NetworkSpec, input_dim: int, seed: int) -> DenseNetwork:
    """Construct a network for `spec` with seeded fan-in-scaled uniform init.

    Hidden layers get ReLU, the scalar output layer is linear. Weights are
    drawn from U(-sqrt(6/fan_in), sqrt(6/fan_in)); biases start at zero.
    """
    if input_dim < 1:
        raise InvalidSpecError(f"input_dim must be >= 1, got {input_dim}")
    rng = np.random.default_rng(seed)
    dims = [int(input_dim), *spec.hidden_widths, 1]
    weights, biases, acts = [], [], []
    for k in range(len(dims) - 1):
        fan_in, fan_out = dims[k], dims[k + 1]
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
        acts.append("relu" if k < len(dims) - 2 else "identity")
    return DenseNetwork(weights, biases, acts, spec=spec)


def _apply(act: str, z: np.ndarray) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    return z


def forward_batch(net: DenseNetwork, x: np.ndarray) -> np.ndarray:
    """Predictions for a batch, shape (n,). No per-row validation."""
    a = np.asarray(x, dtype=float)
    for w, b, act in zip(net.weights, net.biases, net.activations):
        a = _apply(act, a @ w + b)
    return a[:, 0]


def forward(net: DenseNetwork, x: np.ndarray) -> float:
    """Single-vector prediction with input validation."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise ValueError(f"input has shape {x.shape}, network expects ({net.input_dim},)")
    if not np.isfinite(x).all():
        raise ValueError("input contains non-finite entries")
    return float(forward_batch(net, x[None, :])[0])


def mse_loss_and_gradients(
    net: DenseNetwork, x: np.ndarray, y: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean squared error over the batch and its gradients w.r.t. all parameters."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]

    # forward pass, caching pre-activations and layer inputs
    pre: list[np.ndarray] = []
    inputs: list[np.ndarray] = []
    a = x
    for w, b, act in zip(net.weights, net.biases, net.activations):
        inputs.append(a)
        z = a @ w + b
        pre.append(z)
        a = _apply(act, z)
    pred = a[:, 0]

    err = pred - y
    loss = float(np.mean(err**2))

    grad_w = [np.empty(0)] * len(net.weights)
    grad_b = [np.empty(0)] * len(net.biases)
    delta = (2.0 / n) * err[:, None]
    for k in range(len(net.weights) - 1, -1, -1):
        if net.activations[k] == "relu":
            delta = delta * (pre[k] > 0)
        grad_w[k] = inputs[k].T @ delta
        grad_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ net.weights[k].T
    return loss, grad_w, grad_b
