from .network import (
    ACTIVATIONS,
    DenseNetwork,
    InvalidSpecError,
    NetworkSpec,
    build_network,
    forward,
    forward_batch,
    mse_loss_and_gradients,
    spec_by_index,
    table1_specs,
)
from .store import SurrogateModel, load_model, save_model
from .training import (
    LabeledData,
    RegressionSplit,
    TrainingConfig,
    TrainingDivergedError,
    TrainingReport,
    mse,
    train,
)

__all__ = [
    "ACTIVATIONS",
    "DenseNetwork",
    "InvalidSpecError",
    "LabeledData",
    "NetworkSpec",
    "RegressionSplit",
    "SurrogateModel",
    "TrainingConfig",
    "TrainingDivergedError",
    "TrainingReport",
    "build_network",
    "forward",
    "forward_batch",
    "load_model",
    "mse",
    "mse_loss_and_gradients",
    "save_model",
    "spec_by_index",
    "table1_specs",
    "train",
]
