from .builders import (
    InputTooSmallError,
    build_autoencoder,
    build_cnn1d,
    build_cnn2d,
    build_mlp,
    encoder_layer_count,
)
from .layers import ShapeMismatchError, loss_crossentropy, softmax
from .network import (
    LayerSpec,
    Network,
    NetworkSpec,
    SpecError,
    load_network,
    save_arrays,
    save_network,
)
from .train import (
    DivergenceError,
    GridSearchRow,
    TrainConfig,
    backward_and_step,
    classification_accuracy,
    gradient_check,
    grid_search,
    make_optimizer,
    train,
    with_seed,
)

__all__ = [
    "InputTooSmallError",
    "build_autoencoder",
    "build_cnn1d",
    "build_cnn2d",
    "build_mlp",
    "encoder_layer_count",
    "ShapeMismatchError",
    "loss_crossentropy",
    "softmax",
    "LayerSpec",
    "Network",
    "NetworkSpec",
    "SpecError",
    "load_network",
    "save_arrays",
    "save_network",
    "DivergenceError",
    "GridSearchRow",
    "TrainConfig",
    "backward_and_step",
    "classification_accuracy",
    "gradient_check",
    "grid_search",
    "make_optimizer",
    "train",
    "with_seed",
]
