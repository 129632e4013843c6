"""Trainable tabular classifiers over feature matrices."""

from .api import (  # noqa: F401
    DegenerateLabelsError,
    GbdtConfig,
    LinearConfig,
    ModelFormatError,
    SchemaMismatchError,
    TrainedModel,
    load_model,
    make_label_space,
    predict,
    save_model,
    train_gbdt,
    train_linear,
)
