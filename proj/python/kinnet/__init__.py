"""Neural kinematic networks for unsupervised motion retargetting."""

from ._kinnet import (
    Clip,
    Dataset,
    DatasetConfig,
    Error,
    Generator,
    Skeleton,
    TestPair,
    Trainer,
    axis_angle_quat,
    copy_retarget,
    default_train_config,
    fk,
    generate_dataset,
    load_dataset,
    load_model,
    movement_variance,
    mse,
    quat_from_rotmat,
    quat_to_rotmat,
    save_dataset,
    twist_angle_y,
)

__all__ = [
    "Clip",
    "Dataset",
    "DatasetConfig",
    "Error",
    "Generator",
    "Skeleton",
    "TestPair",
    "Trainer",
    "axis_angle_quat",
    "copy_retarget",
    "default_train_config",
    "fk",
    "generate_dataset",
    "load_dataset",
    "load_model",
    "movement_variance",
    "mse",
    "quat_from_rotmat",
    "quat_to_rotmat",
    "save_dataset",
    "twist_angle_y",
]
