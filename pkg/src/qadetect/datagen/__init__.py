from .detector import DetectorConfig, GunConfig, generate_event, generate_events
from .digits import load_digits, render_synthetic_digits, write_synthetic_idx
from .idx import read_idx, write_idx
from .images import EventImage, Label, image_to_features, load_dataset, pool_mean, pool_sum, save_dataset

__all__ = [
    "DetectorConfig",
    "EventImage",
    "GunConfig",
    "Label",
    "generate_event",
    "generate_events",
    "image_to_features",
    "load_dataset",
    "load_digits",
    "pool_mean",
    "pool_sum",
    "read_idx",
    "render_synthetic_digits",
    "save_dataset",
    "write_idx",
    "write_synthetic_idx",
]
