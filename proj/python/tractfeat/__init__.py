"""Tractography-based lesion features and mRS outcome regression."""

from ._tractfeat import (
    DegenerateInputError,
    Field,
    FormatError,
    IoError,
    ShapeError,
    TractfeatError,
    UnsupportedError,
    ValidationError,
    filter_roi,
    first_order,
    load_volume,
    prune_tip,
    round_mrs,
    run_cli,
    run_pipeline,
    save_volume,
    score_predictions,
    track,
    tractographic,
)

__all__ = [
    "DegenerateInputError",
    "Field",
    "FormatError",
    "IoError",
    "ShapeError",
    "TractfeatError",
    "UnsupportedError",
    "ValidationError",
    "filter_roi",
    "first_order",
    "load_volume",
    "prune_tip",
    "round_mrs",
    "run_cli",
    "run_pipeline",
    "save_volume",
    "score_predictions",
    "track",
    "tractographic",
]
