"""Python bindings for the pipegrade condition-rating toolkit."""

from ._core import (  # noqa: F401
    KnnModel,
    NbModel,
    class_scores,
    confusion,
    generate_csv,
    overall_accuracy,
    read_confusion_csv,
    run_pipeline,
    score_matrices,
    shapiro_wilk,
    split_counts,
)

__all__ = [
    "KnnModel",
    "NbModel",
    "class_scores",
    "confusion",
    "generate_csv",
    "overall_accuracy",
    "read_confusion_csv",
    "run_pipeline",
    "score_matrices",
    "shapiro_wilk",
    "split_counts",
]
