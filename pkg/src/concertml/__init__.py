"""concertml: concert ticket-price regression and city-class location models
built from scratch, with tuning, benchmarking, a CLI and an inference service.
"""

__version__ = "0.1.0"

from .data_model import (  # noqa: F401
    CLASSIFICATION_FEATURES,
    CONCERT_COLUMNS,
    REGRESSION_FEATURES,
    FeatureMatrix,
    RawTable,
    SplitSpec,
    load_csv,
    train_test_split,
)
from .linear_models import rmspe  # noqa: F401
from .evaluation import accuracy, confusion  # noqa: F401
