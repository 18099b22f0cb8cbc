"""Shallow neural network buy/sell trials on windowed daily highs."""

from .dataset import (
    Chunk,
    DatasetSplit,
    HygieneMode,
    LabeledExample,
    PriceSeries,
    chunk_series,
    label_chunks,
    normalize_chunk,
    parse_price_csv,
    split_train_test,
)
from .network import (
    NetworkParams,
    Recommendation,
    TrainConfig,
    backprop,
    decide,
    forward,
    init_network,
    loss,
    sigmoid,
    train,
)
from .stats import ChiSquareResult, chi_squared, significance_verdict
from .trials import (
    Arm,
    ContingencyTable,
    TrialOutcome,
    aggregate,
    run_control_trial,
    run_experimental_trial,
)

__version__ = "0.1.0"
