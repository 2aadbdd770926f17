"""LSTM and GRU forecasters written directly in numpy, with the data
preparation, metrics and significance tests needed to run them end to end."""

from .cells import CellState, DenseParams, GruParams, LstmParams, forward_window, gru_step, lstm_step
from .dataprep import (
    NormRecord,
    Series,
    WindowedDataset,
    denormalize,
    generate_activities,
    generate_random_walks,
    load_csv,
    make_windows,
    normalize,
    truncate_tail,
)
from .errors import ConfigError, DataError, DegenerateSeriesError, NumericError, ShapeError
from .evaluation import (
    Baseline,
    ForecastReport,
    MannWhitneyResult,
    baseline_forecast,
    directional_accuracy,
    evaluate_model,
    mann_whitney_two_tailed,
    rmse,
)
from .experiment import ExperimentConfig, run_experiment
from .training import AdamState, TrainConfig, TrainedModel, adam_update, bptt_gradients, mse, train

__version__ = "0.1.0"
