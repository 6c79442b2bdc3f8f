"""Simulated indoor CO2/occupancy data and transfer-learned occupancy
detection for single-person offices."""

from .calibration import DecayFit, decay_model, fit_decay
from .co2 import (DEFAULT_ROOM, Co2Series, RoomConfig, perturbed_room,
                  simulate_co2, steady_state, step_co2)
from .dataset import (LabeledMinuteSeries, WindowSet, downsample_mean,
                      make_windows, split)
from .errors import (ConvergenceError, DegenerateDataError, DomainError,
                     FormatError, NoDecayError, NumericalError, ParseError,
                     StructureError)
from .evaluation import (FoldSpec, RunResult, accuracy, f1, make_folds,
                         run_protocol)
from .models import (NetworkConfig, NetworkWeights, TrainConfig, fit_logistic,
                     forward, init_weights, load_weights, predict,
                     predict_logistic, save_weights, train)
from .occupancy import (DEFAULT_BOUNDS, DaySchedule, OccupancyTrace, SimBounds,
                        perturbed_bounds, presence_rate, simulate_days)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "Co2Series",
    "DEFAULT_BOUNDS",
    "DEFAULT_ROOM",
    "DaySchedule",
    "DecayFit",
    "DegenerateDataError",
    "DomainError",
    "FoldSpec",
    "FormatError",
    "LabeledMinuteSeries",
    "NetworkConfig",
    "NetworkWeights",
    "NoDecayError",
    "NumericalError",
    "OccupancyTrace",
    "ParseError",
    "RoomConfig",
    "RunResult",
    "SimBounds",
    "StructureError",
    "TrainConfig",
    "WindowSet",
    "accuracy",
    "decay_model",
    "downsample_mean",
    "f1",
    "fit_decay",
    "fit_logistic",
    "forward",
    "init_weights",
    "load_weights",
    "make_folds",
    "make_windows",
    "perturbed_bounds",
    "perturbed_room",
    "predict",
    "predict_logistic",
    "presence_rate",
    "run_protocol",
    "save_weights",
    "simulate_co2",
    "simulate_days",
    "split",
    "steady_state",
    "step_co2",
    "train",
]
