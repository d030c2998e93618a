from .base import PosteriorDraws, StochasticClassifier
from .discrete import (
    DiscreteBayesClassifier,
    discrete_predict,
    discrete_predict_samples,
    discrete_update,
    random_discrete_model,
)
from .forest import RandomForestClassifier
from .gp import GPProbitClassifier
from .mlp import DropoutMLP

__all__ = [
    "DiscreteBayesClassifier",
    "DropoutMLP",
    "GPProbitClassifier",
    "PosteriorDraws",
    "RandomForestClassifier",
    "StochasticClassifier",
    "discrete_predict",
    "discrete_predict_samples",
    "discrete_update",
    "random_discrete_model",
]
