"""Wasserstein point-cloud embeddings of finite metrics and words."""
from .errors import (
    DimensionMismatchError,
    DisconnectedGraphError,
    EdgeListParseError,
    NumericalInstabilityError,
    OutOfVocabularyError,
    TrainingDivergedError,
    UnsupportedInstanceError,
)
from .metric_embed import TUNED_LR, DistortionConfig, DistortionReport, mean_distortion, train_min_distortion
from .models import EmbeddingModel, init_model, model_distance, model_distance_grad
from .ot import SinkhornConfig, SinkhornResult, exact_wasserstein, ground_cost, sinkhorn, sinkhorn_batch, sinkhorn_grad
from .persist import RunConfig, load_model, save_model
from .word2cloud import WordTrainConfig, eval_similarity, nearest_neighbors, train_word_model

__version__ = "0.1.0"
