"""Spectral-seriation rank recovery, selection, bounds, and training."""

from . import bounds, data, errors, linalg, metrics, mfsm, model, rankdiff, seriation
from .bounds import check_robustness, eigen_perturbation_first_order, feature_bound, similarity_bound
from .metrics import metric_mae, metric_r2
from .mfsm import brute_select, cross_similarities, dp_select, toy_experiment, variance_matrix
from .model import LossWeights, RegressionModel, loss_full, loss_sc, loss_sr, loss_uc, loss_ur, similarity
from .rankdiff import ranking_loss, rk
from .seriation import MixedBatchLayout, anchor_vector, seriate, seriate_mixed, seriation_objective
from .train import TrainConfig, train_gclss, train_supervised

__version__ = "0.1.0"
