"""Copula-entropy feature selection for photometric-redshift regression."""

__version__ = "0.1.0"

from .dataset import CleanPolicy, ColumnRoles, Dataset, DatasetError, clean, load_csv, split
from .entropy import (
    CeEstimate,
    EstimatorParams,
    copula_entropy,
    entropy_decomposition_residual,
    knn_entropy,
    mutual_information,
)
from .knn import PointSet, brute_kth_distance, build_index, kth_distance
from .rank import PseudoObservations, ecdf_transform, pseudo_observations
from .select import SelectionReport, rank_features, select_threshold, select_top

__all__ = [
    "Dataset",
    "DatasetError",
    "CleanPolicy",
    "ColumnRoles",
    "load_csv",
    "clean",
    "split",
    "ecdf_transform",
    "pseudo_observations",
    "PseudoObservations",
    "PointSet",
    "build_index",
    "kth_distance",
    "brute_kth_distance",
    "EstimatorParams",
    "CeEstimate",
    "knn_entropy",
    "copula_entropy",
    "mutual_information",
    "entropy_decomposition_residual",
    "SelectionReport",
    "rank_features",
    "select_top",
    "select_threshold",
]
