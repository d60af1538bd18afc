from .features import (CATEGORY_NAMES, COUNTRIES, LabeledTopic, TopicVectorizer, build_features,
                       load_labeled_topics)
from .metrics import ClassificationReport, evaluate
from .smote import SmoteError, smote
from .svm import BinarySvm, SvmModel, fit_binary, fit_ovr, kernel_matrix, kkt_violation
from .train import (GridCell, InsufficientSamples, TrainResult, grid_search, make_grid, predict,
                    stratified_folds, stratified_split, train_svm)

__all__ = [
    "CATEGORY_NAMES", "COUNTRIES", "LabeledTopic", "TopicVectorizer", "build_features",
    "load_labeled_topics", "ClassificationReport", "evaluate", "SmoteError", "smote", "BinarySvm",
    "SvmModel", "fit_binary", "fit_ovr", "kernel_matrix", "kkt_violation", "GridCell",
    "InsufficientSamples", "TrainResult", "grid_search", "make_grid", "predict", "stratified_folds",
    "stratified_split", "train_svm",
]
