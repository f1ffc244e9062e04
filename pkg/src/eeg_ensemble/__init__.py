"""Decomposition-based ensemble CNNs for cross-subject EEG fatigue detection."""
from .core import ALERT, FATIGUE, Epoch, EpochSet
from .data import SyntheticSpec, generate_synthetic, label_trials, load_epochs, save_epochs
from .decomposition import DecompositionConfig, decompose_epoch, decompose_epochs
from .ensemble import EnsembleModel, TrainConfig, train_ensemble
from .evaluation import MetricsReport, run_loso, sensitivity_sweep, wilcoxon_signed_rank
from .features import psd_features
from .network import Trunk, TrunkConfig

__version__ = "0.1.0"

__all__ = [
    "ALERT", "FATIGUE", "DecompositionConfig", "EnsembleModel", "Epoch", "EpochSet",
    "MetricsReport", "SyntheticSpec", "TrainConfig", "Trunk", "TrunkConfig", "decompose_epoch",
    "decompose_epochs", "generate_synthetic", "label_trials", "load_epochs", "psd_features",
    "run_loso", "save_epochs", "sensitivity_sweep", "train_ensemble", "wilcoxon_signed_rank",
]
