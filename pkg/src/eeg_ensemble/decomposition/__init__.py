"""Signal decomposition methods: DWT, EMD, EWT and VMD."""
from .dwt import dwt_decompose, max_levels, wavedec, waverec
from .emd import SiftConfig, emd_decompose, is_imf
from .ewt import detect_boundaries, ewt_decompose, ewt_filter_bank, ewt_reconstruct, meyer_beta
from .stack import (
    DEFAULT_COMPONENTS,
    METHODS,
    ComponentStack,
    DecompositionConfig,
    decompose_epoch,
    decompose_epochs,
    max_components,
)
from .vmd import vmd_decompose

__all__ = [
    "ComponentStack", "DEFAULT_COMPONENTS", "DecompositionConfig", "METHODS", "SiftConfig",
    "decompose_epoch", "decompose_epochs", "detect_boundaries", "dwt_decompose", "emd_decompose",
    "ewt_decompose", "ewt_filter_bank", "ewt_reconstruct", "is_imf", "max_components", "max_levels",
    "meyer_beta", "vmd_decompose", "wavedec", "waverec",
]
