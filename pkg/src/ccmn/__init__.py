"""Unbiased learning under class-conditional multi-label noise."""

from .core import (
    CCMNError,
    InvalidNoiseSpec,
    InvalidSplit,
    MultiLabelDataset,
    NoiseSpec,
    ShapeError,
    SplitSpec,
    make_rng,
    split_dataset,
)
from .correction import (
    compute_bound_constants,
    corrected_loss_hamming,
    corrected_loss_ranking,
    corrected_phi_independent,
    derive_pairwise_by_linsolve,
    dummy_label_loss,
    pairwise_correction_table,
    upml_loss_hamming,
    upml_loss_ranking,
)
from .surrogate import SurrogateLoss

__version__ = "0.1.0"
