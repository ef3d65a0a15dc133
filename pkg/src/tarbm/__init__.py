"""Temporal RBMs with autoencoded delayed weights.

Library and CLI for three sequence models sharing one static RBM core:
the TRBM (delayed hidden-to-hidden weights, CD training), the TARBM
(same architecture with autoencoding pretraining of the delayed
weights) and the CRBM baseline (delayed visible connections as dynamic
biases). Includes exact enumeration oracles, synthetic sequence
generators, a next-frame prediction benchmark and receptive-field
visualization.

The training hot kernels run on a compiled Cython core when available
and fall back to pure numpy; see tarbm.backend.
"""

from .backend import active_backend, available_backends, set_backend
from .errors import (CapacityError, DomainError, ParseError, ShapeError,
                     TarbmError)
from .rbm import CdConfig, RbmParams, init_rbm
from .tarbm_model import TarbmParams, TrainSchedule, init_tarbm
from .crbm_model import CrbmParams, init_crbm
from .data import PatchSpec, SequenceDataset, WhiteningTransform
from .tensor_core import Rng

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "CdConfig", "CrbmParams", "DomainError", "ParseError",
    "PatchSpec", "RbmParams", "Rng", "SequenceDataset", "ShapeError",
    "TarbmError", "TarbmParams", "TrainSchedule", "WhiteningTransform",
    "active_backend", "available_backends", "init_crbm", "init_rbm",
    "init_tarbm", "set_backend",
]
