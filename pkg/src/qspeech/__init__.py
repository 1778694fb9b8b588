"""Quaternion convolutional acoustic models with CTC.

Core pieces: scalar quaternion algebra (:mod:`.quaternion`), a numpy
autodiff substrate (:mod:`.autodiff`), Hamilton-product layers and the
polar initializer (:mod:`.qlayers`), the CTC loss and greedy decoder
(:mod:`.ctc`), the mel-filterbank quaternion front end
(:mod:`.features`), and model/training plumbing (:mod:`.model`,
:mod:`.trainer`, :mod:`.cli`).
"""

__version__ = "0.1.0"

from .autodiff import Tensor, backward
from .ctc import SymbolTable, best_path_decode, collapse, ctc_loss
from .features import FeatureConfig, extract
from .qlayers import QConv2d, QDense, QTensor, quaternion_init
from .quaternion import Quaternion, hamilton_product

__all__ = [
    "Tensor", "backward", "SymbolTable", "best_path_decode", "collapse",
    "ctc_loss", "FeatureConfig", "extract", "QConv2d", "QDense", "QTensor",
    "quaternion_init", "Quaternion", "hamilton_product", "__version__",
]
