"""Independent vector analysis for convolutive blind source separation.

FasterIVA (eigenvector MM updates with unitary projection), AuxIVA with
iterative projection, and a hybrid that switches from the former to the
latter once the demixing matrices settle.
"""

from .config import RunConfig, load_config
from .errors import IvasepError
from .pipeline import SeparationResult, separate
from .source_model import ContrastModel
from .stft import StftConfig

__version__ = "0.1.0"

__all__ = [
    "ContrastModel",
    "IvasepError",
    "RunConfig",
    "SeparationResult",
    "StftConfig",
    "load_config",
    "separate",
]
