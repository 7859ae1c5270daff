"""traitnet: multimodal apparent-personality recognition at desk scale."""

from .core import (
    SPLITS,
    TRAIT_NAMES,
    DatasetManifest,
    EvaluationReport,
    TraitVector,
    VideoRecord,
    absolute_trait_error,
    parse_manifest,
    serialize_manifest,
    split_dataset,
)
from .errors import (
    AssemblyError,
    ConfigurationError,
    ConnectivityError,
    DatasetError,
    EmptyMediaError,
    EvaluationError,
    FaceAbsentError,
    FormatError,
    IntegrityError,
    ModalityMissingError,
    NumericError,
    ParseError,
    ProbeError,
    ShapeError,
    SizingError,
    TraitnetError,
    ValidationError,
)

__version__ = "0.1.0"
