"""Post-model pipeline for dense video captioning: localization cleanup,
confidence ensembling, caption merging, and evaluation."""

__version__ = "0.1.0"

from densecap.core import (  # noqa: E402
    CaptionCandidate,
    DedupMode,
    GroundTruthEvent,
    PipelineConfig,
    Tiebreak,
    TimelineEvent,
    TimelinePrediction,
)
from densecap.errors import ConfigError, DensecapError, PreconditionError, ValidationError  # noqa: E402
