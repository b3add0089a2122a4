"""In-context recognition of marked-point-process intensities: a transformer
that reads a set of event sequences and decodes jump-decay intensity
parameters for any history, trained on synthetic bundles."""

__version__ = "0.1.0"

from .bundles import ProcessEntry, Sequence, read_bundle, write_piecewise_bundle
from .emit import emit_forecast_bundle, infer_piecewise
from .model import (
    ModelConfig,
    RecognitionModel,
    load_checkpoint,
    paper_config,
    save_checkpoint,
    toy_config,
)
from .objective import (
    constant_rate_nll,
    normalize_instance,
    piecewise_nll,
    poisson_oracle_nll,
)
from .training import BatchSpec, finetune, select_batch, train, validation_nll
