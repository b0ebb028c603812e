"""Force-directed graph embedding with negative sampling, baselines, and evaluation."""

import os
import warnings

# numba sizes its thread pool once, at import; leave room for --threads 8 on small hosts
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))
# an outdated system TBB is skipped in favour of OpenMP; the notice is noise
warnings.filterwarnings("ignore", message="The TBB threading layer")

from .errors import (  # noqa: E402
    ConfigError,
    Force2VecError,
    ParseError,
    TrainingError,
    ValidationError,
)
from .graph import (  # noqa: E402
    CsrGraph,
    LabelSet,
    from_edges,
    generate_sbm,
    load_labels,
    neighbors,
    parse_edge_list,
    to_edge_list,
)
from .engine import TrainConfig, compute_loss, init_embedding, train, train_walk  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CsrGraph",
    "Force2VecError",
    "LabelSet",
    "ParseError",
    "TrainConfig",
    "TrainingError",
    "ValidationError",
    "compute_loss",
    "from_edges",
    "generate_sbm",
    "init_embedding",
    "load_labels",
    "neighbors",
    "parse_edge_list",
    "to_edge_list",
    "train",
    "train_walk",
]
