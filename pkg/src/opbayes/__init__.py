"""Static malware classification from opcode frequencies.

The toolkit parses objdump disassembly into opcode histograms, selects
the most class-discriminative opcodes, and classifies executables with a
Gaussian naive Bayes model, either one global model or one per file-size
group with a global fallback.
"""

__version__ = "0.1.0"

from .classifier import (
    NBModel,
    classify,
    load_model,
    save_model,
    train,
    train_regular,
)
from .corpus import (
    BENIGN,
    MALWARE,
    Dataset,
    OpcodeHistogram,
    Sample,
    corpus_stats,
    load_histogram_store,
    load_manifest,
    parse_objdump,
    save_histogram_store,
)
from .errors import OpbayesError
from .evaluate import ConfusionCounts, accuracy, evaluate, split, sweep_features
from .features import FeatureList, select_features, vectorize
from .partition import (
    PartitionedModel,
    group_index,
    load_any_model,
    load_partitioned,
    predict_partitioned,
    save_partitioned,
    train_partitioned,
)
from .synth import generate_corpus

__all__ = [
    "__version__",
    "BENIGN",
    "MALWARE",
    "ConfusionCounts",
    "Dataset",
    "FeatureList",
    "NBModel",
    "OpbayesError",
    "OpcodeHistogram",
    "PartitionedModel",
    "Sample",
    "accuracy",
    "classify",
    "corpus_stats",
    "evaluate",
    "generate_corpus",
    "group_index",
    "load_any_model",
    "load_histogram_store",
    "load_manifest",
    "load_model",
    "load_partitioned",
    "parse_objdump",
    "predict_partitioned",
    "save_histogram_store",
    "save_model",
    "save_partitioned",
    "select_features",
    "split",
    "sweep_features",
    "train",
    "train_partitioned",
    "train_regular",
    "vectorize",
]
