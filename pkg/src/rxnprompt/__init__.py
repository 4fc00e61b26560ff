"""Reaction-type elicitation, curation, prompting and evaluation toolkit."""

from .classifier import (
    SoftmaxClassifier,
    accuracy,
    classifier_fingerprint,
    cross_entropy_loss_and_grad,
    load_classifier,
    save_classifier,
)
from .clustering import KMeans, PlanarProjection, load_kmeans, project_2d, save_kmeans
from .curation import CuratedDataset, annotate_dataset, render_rt_prompt
from .elicitation import (
    SelfFeedbackResult,
    SweepPolicy,
    SweepReport,
    SweepRow,
    annotate_by_cluster,
    run_sweep,
    select_best,
    self_feedback_round,
    train_rt_classifier,
)
from .embedding import (
    EmbeddingStore,
    EncodingMethod,
    FileStoreProvider,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
    compose,
    hash_embed,
)
from .errors import BackendError, ConfigError, DataError, RxnPromptError, SmilesError
from .genbackend import EchoBackend, GenerationRequest, HttpGenerationBackend
from .metrics import (
    MetricReport,
    MetricScores,
    bleu,
    build_report,
    exact_match,
    improvement,
    meteor,
    similarity,
    validity,
)
from .prompting import (
    EnhancedPrompt,
    InstructionSelector,
    TemplateLibrary,
    adaptability,
    build_prompted_dataset,
    fuse,
    select_instruction,
    unfuse,
)
from .records import (
    DatasetSplit,
    ReactionRecord,
    TaskType,
    clean_dataset,
    load_dataset,
    save_dataset,
    split_98_1_1,
)

__version__ = "0.1.0"
