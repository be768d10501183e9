"""Offline evaluation of generative IR systems with LLM judges.

Five assessment methods (binary, graded, subtopic, pairwise preference,
embedding similarity) run over cached judge backends, validate against
TREC-style qrel orderings, score generated responses with bootstrap
confidence intervals, and expose a blinded human-audit workflow.
"""

from .corpus import (
    CategoryPartition,
    CorpusError,
    EmbeddingStore,
    Qrel,
    QrelSet,
    Query,
    QueryCategories,
    QuerySet,
    Response,
    ResponseSet,
    load_embeddings,
    load_passages,
    load_qrels,
    load_queries,
    load_responses,
    partition_categories,
)
from .judge import (
    HttpEmbeddingBackend,
    HttpJudgeBackend,
    Judge,
    JudgeError,
    JudgeRequest,
    JudgmentLog,
    JudgmentRecord,
    MockEmbeddingBackend,
    MockJudgeBackend,
    PromptTemplate,
    StoreEmbeddingBackend,
    UnparsableReplyError,
    embed_text,
    load_templates,
    parse_reply,
    render_prompt,
)
from .methods import (
    PreferenceOutcome,
    SubtopicList,
    SubtopicScore,
    SubtopicStore,
    assess_binary,
    assess_graded,
    assess_preference,
    assess_subtopics,
    cosine_similarity,
    generate_subtopics,
)
from .validation import (
    AgreementSummary,
    CrossPair,
    PairCounts,
    classify_pointwise_pair,
    enumerate_cross_pairs,
    run_validation,
    sample_preference_triples,
)
from .geneval import (
    BootstrapSummary,
    GenerationResult,
    PerQueryScore,
    ScoreSet,
    bootstrap_summary,
    build_report,
    generate_responses,
    grade_to_gain,
    pick_exemplars,
    report_to_csv,
    report_to_json,
    score_embedding_vs_best,
    score_preference_vs_exemplar,
    score_responses_pointwise,
)
from .audit import (
    AuditBatch,
    AuditItem,
    AuditLabel,
    AuditReport,
    AuditStore,
    audit_report,
    audit_sample,
    record_human_label,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementSummary",
    "AuditBatch",
    "AuditItem",
    "AuditLabel",
    "AuditReport",
    "AuditStore",
    "BootstrapSummary",
    "CategoryPartition",
    "CorpusError",
    "CrossPair",
    "EmbeddingStore",
    "GenerationResult",
    "HttpEmbeddingBackend",
    "HttpJudgeBackend",
    "Judge",
    "JudgeError",
    "JudgeRequest",
    "JudgmentLog",
    "JudgmentRecord",
    "MockEmbeddingBackend",
    "MockJudgeBackend",
    "PairCounts",
    "PerQueryScore",
    "PreferenceOutcome",
    "PromptTemplate",
    "Qrel",
    "QrelSet",
    "Query",
    "QueryCategories",
    "QuerySet",
    "Response",
    "ResponseSet",
    "ScoreSet",
    "StoreEmbeddingBackend",
    "SubtopicList",
    "SubtopicScore",
    "SubtopicStore",
    "UnparsableReplyError",
    "assess_binary",
    "assess_graded",
    "assess_preference",
    "assess_subtopics",
    "audit_report",
    "audit_sample",
    "bootstrap_summary",
    "build_report",
    "classify_pointwise_pair",
    "cosine_similarity",
    "embed_text",
    "enumerate_cross_pairs",
    "generate_responses",
    "generate_subtopics",
    "grade_to_gain",
    "load_embeddings",
    "load_passages",
    "load_qrels",
    "load_queries",
    "load_responses",
    "load_templates",
    "parse_reply",
    "partition_categories",
    "pick_exemplars",
    "record_human_label",
    "render_prompt",
    "report_to_csv",
    "report_to_json",
    "run_validation",
    "sample_preference_triples",
    "score_embedding_vs_best",
    "score_preference_vs_exemplar",
    "score_responses_pointwise",
]
