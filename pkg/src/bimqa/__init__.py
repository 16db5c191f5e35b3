"""BIM model to text benchmark harness.

The pipeline turns a building model into prompt-sized text blocks, injects
seeded design defects, asks 22 templated questions with oracle answers, drives
chat-completions endpoints over them and scores the replies.
"""

from .corpus import build_corpus, synthetic_corpus
from .export import AnsweredBlock, MixSpec, export_block_files, mix_finetune, screen_for_finetune
from .inject import InjectionPlan, inject
from .inspection import inspect_model
from .metrics import MetricConfig, bleu_n, format_score_and_extract, rouge_l, score_record
from .model import BimModel, Block, DomainError, EvalRecord, QaItem, ScoreVector
from .partition import PartitionConfig, partition
from .questions import build_items, load_templates
from .report import aggregate, diff_models
from .rules import DEFAULT_RULES, RuleSet
from .runner import LlmEndpointConfig, build_prompt, run_batch, sample_blocks
from .textualize import textualize

__version__ = "0.1.0"

__all__ = [
    "AnsweredBlock",
    "BimModel",
    "Block",
    "DEFAULT_RULES",
    "DomainError",
    "EvalRecord",
    "InjectionPlan",
    "LlmEndpointConfig",
    "MetricConfig",
    "MixSpec",
    "PartitionConfig",
    "QaItem",
    "RuleSet",
    "ScoreVector",
    "aggregate",
    "bleu_n",
    "build_corpus",
    "build_items",
    "build_prompt",
    "diff_models",
    "export_block_files",
    "format_score_and_extract",
    "inject",
    "inspect_model",
    "load_templates",
    "mix_finetune",
    "partition",
    "rouge_l",
    "run_batch",
    "sample_blocks",
    "score_record",
    "screen_for_finetune",
    "synthetic_corpus",
    "textualize",
]
