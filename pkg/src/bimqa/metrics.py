"""The six scoring indicators: format, BLEU-1/2, ROUGE-L, cosine similarity and G-Eval."""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

from .lcs import lcs_length
from .model import DomainError, EvalRecord, ScoreVector
from .runner import EndpointClient, LlmEndpointConfig, TransportError

MARKER = "[Final Answer]:"
RUBRIC_SHA256 = "93c5c3160e990d7ad49b4aa80229e258b891e87ddecc198d2f7fdeaedb74f36e"
EMBED_DIM = 1024
FLAG_PREFIX = "score:"

_TOKEN = re.compile(r"(?:(?<![^\W_])-(?=\d))?[^\W_]+(?:\.\d+)*")
_SCORE_LINE = re.compile(r"score\s*[:=]\s*(-?\d+(?:\.\d+)?)", re.IGNORECASE)
_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")


class JudgeError(Exception):
    """The judge reply held no parsable score."""


class EmbeddingError(Exception):
    """The embedding endpoint failed after retries."""


class RubricChecksumError(DomainError):
    pass


@lru_cache(maxsize=1)
def canonical_rubric() -> str:
    raw = resources.files("bimqa").joinpath("data/g_eval_rubric.txt").read_bytes()
    if hashlib.sha256(raw).hexdigest() != RUBRIC_SHA256:
        raise RubricChecksumError("data/g_eval_rubric.txt was modified; its checksum no longer matches")
    return raw.decode("utf-8").rstrip("\n")


@dataclass(frozen=True)
class MetricConfig:
    beta: float = 1.0
    bleu_max_n: int = 2
    tokenization: str = "lower-alnum-keep-numbers"
    marker: str = MARKER
    embedding_endpoint: LlmEndpointConfig | None = None
    judge_endpoint: LlmEndpointConfig | None = None
    judge_rubric: str = field(default_factory=canonical_rubric)
    offline_embedder: bool = True

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if self.bleu_max_n < 1:
            raise DomainError("bleu_max_n must be at least 1")
        if self.judge_endpoint is not None and self.judge_endpoint.temperature != 0:
            object.__setattr__(self, "judge_endpoint", replace(self.judge_endpoint, temperature=0))


# -- format --------------------------------------------------------------------


def format_score_and_extract(raw: str, cfg: MetricConfig = MetricConfig()) -> tuple[int, str]:
    """1 and the text after the last marker when a marker line is followed by text, else 0 and ``raw``."""
    if not any(line.strip() == cfg.marker for line in raw.splitlines()):
        return 0, raw
    answer = raw[raw.rfind(cfg.marker) + len(cfg.marker):].strip()
    if not answer:
        return 0, raw
    return 1, answer


# -- BLEU ----------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    """Lowercased word and number tokens; "1.47", "-120" and "342679" stay whole."""
    return _TOKEN.findall(text.lower())


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_n(candidate: str, reference: str, n: int, cfg: MetricConfig = MetricConfig()) -> float:
    """Clipped n-gram precision times the brevity penalty, without smoothing."""
    if n < 1:
        raise DomainError("n must be at least 1")
    cand, ref = tokenize(candidate), tokenize(reference)
    cand_grams = _ngrams(cand, n)
    total = sum(cand_grams.values())
    if total == 0:
        return 0.0
    ref_grams = _ngrams(ref, n)
    clipped = sum(min(c, ref_grams[g]) for g, c in cand_grams.items())
    if clipped == 0:
        return 0.0
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return clipped / total * bp


# -- ROUGE-L -------------------------------------------------------------------


def rouge_l(answer: str, output: str, cfg: MetricConfig = MetricConfig()) -> float:
    """Character-level LCS F-measure with recall against ``answer``."""
    if not answer or not output:
        return 0.0
    lcs = lcs_length(answer, output)
    if lcs == 0:
        return 0.0
    # (1+b2)RP/(R+b2P) with R = lcs/|answer| and P = lcs/|output| reduces to
    # (1+b2)lcs/(|output| + b2|answer|), which avoids two roundings.
    b2 = cfg.beta * cfg.beta
    return min(1.0, (1 + b2) * lcs / (len(output) + b2 * len(answer)))


# -- cosine similarity ---------------------------------------------------------


class HashingEmbedder:
    """Signed feature hashing of tokens into ``dim`` buckets.

    Each token is hashed with BLAKE2b (8-byte digest); the low bits pick the
    bucket and bit 63 picks the sign. Vectors hold small integers, so the
    result is bit-exact across runs and platforms.
    """

    def __init__(self, dim: int = EMBED_DIM):
        self.dim = dim

    def __call__(self, text: str) -> list[float]:
        vec = [0.0] * self.dim
        for tok in tokenize(text):
            h = int.from_bytes(hashlib.blake2b(tok.encode("utf-8"), digest_size=8).digest(), "little")
            vec[h % self.dim] += -1.0 if h >> 63 else 1.0
        return vec


def cosine(u, v) -> float | None:
    """Cosine of two vectors; ``None`` when either is zero."""
    if list(u) == list(v):
        return 1.0 if any(u) else None
    dot = math.fsum(a * b for a, b in zip(u, v))
    nu = math.fsum(a * a for a in u)
    nv = math.fsum(b * b for b in v)
    if nu == 0 or nv == 0:
        return None
    return max(-1.0, min(1.0, dot / math.sqrt(nu * nv)))


def cos_sim(a: str, b: str, cfg: MetricConfig = MetricConfig(), client: EndpointClient | None = None
            ) -> tuple[float | None, tuple]:
    """Cosine similarity and flags; absent when no embedder is available."""
    if client is not None:
        try:
            u, v = client.embed([a, b])
        except TransportError as exc:
            raise EmbeddingError(str(exc)) from exc
    elif cfg.offline_embedder:
        emb = HashingEmbedder()
        u, v = emb(a), emb(b)
    else:
        return None, ("score:cos_sim_unconfigured",)
    c = cosine(u, v)
    if c is None:
        return 0.0, ("score:cos_sim_degenerate",)
    return c, ()


# -- G-Eval --------------------------------------------------------------------


def judge_user_message(answer: str, output: str) -> str:
    return (
        f"[Answer]:\n{answer}\n\n[Actual Output]:\n{output}\n\n"
        "Score the actual output against the answer on a scale from 0 to 1. "
        "Reply with a first line of the form 'score: <number>' followed by a brief rationale."
    )


def parse_judge_score(reply: str) -> float:
    m = _SCORE_LINE.search(reply) or _NUMBER.search(reply)
    if m is None:
        raise JudgeError(f"no score in judge reply: {reply[:120]!r}")
    return float(m.group(1) if m.re is _SCORE_LINE else m.group(0))


def g_eval(answer: str, output: str, cfg: MetricConfig, client: EndpointClient) -> tuple[float, str, tuple]:
    """Judge score in [0, 1], the judge's rationale and flags.

    The request hash is recorded so a judged score can be replayed.
    """
    user = judge_user_message(answer, output)
    body = client.chat_body(cfg.judge_rubric, user, temperature=0)
    flags = [f"score:judge_request={hashlib.sha256(body).hexdigest()[:16]}"]
    last = None
    for _ in range(client.ep.retry.max_attempts):
        try:
            reply, _ = client.chat(cfg.judge_rubric, user, temperature=0)
        except TransportError as exc:
            raise JudgeError(str(exc)) from exc
        try:
            score = parse_judge_score(reply)
            break
        except JudgeError as exc:
            last = exc
    else:
        raise last
    if not 0.0 <= score <= 1.0:
        flags.append(f"score:g_eval_clamped={score:g}")
        score = min(1.0, max(0.0, score))
    return score, reply, tuple(flags)


# -- records -------------------------------------------------------------------


def score_record(rec: EvalRecord, cfg: MetricConfig = MetricConfig(), judge: EndpointClient | None = None,
                 embedder: EndpointClient | None = None) -> EvalRecord:
    """Fill the score vector; earlier scoring flags are replaced, so rescoring is idempotent."""
    flags = [f for f in rec.flags if not f.startswith(FLAG_PREFIX)]
    if rec.error is not None:
        return replace(rec, scores=None, final_answer="", judge_rationale=None,
                       flags=tuple(flags + ["score:skipped_error_record"]))
    truth = rec.qa.ground_truth
    fmt, final = format_score_and_extract(rec.raw_output, cfg)
    flags.append("score:scored_on=final_answer" if fmt else "score:scored_on=full_text")
    flags.append(f"score:beta={cfg.beta:g}")

    try:
        cs, cs_flags = cos_sim(truth, final, cfg, embedder)
    except EmbeddingError:
        cs, cs_flags = None, ("score:embedding_error",)
    flags.extend(cs_flags)

    ge, rationale = None, None
    if judge is not None:
        try:
            ge, rationale, ge_flags = g_eval(truth, final, cfg, judge)
            flags.extend(ge_flags)
        except JudgeError:
            flags.append("score:judge_error")
    else:
        flags.append("score:g_eval_unconfigured")

    scores = ScoreVector(
        format=fmt,
        bleu1=bleu_n(final, truth, 1, cfg),
        bleu2=bleu_n(final, truth, 2, cfg),
        rouge_l=rouge_l(truth, final, cfg),
        cos_sim=cs,
        g_eval=ge,
    )
    return replace(rec, final_answer=final, scores=scores, judge_rationale=rationale, flags=tuple(flags))


def score_records(records, cfg: MetricConfig = MetricConfig(), judge: EndpointClient | None = None,
                  embedder: EndpointClient | None = None, max_in_flight: int = 1) -> list[EvalRecord]:
    """Score many records; network-backed metrics run up to ``max_in_flight`` at once."""
    records = list(records)
    if max_in_flight <= 1 or (judge is None and embedder is None):
        return [score_record(r, cfg, judge, embedder) for r in records]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(lambda r: score_record(r, cfg, judge, embedder), records))


__all__ = [
    "EMBED_DIM",
    "EmbeddingError",
    "HashingEmbedder",
    "JudgeError",
    "MARKER",
    "MetricConfig",
    "RubricChecksumError",
    "bleu_n",
    "canonical_rubric",
    "cos_sim",
    "cosine",
    "format_score_and_extract",
    "g_eval",
    "judge_user_message",
    "parse_judge_score",
    "rouge_l",
    "score_record",
    "score_records",
    "tokenize",
]
