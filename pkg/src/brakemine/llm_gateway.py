"""Prompt construction and pluggable chat / embedding providers.

The gateway renders the classification prompt, calls a provider with fixed
greedy sampling, validates the structured JSON reply, and normalizes
embeddings to unit length.  Mock providers make the whole pipeline
deterministic and offline-testable; remote providers speak a minimal JSON
wire format configured via environment variables.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .model import (
    PROMPT_CATEGORIES,
    PROMPT_CATEGORY_DEFINITIONS,
    ScenarioCategory,
    ScenarioRecord,
    ValidationError,
)

logger = logging.getLogger(__name__)

OUTPUT_KEYS = ("scenario_description", "scenario_category", "explanation")

_DESCRIPTION_HEADER = "Scenario description:"


class GatewayError(RuntimeError):
    """Transport-level failure after all retries."""


class RefusalError(RuntimeError):
    """The provider reported a content refusal; not retried."""


class VerdictParseError(ValueError):
    """The reply was not parseable JSON; carries the raw text."""


class VerdictSchemaError(ValueError):
    """The reply JSON misses or malforms a required key."""


class DegenerateEmbeddingError(ValueError):
    """The provider returned a zero or non-finite vector."""


@dataclass(frozen=True)
class SamplingParams:
    """Greedy decoding; fixed on all production classification paths."""

    temperature: float = 0.0
    top_p: float = 1.0
    top_k: int = 1


@dataclass(frozen=True)
class LlmVerdict:
    rephrased_description: str
    category: ScenarioCategory
    explanation: str
    warning: str | None = None


class ChatProvider(Protocol):
    model_name: str

    def complete(self, prompt: str, params: SamplingParams) -> str: ...


class EmbeddingProvider(Protocol):
    model_name: str

    def embed_text(self, text: str) -> np.ndarray: ...


# ---------------------------------------------------------------------------
# Prompt
# ---------------------------------------------------------------------------

_ROLE_INSTRUCTION = (
    "You are a driving scenario analyst. The text below describes, segment by "
    "segment, how the ego vehicle and one guest agent moved and interacted "
    "while the ego vehicle braked. Rephrase the scenario concisely, decide "
    "which known scenario category fits best, and explain your choice."
)

_FALLBACK_INSTRUCTION = (
    "If no known category fits, use not_relevant when the guest does not "
    "influence the ego vehicle, or unknown_but_relevant when the interaction "
    "matters but matches no known category."
)

_FORMAT_INSTRUCTION = (
    "Return exactly one JSON object with exactly these keys: "
    '"scenario_description" (the rephrased scenario), "scenario_category" '
    '(one category name), "explanation" (the reasoning). No other text.'
)


@dataclass(frozen=True)
class PromptSpec:
    role_instruction: str
    known_categories: tuple[tuple[str, str], ...]
    output_schema: tuple[str, ...]
    scenario_description: str

    def __post_init__(self):
        if not self.known_categories:
            raise ValidationError("known_categories: must be non-empty")
        if tuple(self.output_schema) != OUTPUT_KEYS:
            raise ValidationError(f"output_schema: must be exactly {OUTPUT_KEYS}")
        if not self.scenario_description:
            raise ValidationError("scenario_description: must be non-empty")

    def render(self) -> str:
        lines = [self.role_instruction, "", "Known scenario categories:"]
        for name, definition in self.known_categories:
            lines.append(f"- {name}: {definition}")
        lines += ["", _FALLBACK_INSTRUCTION, "", _FORMAT_INSTRUCTION, "", _DESCRIPTION_HEADER,
                  self.scenario_description]
        return "\n".join(lines)


def default_prompt_categories() -> tuple[tuple[str, str], ...]:
    return tuple((c.value, PROMPT_CATEGORY_DEFINITIONS[c]) for c in PROMPT_CATEGORIES)


def build_prompt(
    description: str, categories: tuple[tuple[str, str], ...] | None = None
) -> str:
    """Render the full classification prompt for one scenario description."""
    spec = PromptSpec(
        role_instruction=_ROLE_INSTRUCTION,
        known_categories=tuple(categories) if categories else default_prompt_categories(),
        output_schema=OUTPUT_KEYS,
        scenario_description=description,
    )
    return spec.render()


# ---------------------------------------------------------------------------
# Calls with retries
# ---------------------------------------------------------------------------

def _with_retries(call, what: str, max_attempts: int, retry_delay_s: float):
    last: Exception | None = None
    for attempt in range(1, max_attempts + 1):
        try:
            return call()
        except RefusalError:
            raise
        except Exception as exc:  # transport errors are provider-specific
            last = exc
            logger.warning("%s attempt %d/%d failed: %s", what, attempt, max_attempts, exc)
            if attempt < max_attempts:
                time.sleep(retry_delay_s * 2 ** (attempt - 1))
    raise GatewayError(f"{what} failed after {max_attempts} attempts: {last}") from last


def classify(
    prompt: str,
    provider: ChatProvider,
    params: SamplingParams | None = None,
    max_attempts: int = 3,
    retry_delay_s: float = 0.5,
) -> str:
    """Raw model text for a prompt; retries transport failures with backoff."""
    params = params or SamplingParams()
    return _with_retries(
        lambda: provider.complete(prompt, params), "classification", max_attempts, retry_delay_s
    )


def embed(
    text: str,
    provider: EmbeddingProvider,
    max_attempts: int = 3,
    retry_delay_s: float = 0.5,
) -> np.ndarray:
    """Unit-norm embedding of `text`, normalized regardless of the provider."""
    if not text:
        raise ValidationError("text: must be non-empty")
    vec = np.asarray(
        _with_retries(lambda: provider.embed_text(text), "embedding", max_attempts, retry_delay_s),
        dtype=float,
    )
    norm = float(np.linalg.norm(vec))
    if not np.isfinite(norm) or norm == 0.0:
        raise DegenerateEmbeddingError("provider returned a zero or non-finite vector")
    return vec / norm


# ---------------------------------------------------------------------------
# Verdict parsing
# ---------------------------------------------------------------------------

def _strip_code_fences(text: str) -> str:
    t = text.strip()
    if t.startswith("```"):
        t = t.split("\n", 1)[1] if "\n" in t else ""
        if t.rstrip().endswith("```"):
            t = t.rstrip()[: -3]
    return t.strip()


def parse_verdict(raw: str) -> LlmVerdict:
    """Validate the model reply against the fixed three-key JSON schema.

    Unknown category strings downgrade to unknown_but_relevant with a warning
    instead of failing the pipeline.
    """
    text = _strip_code_fences(raw)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VerdictParseError(f"reply is not valid JSON ({exc}); raw text: {raw!r}") from exc
    if not isinstance(obj, dict):
        raise VerdictParseError(f"reply is not a JSON object; raw text: {raw!r}")
    for key in OUTPUT_KEYS:
        if key not in obj:
            raise VerdictSchemaError(f"missing key {key!r}")
    rephrased = str(obj["scenario_description"]).strip()
    if not rephrased:
        raise VerdictSchemaError("empty value for key 'scenario_description'")
    category_text = str(obj["scenario_category"]).strip().lower()
    warning = None
    try:
        category = ScenarioCategory(category_text)
    except ValueError:
        category = ScenarioCategory.UNKNOWN_BUT_RELEVANT
        warning = f"unknown category {obj['scenario_category']!r}"
    return LlmVerdict(rephrased, category, str(obj["explanation"]), warning)


def render_verdict(verdict: LlmVerdict) -> str:
    """Serialize a verdict the way a well-behaved provider would reply."""
    return json.dumps(
        {
            "scenario_description": verdict.rephrased_description,
            "scenario_category": verdict.category.value,
            "explanation": verdict.explanation,
        }
    )


# ---------------------------------------------------------------------------
# Mock providers (offline, deterministic)
# ---------------------------------------------------------------------------

_LINE_RE = re.compile(r"^- (.+?) (?:is|changes to) ([A-Z_]+)$")
_ACTOR_RE = re.compile(r"actors: ego vehicle and ([a-z0-9_]+) ")


def _description_features(description: str):
    """Ordered tag values per field label, plus the guest category."""
    values: dict[str, list[str]] = {}
    for line in description.splitlines():
        m = _LINE_RE.match(line.strip())
        if m:
            values.setdefault(m.group(1), []).append(m.group(2))
    m = _ACTOR_RE.search(description)
    guest_category = m.group(1) if m else ""
    return values, guest_category


def _cut_in_transition(positions: list[str]) -> bool:
    for i, pos in enumerate(positions):
        if pos in ("FRONT_LEFT", "FRONT_RIGHT") and "FRONT" in positions[i + 1:]:
            return True
    return False


class MockChatProvider:
    """Deterministic keyword rules over the structured description.

    Rule table (first match wins):
      1. ego turns right and the guest is a pedestrian        -> right_ped
      2. ego turns left and the guest heading is OPPOSITE     -> left_oppo
      3. guest heading SAME with FRONT_LEFT/FRONT_RIGHT
         followed by FRONT                                    -> cut_in
      4. guest heading LEFT/RIGHT crossing through FRONT,
         guest not a pedestrian, ego not turning              -> obj_cross
      5. anything else                                        -> not_relevant
    """

    model_name = "mock-rules-v1"

    def complete(self, prompt: str, params: SamplingParams) -> str:
        description = prompt.split(_DESCRIPTION_HEADER, 1)[-1]
        category, rephrased, explanation = self.classify_description(description)
        return render_verdict(LlmVerdict(rephrased, category, explanation))

    @staticmethod
    def classify_description(description: str):
        values, guest = _description_features(description)
        ego_lat = values.get("ego latitude", [])
        headings = values.get("relative heading", [])
        positions = values.get("relative position", [])
        ego_turning = "TURNING_LEFT" in ego_lat or "TURNING_RIGHT" in ego_lat
        if "TURNING_RIGHT" in ego_lat and guest == "pedestrian":
            return (
                ScenarioCategory.RIGHT_PED,
                "While turning right, the ego vehicle brakes for a pedestrian crossing its path.",
                "The ego vehicle shows a right turn while the guest is a pedestrian on its path.",
            )
        if "TURNING_LEFT" in ego_lat and "OPPOSITE" in headings:
            return (
                ScenarioCategory.LEFT_OPPO,
                f"While turning left, the ego vehicle brakes for an oncoming {guest}.",
                "The ego vehicle shows a left turn while the guest approaches with opposite heading.",
            )
        if "SAME" in headings and _cut_in_transition(positions):
            return (
                ScenarioCategory.CUT_IN,
                f"A {guest} merges into the ego vehicle's lane just ahead, and the ego vehicle brakes.",
                "The guest moves from a diagonal front sector into FRONT while heading the same way.",
            )
        if (
            ("LEFT" in headings or "RIGHT" in headings)
            and "FRONT" in positions
            and guest != "pedestrian"
            and not ego_turning
        ):
            return (
                ScenarioCategory.OBJ_CROSS,
                f"A {guest} crosses the ego vehicle's path ahead, and the ego vehicle brakes.",
                "The guest heading is perpendicular and it passes through the FRONT sector.",
            )
        return (
            ScenarioCategory.NOT_RELEVANT,
            f"The ego vehicle brakes while a {guest} is nearby without a clearly matching interaction pattern.",
            "No rule matched the described interaction.",
        )


class MockEmbedder:
    """Feature-hashing bag-of-tokens embedding; deterministic across runs."""

    model_name = "mock-hash-v1"

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    def embed_text(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension)
        for token in re.findall(r"[a-z0-9_]+", text.lower()):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            idx = int.from_bytes(digest[:4], "little") % self.dimension
            sign = 1.0 if digest[4] & 1 else -1.0
            vec[idx] += sign
        return vec


# ---------------------------------------------------------------------------
# Remote providers (minimal JSON wire format)
# ---------------------------------------------------------------------------

class RemoteChatProvider:
    """POSTs {"prompt", "temperature", "top_p", "top_k"}; expects {"text": ...}."""

    def __init__(self, endpoint: str | None = None, api_key: str | None = None,
                 model_name: str = "remote-chat", timeout_s: float = 60.0, session=None):
        self.endpoint = endpoint or os.environ.get("LLM_ENDPOINT", "")
        self.api_key = api_key if api_key is not None else os.environ.get("LLM_API_KEY", "")
        self.model_name = model_name
        self.timeout_s = timeout_s
        if not self.endpoint:
            raise GatewayError("remote chat provider needs an endpoint (LLM_ENDPOINT)")
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def complete(self, prompt: str, params: SamplingParams) -> str:
        resp = self._session.post(
            self.endpoint,
            json={
                "prompt": prompt,
                "temperature": params.temperature,
                "top_p": params.top_p,
                "top_k": params.top_k,
            },
            headers=self._headers(),
            timeout=self.timeout_s,
        )
        resp.raise_for_status()
        body = resp.json()
        if body.get("refusal"):
            raise RefusalError(str(body["refusal"]))
        return str(body["text"])


class RemoteEmbedder:
    """POSTs {"text": ...}; expects {"embedding": [...]}."""

    def __init__(self, endpoint: str | None = None, api_key: str | None = None,
                 model_name: str = "remote-embed", timeout_s: float = 60.0, session=None):
        self.endpoint = endpoint or os.environ.get("EMBED_ENDPOINT", "")
        self.api_key = api_key if api_key is not None else os.environ.get("EMBED_API_KEY", "")
        self.model_name = model_name
        self.timeout_s = timeout_s
        if not self.endpoint:
            raise GatewayError("remote embedder needs an endpoint (EMBED_ENDPOINT)")
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def embed_text(self, text: str) -> np.ndarray:
        resp = self._session.post(
            self.endpoint, json={"text": text}, headers=self._headers(), timeout=self.timeout_s
        )
        resp.raise_for_status()
        return np.asarray(resp.json()["embedding"], dtype=float)


# ---------------------------------------------------------------------------
# Batch classification
# ---------------------------------------------------------------------------

def classify_descriptions(
    rows: list[dict],
    chat: ChatProvider,
    embedder: EmbeddingProvider,
    params: SamplingParams | None = None,
    concurrency: int = 4,
    retry_delay_s: float = 0.5,
) -> list[ScenarioRecord]:
    """Classify and embed description rows; output order follows input order."""
    params = params or SamplingParams()

    def one(row: dict) -> ScenarioRecord:
        prompt = build_prompt(row["description"])
        verdict = parse_verdict(classify(prompt, chat, params, retry_delay_s=retry_delay_s))
        if verdict.warning:
            logger.warning("pair (%s, %s): %s", row["log_id"], row["guest_id"], verdict.warning)
        vector = embed(verdict.rephrased_description, embedder, retry_delay_s=retry_delay_s)
        return ScenarioRecord(
            log_id=row["log_id"],
            guest_id=row["guest_id"],
            raw_description=row["description"],
            rephrased_description=verdict.rephrased_description,
            category=verdict.category,
            explanation=verdict.explanation,
            embedding=vector,
            provenance={"llm_model": chat.model_name, "embed_model": embedder.model_name},
        )

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        return list(pool.map(one, rows))
