"""Structured extraction via a chat-completion endpoint.

Prompt templates live as versioned files under ``templates/``; the user
template carries two ``{{}}`` slots filled with the record's label and its
space-joined info list. Responses are parsed tolerantly: small instruct
models vary their list formatting, so markers like ``(1)``, ``1.``, ``1)``
and field-name echoes are all accepted.
"""

from __future__ import annotations

import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import requests

from .config import LlmEndpoint
from .errors import EndpointError, FatalEndpoint, MalformedResponse
from .textfilter import strip_digits

logger = logging.getLogger(__name__)

TOKEN_ENV_VAR = "LIDGEN_LLM_TOKEN"

FIELD_ORDER = ("label_long", "label_short", "description", "material", "material_finish")
WORD_LIMITS = {"label_short": 4, "description": 20, "material": 5, "material_finish": 5}


def _template(name: str) -> str:
    return resources.files("lidgen.templates").joinpath(name).read_text(encoding="utf-8")


def system_prompt() -> str:
    return _template("system_prompt.txt")


def user_prompt_template() -> str:
    return _template("user_prompt.txt")


@dataclass(frozen=True)
class ExtractionPrompt:
    system: str
    user: str


@dataclass(frozen=True)
class ExtractedFields:
    label_long: str
    label_short: str
    description: str
    material: str
    material_finish: str

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in FIELD_ORDER}

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractedFields":
        return cls(**{name: d[name] for name in FIELD_ORDER})


@dataclass(frozen=True)
class Discard:
    reason: str  # "missing-field" | "over-length" | "empty"


def estimate_tokens(text: str) -> int:
    # coarse budget estimate: words plus a third for subword splits
    words = len(text.split())
    return words + words // 3


def build_prompts(record: dict, token_budget: int | None = None) -> tuple[ExtractionPrompt, bool]:
    """Fill the user template with the record; returns (prompt, truncated?).

    Over-budget info is truncated tail-first, whole words at a time.
    """
    template = user_prompt_template()
    label = record.get("label", "")
    info_words = " ".join(record.get("info", [])).split()

    def render(words: list[str]) -> str:
        user = template.replace("{{}}", label, 1)
        return user.replace("{{}}", " ".join(words), 1)

    truncated = False
    user = render(info_words)
    if token_budget is not None:
        while info_words and estimate_tokens(user) > token_budget:
            info_words.pop()
            truncated = True
            user = render(info_words)
    return ExtractionPrompt(system=system_prompt(), user=user), truncated


def chat_complete(
    prompt: ExtractionPrompt,
    endpoint: LlmEndpoint,
    session: requests.Session | None = None,
) -> str:
    """POST the prompt to the chat-completion endpoint; return message content."""
    session = session or requests
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(TOKEN_ENV_VAR)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": endpoint.model,
        "messages": [
            {"role": "system", "content": prompt.system},
            {"role": "user", "content": prompt.user},
        ],
        "temperature": endpoint.temperature,
    }
    last_status = 0
    for attempt in range(endpoint.max_retries + 1):
        try:
            resp = session.post(
                endpoint.url, json=body, headers=headers, timeout=endpoint.timeout_s
            )
        except requests.RequestException as exc:
            last_status = 0
            logger.debug("endpoint attempt %d failed: %s", attempt, exc)
            continue
        if resp.status_code == 200:
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponse(str(exc)) from exc
            if not isinstance(content, str):
                raise MalformedResponse("message content is not a string")
            return content
        last_status = resp.status_code
        if resp.status_code < 500:
            break
    raise EndpointError(last_status, prompt.user[:80])


# markers: "(1)", "[1]", "1.", "1)", "1:" at a word boundary
_MARKER_RE = re.compile(r"(?:(?<=\s)|^)[\(\[]?([1-5])[\)\]\.:]\s*")
# optional field-name echo right after the marker
_ECHO_RE = re.compile(
    r"^(?:a\s+)?(?:long label|short label|label|description|material finish(?:\s*/\s*color)?|"
    r"material|finish(?:\s*/\s*color)?|name)\s*[:\-]\s*",
    re.IGNORECASE,
)


def parse_extraction(response: str) -> ExtractedFields | Discard:
    """Locate the five numbered answers in a model response.

    Returns Discard instead of raising; reasons are "missing-field",
    "over-length", and "empty".
    """
    positions: dict[int, tuple[int, int]] = {}
    for m in _MARKER_RE.finditer(response):
        n = int(m.group(1))
        if n not in positions:
            positions[n] = (m.start(), m.end())
    if set(positions) != {1, 2, 3, 4, 5}:
        return Discard("missing-field")
    order = sorted(positions.items())
    if [n for n, _ in order] != [1, 2, 3, 4, 5] or any(
        order[i][1][0] >= order[i + 1][1][0] for i in range(4)
    ):
        return Discard("missing-field")

    values: dict[str, str] = {}
    for idx, (n, (start, end)) in enumerate(order):
        stop = order[idx + 1][1][0] if idx + 1 < len(order) else len(response)
        chunk = response[end:stop].strip()
        chunk = _ECHO_RE.sub("", chunk)
        chunk = strip_digits(chunk).strip(" \t\n-–:;,")
        values[FIELD_ORDER[n - 1]] = chunk

    if any(not v for v in values.values()):
        return Discard("empty")
    for name, limit in WORD_LIMITS.items():
        if len(values[name].split()) > limit:
            return Discard("over-length")
    if len(values["label_short"].split()) > len(values["label_long"].split()):
        return Discard("over-length")
    return ExtractedFields(**values)


def render_fields(fields: ExtractedFields) -> str:
    """Canonical renderer, the inverse of parse_extraction on valid fields."""
    return " ".join(f"({i}) {getattr(fields, name)}" for i, name in enumerate(FIELD_ORDER, 1))


@dataclass
class ExtractOutcome:
    record: dict
    fields: ExtractedFields | None = None
    discard_reason: str | None = None
    error: str | None = None
    truncated: bool = False


def extract_record(
    record: dict, endpoint: LlmEndpoint, session: requests.Session | None = None
) -> ExtractOutcome:
    prompt, truncated = build_prompts(record, token_budget=endpoint.token_budget)
    try:
        response = chat_complete(prompt, endpoint, session=session)
        parsed = parse_extraction(response)
        if isinstance(parsed, Discard) and parsed.reason == "missing-field":
            # one cheap retry with the identical prompt
            response = chat_complete(prompt, endpoint, session=session)
            parsed = parse_extraction(response)
    except (EndpointError, MalformedResponse) as exc:
        return ExtractOutcome(record=record, error=str(exc), truncated=truncated)
    if isinstance(parsed, Discard):
        return ExtractOutcome(record=record, discard_reason=parsed.reason, truncated=truncated)
    return ExtractOutcome(record=record, fields=parsed, truncated=truncated)


def extract_records(
    records: list[dict], endpoint: LlmEndpoint
) -> tuple[list[dict], dict[str, int]]:
    """Run extraction over all records, preserving input order.

    Raises FatalEndpoint when every single record failed with an endpoint
    error (as opposed to content discards).
    """
    drops: dict[str, int] = {}
    session = requests.Session()
    with ThreadPoolExecutor(max_workers=max(1, endpoint.max_concurrency)) as pool:
        outcomes = list(pool.map(lambda r: extract_record(r, endpoint, session), records))

    out: list[dict] = []
    errors = 0
    for outcome in outcomes:
        if outcome.fields is not None:
            rec = dict(outcome.record)
            rec["fields"] = outcome.fields.to_dict()
            if outcome.truncated:
                rec["prompt_truncated"] = True
            out.append(rec)
        elif outcome.error is not None:
            errors += 1
            drops["endpoint-error"] = drops.get("endpoint-error", 0) + 1
        else:
            key = f"discard-{outcome.discard_reason}"
            drops[key] = drops.get(key, 0) + 1
    if records and errors == len(records):
        raise FatalEndpoint(f"all {errors} extraction requests failed")
    return out, drops
