"""House-description generation: prompt sampling, parsing, and filtering.

A prompt asks a text generator to describe a scene type with 1-3 sampled
attributes in a two-step format (attribute values, then a short phrase).
Raw outputs pass through three filters: the step-1 values must parse, the
step-2 description must exist, and near-duplicates (token-level LCS F1
above 0.8 against any accepted description) are discarded.

Generation is pluggable: the deterministic offline filler keeps tests and
pipelines hermetic, while the HTTP client talks to a remote
text-generation endpoint configured through environment variables.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
from dataclasses import dataclass

from .scene import ALL_SCENE_TYPES

ROUGE_DEDUP_THRESHOLD = 0.8

ENV_ENDPOINT = "GRIDNAV_TEXT_ENDPOINT"
ENV_MODEL = "GRIDNAV_TEXT_MODEL"
ENV_TOKEN = "GRIDNAV_TEXT_TOKEN"

# The 12 house attributes with example values.
ATTRIBUTES: dict[str, tuple[str, ...]] = {
    "Room Style": ("victorian", "rustic", "minimalist", "art deco", "coastal"),
    "Objects in the Room": ("computers, desks, chairs, servers",
                            "easels and paint supplies", "rows of shelving",
                            "a pool table", "potted plants and benches"),
    "Number of Rooms": ("single room", "two connected rooms", "three rooms"),
    "Configurations": ("individual cubicles", "open floor plan",
                       "stations along the walls", "clustered seating"),
    "Users of the Room": ("children of various ages", "office workers",
                          "weekend hobbyists", "medical staff", "students"),
    "Era": ("contemporary, modern", "mid-century", "industrial age", "futuristic"),
    "Flooring": ("soft and cushioned, hard", "polished concrete",
                 "checkered tile", "wide oak planks"),
    "Theme": ("industrial, contemporary", "nautical", "botanical", "retro arcade"),
    "Lighting": ("bright, warm ambient", "dim and cozy", "neon accents",
                 "natural daylight"),
    "Window": ("small, slightly slanted", "floor-to-ceiling", "round porthole",
               "frosted glass"),
    "Room Size": ("spacious, medium-sized", "compact", "cavernous", "narrow"),
    "Wall Treatment": ("artistic paintings, calming color", "exposed brick",
                       "wood paneling", "chalkboard paint"),
}

ATTRIBUTE_NAMES = tuple(ATTRIBUTES)

TASK_INSTRUCTION = (
    "Create a detailed and fluent description for a house based on the given "
    "scene type and features in two steps. Step 1: provide the value of each "
    "feature. Step 2: write a short phrase to describe the scene type with "
    "the values."
)

EXEMPLARS = (
    ('The given house type is "arcade." The feature list is: '
     '"(1) Objects in the room."',
     "Step 1: (1) a pool table\n Step 2: An arcade with a pool table"),
    ('The given house type is "bakery." The feature list is: "(1) Lighting."',
     "Step 1: (1) warm ambient\n Step 2: A bakery with warm ambient lighting"),
    ('The given house type is "home office." The feature list is: '
     '"(1) Room Style (2) Flooring."',
     "Step 1: (1) rustic (2) wide oak planks\n"
     " Step 2: A rustic home office with wide oak plank flooring"),
    ('The given house type is "gym." The feature list is: '
     '"(1) Room Size (2) Users of the Room."',
     "Step 1: (1) spacious (2) weekend hobbyists\n"
     " Step 2: A spacious gym used by weekend hobbyists"),
    ('The given house type is "library." The feature list is: '
     '"(1) Wall Treatment (2) Era."',
     "Step 1: (1) exposed brick (2) contemporary\n"
     " Step 2: A contemporary library with exposed brick walls"),
)

REJECT_UNPARSED_ATTRIBUTES = "UnparsedAttributes"
REJECT_MISSING_DESCRIPTION = "MissingDescription"
REJECT_DUPLICATE = "DuplicateDescription"


@dataclass(frozen=True)
class PromptSample:
    scene_type: str
    attributes: tuple[str, ...]
    prompt: str


@dataclass(frozen=True)
class DescriptionRecord:
    scene_type: str
    sampled_attributes: tuple[tuple[str, str | None], ...]
    step1_text: str | None
    step2_description: str | None
    accepted: bool
    rejection_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "scene_type": self.scene_type,
            "sampled_attributes": [list(p) for p in self.sampled_attributes],
            "step1_text": self.step1_text,
            "step2_description": self.step2_description,
            "accepted": self.accepted,
            "rejection_reason": self.rejection_reason,
        }


def sample_prompt(seed: int) -> PromptSample:
    """Scene type plus 1-3 attributes, assembled into a few-shot prompt."""
    rng = random.Random(seed)
    scene_type = rng.choice(ALL_SCENE_TYPES)
    count = rng.randint(1, 3)
    attributes = tuple(rng.sample(ATTRIBUTE_NAMES, count))
    feature_list = " ".join(f"({i + 1}) {name}" for i, name in enumerate(attributes))
    parts = [f"Task Instruction: {TASK_INSTRUCTION}"]
    for i, (ex_in, ex_out) in enumerate(EXEMPLARS, start=1):
        parts.append(f"Exemplar{i} Input: {ex_in}")
        parts.append(f"Exemplar{i} Output: {ex_out}")
    parts.append(
        f'Testing Input: The given house type is "{scene_type}." '
        f'The feature list is: "{feature_list}."')
    return PromptSample(scene_type, attributes, "\n".join(parts))


def parse_output(raw: str, n_attributes: int):
    """Extract step-1 values and the step-2 description from raw output.

    Returns (values, description) on success or (None, reason) when the
    output violates the expected format.
    """
    step1_match = re.search(r"Step 1:(.*?)(?=Step 2:|$)", raw, flags=re.S)
    if not step1_match:
        return None, REJECT_UNPARSED_ATTRIBUTES
    step1_text = step1_match.group(1)
    values = [v.strip() for v in re.findall(r"\(\d+\)\s*([^()]*?)(?=\(\d+\)|$)",
                                            step1_text, flags=re.S)]
    values = [v for v in values if v]
    if len(values) != n_attributes:
        return None, REJECT_UNPARSED_ATTRIBUTES
    step2_match = re.search(r"Step 2:(.*)", raw, flags=re.S)
    if not step2_match or not step2_match.group(1).strip():
        return None, REJECT_MISSING_DESCRIPTION
    return (values, step2_match.group(1).strip()), None


def _tokens(text: str) -> list[str]:
    return text.lower().split()


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def rouge_l_f(candidate: str, reference: str) -> float:
    """Token-level LCS F-measure with equal precision/recall weight.

    Equivalent to 2*LCS / (len(candidate) + len(reference)); empty inputs
    score 0.
    """
    a = _tokens(candidate)
    b = _tokens(reference)
    if not a or not b:
        return 0.0
    lcs = _lcs_length(a, b)
    return 2.0 * lcs / (len(a) + len(b))


def dedup_filter(step2_description: str, accepted_pool: list[str]) -> tuple[bool, float]:
    """Accept unless similarity to some accepted description exceeds 0.8.

    Returns (accepted, max_similarity). The threshold is strict: exactly
    0.8 still passes.
    """
    best = 0.0
    for existing in accepted_pool:
        best = max(best, rouge_l_f(step2_description, existing))
        if best > ROUGE_DEDUP_THRESHOLD:
            return False, best
    return True, best


class OfflineTemplateGenerator:
    """Deterministic stand-in for a remote text generator.

    Reads the testing input back out of the prompt and fills attribute
    values from the catalog, keyed by a digest of (seed, prompt) so reruns
    are bit-identical.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def generate(self, prompt: str) -> str:
        match = re.search(
            r'Testing Input: The given house type is "(.*?)\." '
            r'The feature list is: "(.*?)\."', prompt, flags=re.S)
        if not match:
            return "unusable prompt"
        scene_type = match.group(1)
        names = [n.strip() for n in re.findall(r"\(\d+\)\s*([^()]+?)(?=\(\d+\)|$)",
                                               match.group(2))]
        digest = hashlib.sha256(f"{self.seed}:{prompt}".encode("utf-8")).hexdigest()
        rng = random.Random(int(digest[:16], 16))
        values = [rng.choice(ATTRIBUTES.get(name, ("plain",))) for name in names]
        step1 = " ".join(f"({i + 1}) {v}" for i, v in enumerate(values))
        step2 = f"A {scene_type} with " + ", ".join(
            f"{v} {n.lower()}" for n, v in zip(names, values))
        return f"Step 1: {step1}\n Step 2: {step2}"


class HttpTextGenerator:
    """Remote text-generation client configured via environment variables.

    ``GRIDNAV_TEXT_ENDPOINT`` is the POST URL, ``GRIDNAV_TEXT_MODEL`` the
    model identifier, and ``GRIDNAV_TEXT_TOKEN`` an optional bearer token.
    The endpoint receives {"model": ..., "prompt": ...} and must answer
    JSON with a "text" field.
    """

    def __init__(self, session=None, timeout: float = 30.0):
        endpoint = os.environ.get(ENV_ENDPOINT)
        if not endpoint:
            raise RuntimeError(f"{ENV_ENDPOINT} is not set")
        self.endpoint = endpoint
        self.model = os.environ.get(ENV_MODEL, "default")
        self.token = os.environ.get(ENV_TOKEN)
        self.timeout = timeout
        if session is None:
            import requests
            session = requests.Session()
        self.session = session

    def generate(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        response = self.session.post(
            self.endpoint, json={"model": self.model, "prompt": prompt},
            headers=headers, timeout=self.timeout)
        response.raise_for_status()
        return response.json()["text"]


def generate_descriptions(n: int, seed: int, generator=None, *,
                          max_attempts: int | None = None) -> list[DescriptionRecord]:
    """Run the full sample -> generate -> parse -> dedup pipeline.

    Produces records until ``n`` are accepted or the attempt budget runs
    out; rejected records are kept with their single rejection reason.
    """
    if generator is None:
        generator = OfflineTemplateGenerator(seed)
    if max_attempts is None:
        max_attempts = max(20, n * 20)
    rng = random.Random(seed)
    records: list[DescriptionRecord] = []
    accepted_pool: list[str] = []
    attempts = 0
    while sum(r.accepted for r in records) < n and attempts < max_attempts:
        attempts += 1
        sample = sample_prompt(rng.randrange(2 ** 32))
        raw = generator.generate(sample.prompt)
        parsed, reason = parse_output(raw, len(sample.attributes))
        if parsed is None:
            records.append(DescriptionRecord(
                scene_type=sample.scene_type,
                sampled_attributes=tuple((a, None) for a in sample.attributes),
                step1_text=None, step2_description=None,
                accepted=False, rejection_reason=reason))
            continue
        values, description = parsed
        ok, _ = dedup_filter(description, accepted_pool)
        if not ok:
            records.append(DescriptionRecord(
                scene_type=sample.scene_type,
                sampled_attributes=tuple(zip(sample.attributes, values)),
                step1_text=" ".join(values), step2_description=description,
                accepted=False, rejection_reason=REJECT_DUPLICATE))
            continue
        accepted_pool.append(description)
        records.append(DescriptionRecord(
            scene_type=sample.scene_type,
            sampled_attributes=tuple(zip(sample.attributes, values)),
            step1_text=" ".join(values), step2_description=description,
            accepted=True))
    return records


def write_descriptions(path, records: list[DescriptionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), separators=(",", ":")))
            fh.write("\n")
