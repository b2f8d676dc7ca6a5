"""Pydantic models for every document the command-line frontend reads or writes."""
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator


class Document(BaseModel):
    """Base for file documents: unknown keys are rejected."""
    model_config = ConfigDict(extra="forbid")


class ParamsDocument(Document):
    """Public parameters (field elements as minimal lowercase hex)."""
    p: str
    hash: str
    mode: str
    L: int = Field(ge=1)
    u: int = Field(ge=1)
    v: int = Field(ge=1)
    k_max: int = Field(ge=1)
    l_max: int = Field(ge=1)
    g: Optional[str] = None
    secret_offset: int = Field(default=0, ge=0)
    nonce: Optional[str] = None


class ParticipantEntry(Document):
    index: int = Field(ge=1)
    id: str
    active: bool = True


class SetEntry(Document):
    index: int = Field(ge=1)
    members: List[int]


class SecretEntry(Document):
    index: int = Field(ge=1)
    active: bool = True
    sets: List[SetEntry] = Field(default_factory=list)
    retired: List[int] = Field(default_factory=list)


class MaskEntry(Document):
    secret: int
    set: int
    participant: int
    value: str


class CommitmentEntry(Document):
    secret: int
    set: int
    participant: int
    mode: str
    payload: str


class SecretCommitmentEntry(Document):
    secret: int
    mode: str
    payload: str


class BulletinFile(Document):
    """The public bulletin board at one version."""
    version: int = Field(ge=1)
    params: ParamsDocument
    participants: List[ParticipantEntry]
    structure: List[SecretEntry]
    masks: List[MaskEntry]
    participant_commitments: List[CommitmentEntry]
    secret_commitments: List[SecretCommitmentEntry]


class ShareFile(Document):
    """A participant's long-term share, handed over out of band."""
    participant: int = Field(ge=1)
    share: str
    scheme: str


class PseudoShareDocument(Document):
    """What a participant sends to the combiner."""
    participant: int = Field(ge=1)
    secret_index: int = Field(ge=1)
    set_index: int = Field(ge=1)
    value: str
    scheme: str


class ParticipantRecord(Document):
    index: int = Field(ge=1)
    id: str
    share: str
    active: bool = True


class SecretValue(Document):
    index: int = Field(ge=1)
    value: str


class PolynomialEntry(Document):
    secret: int
    set: int
    coefficients: List[str]


class DealerStateFile(Document):
    """The dealer's private state; the bulletin is recomputed from it."""
    version: int = Field(ge=1)
    params: ParamsDocument
    participants: List[ParticipantRecord]
    structure: List[SecretEntry]
    secrets: List[SecretValue]
    polynomials: List[PolynomialEntry]
    seed: Optional[int] = None


class JournalRecord(Document):
    """
    One bulletin delta: entries upserted or removed per section.

    Section keys are "i" (structure, secret_commitments), "j" (participants)
    or "i/q/j" (masks, participant_commitments).
    """
    version: int = Field(ge=1)
    operation: str
    detail: Dict[str, Any] = Field(default_factory=dict)
    params: Optional[ParamsDocument] = None
    upserts: Dict[str, Dict[str, Dict[str, Any]]] = Field(default_factory=dict)
    removals: Dict[str, List[str]] = Field(default_factory=dict)


class CapacityConfig(Document):
    secrets: Optional[int] = Field(default=None, ge=1)
    sets: Optional[int] = Field(default=None, ge=1)
    reissues: Optional[int] = Field(default=None, ge=0)


class SchemeConfigFile(Document):
    """Dealer setup input."""
    secrets: List[int] = Field(min_length=1)
    access_structure: List[List[List[int]]] = Field(min_length=1)
    participants: int = Field(ge=1)
    prime: Optional[Union[int, str]] = None
    prime_bits: Optional[int] = Field(default=None, ge=3)
    hash: Optional[str] = None
    mode: Optional[str] = None
    generator: Optional[int] = None
    capacities: CapacityConfig = Field(default_factory=CapacityConfig)
    secret_offset: int = Field(default=0, ge=0)
    shares: Dict[int, int] = Field(default_factory=dict)
    ids: Dict[int, int] = Field(default_factory=dict)

    @field_validator("prime")
    @classmethod
    def parse_prime(cls, value):
        """Accept a decimal integer or a "0x"-prefixed hex string."""
        if isinstance(value, str):
            text = value.strip().lower()
            try:
                return int(text, 16) if text.startswith("0x") else int(text)
            except ValueError as e:
                raise ValueError(f"prime must be an integer, got {value!r}") from e
        return value
