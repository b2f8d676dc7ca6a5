"""
Directory-backed bulletin board.

Layout of a board directory:

    bulletin.json               current bulletin (canonical JSON)
    history/bulletin-NNNNNN.json  every published version, never rewritten
    journal.jsonl               one delta record per version
    shares/P<j>.share           share files (stand-in for the secure channel)
    dealer.state                dealer private state (exclusive, locked)

Canonical form: keys sorted, two-space indentation, field elements as minimal
lowercase hex, entries ordered by (secret, set, participant).
"""
import fcntl
import hashlib
import json
import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from pydantic import BaseModel, ValidationError

from src.commit import HASH_MODE, Commitment, EncodingParams
from src.corefield import Polynomial, from_hex, to_hex, validate_prime
from src.errors import MssgasError, SerializationError
from src.models import (
    BulletinFile,
    CommitmentEntry,
    DealerStateFile,
    JournalRecord,
    MaskEntry,
    ParamsDocument,
    ParticipantEntry,
    ParticipantRecord,
    PolynomialEntry,
    SecretCommitmentEntry,
    SecretEntry,
    SecretValue,
    SetEntry,
    ShareFile,
)
from src.scheme import (
    AccessStructure,
    Bulletin,
    Participant,
    PublicParameters,
    SchemeState,
    SecretStructure,
    publish,
)

logger = logging.getLogger(__name__)

SECTIONS = ("participants", "structure", "masks", "participant_commitments", "secret_commitments")


def emit(doc: BaseModel) -> str:
    """Canonical text of a document."""
    return json.dumps(doc.model_dump(mode="json", exclude_none=True), sort_keys=True, indent=2) + "\n"


def parse(model, text: str):
    """Parse ``text`` into ``model``, turning every failure into SerializationError."""
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        raise SerializationError(f"invalid {model.__name__}: {e}") from e


# Public parameters and structure

def params_to_document(params: PublicParameters) -> ParamsDocument:
    return ParamsDocument(
        p=to_hex(params.p.p),
        hash=params.hash_id,
        mode=params.mode,
        L=params.encoding.L,
        u=params.encoding.u,
        v=params.encoding.v,
        k_max=params.k_max,
        l_max=params.l_max,
        g=None if params.generator is None else to_hex(params.generator),
        secret_offset=params.secret_offset,
        nonce=params.nonce,
    )


def structure_to_entries(structure: AccessStructure) -> List[SecretEntry]:
    return [
        SecretEntry(
            index=i,
            active=entry.active,
            sets=[SetEntry(index=q, members=sorted(entry.sets[q])) for q in sorted(entry.sets)],
            retired=sorted(entry.retired),
        )
        for i, entry in sorted(structure.secrets.items())
    ]


def structure_from_entries(entries: Iterable[SecretEntry]) -> AccessStructure:
    return AccessStructure(secrets={
        entry.index: SecretStructure(
            sets={s.index: tuple(sorted(s.members)) for s in entry.sets},
            retired=tuple(sorted(entry.retired)),
            active=entry.active,
        )
        for entry in entries
    })


def params_from_document(
    doc: ParamsDocument,
    ids: Dict[int, int],
    structure: AccessStructure,
    retired_participants: Iterable[int] = (),
) -> PublicParameters:
    try:
        p = validate_prime(from_hex(doc.p))
    except MssgasError as e:
        raise SerializationError(f"bulletin prime is invalid: {e}") from e
    encoding = EncodingParams(L=doc.L, u=doc.u, v=doc.v)
    if encoding.L != p.bit_length:
        raise SerializationError(f"L={doc.L} does not match the {p.bit_length}-bit prime")
    return PublicParameters(
        p=p,
        hash_id=doc.hash,
        mode=doc.mode,
        encoding=encoding,
        k_max=doc.k_max,
        l_max=doc.l_max,
        ids=ids,
        structure=structure,
        generator=None if doc.g is None else from_hex(doc.g),
        secret_offset=doc.secret_offset,
        retired_participants=frozenset(retired_participants),
        nonce=doc.nonce,
    )


def scheme_identifier(params: PublicParameters) -> str:
    """Digest of the parameters that never change under renewal, setup nonce included."""
    core = params_to_document(params).model_dump(mode="json", exclude_none=True)
    text = json.dumps(core, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# Bulletin

def _commitment_from(mode: str, payload: str) -> Commitment:
    if mode == HASH_MODE:
        try:
            return Commitment(mode=mode, payload=bytes.fromhex(payload))
        except ValueError as e:
            raise SerializationError(f"commitment payload is not hex: {payload!r}") from e
    return Commitment(mode=mode, payload=from_hex(payload))


def bulletin_to_document(bulletin: Bulletin) -> BulletinFile:
    params = bulletin.params
    return BulletinFile(
        version=bulletin.version,
        params=params_to_document(params),
        participants=[
            ParticipantEntry(index=j, id=to_hex(ident), active=j not in params.retired_participants)
            for j, ident in sorted(params.ids.items())
        ],
        structure=structure_to_entries(params.structure),
        masks=[
            MaskEntry(secret=i, set=q, participant=j, value=to_hex(value))
            for (i, q, j), value in sorted(bulletin.masks.items())
        ],
        participant_commitments=[
            CommitmentEntry(secret=i, set=q, participant=j, mode=c.mode, payload=c.payload_hex())
            for (i, q, j), c in sorted(bulletin.participant_commitments.items())
        ],
        secret_commitments=[
            SecretCommitmentEntry(secret=i, mode=c.mode, payload=c.payload_hex())
            for i, c in sorted(bulletin.secret_commitments.items())
        ],
    )


def bulletin_from_document(doc: BulletinFile) -> Bulletin:
    params = params_from_document(
        doc.params,
        ids={entry.index: from_hex(entry.id) for entry in doc.participants},
        structure=structure_from_entries(doc.structure),
        retired_participants=[entry.index for entry in doc.participants if not entry.active],
    )
    return Bulletin(
        version=doc.version,
        params=params,
        masks={(m.secret, m.set, m.participant): from_hex(m.value) for m in doc.masks},
        participant_commitments={
            (c.secret, c.set, c.participant): _commitment_from(c.mode, c.payload)
            for c in doc.participant_commitments
        },
        secret_commitments={
            c.secret: _commitment_from(c.mode, c.payload) for c in doc.secret_commitments
        },
    )


# Dealer state

def state_to_document(state: SchemeState) -> DealerStateFile:
    params = state.params
    return DealerStateFile(
        version=state.version,
        params=params_to_document(params),
        participants=[
            ParticipantRecord(index=j, id=to_hex(pt.id), share=to_hex(pt.share), active=pt.active)
            for j, pt in sorted(state.participants.items())
        ],
        structure=structure_to_entries(params.structure),
        secrets=[SecretValue(index=i, value=to_hex(value)) for i, value in sorted(state.secrets.items())],
        polynomials=[
            PolynomialEntry(secret=i, set=q, coefficients=[to_hex(c) for c in f.coefficients])
            for (i, q), f in sorted(state.polynomials.items())
        ],
        seed=state.seed,
    )


def state_from_document(doc: DealerStateFile) -> SchemeState:
    """Rebuild the dealer state; its bulletin is recomputed, not read."""
    participants = {
        record.index: Participant(
            index=record.index,
            id=from_hex(record.id),
            share=from_hex(record.share),
            active=record.active,
        )
        for record in doc.participants
    }
    params = params_from_document(
        doc.params,
        ids={j: pt.id for j, pt in participants.items()},
        structure=structure_from_entries(doc.structure),
        retired_participants=[j for j, pt in participants.items() if not pt.active],
    )
    secrets = {entry.index: from_hex(entry.value) for entry in doc.secrets}
    polynomials = {
        (entry.secret, entry.set): Polynomial(coefficients=tuple(from_hex(c) for c in entry.coefficients))
        for entry in doc.polynomials
    }
    bulletin = publish(params, secrets, polynomials, participants, doc.version)
    return SchemeState(
        secrets=secrets,
        polynomials=polynomials,
        participants=participants,
        bulletin=bulletin,
        seed=doc.seed,
    )


# Journal

def _sort_key(key: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in key.split("/"))


def _sections(doc: BulletinFile) -> Dict[str, Dict[str, dict]]:
    data = doc.model_dump(mode="json", exclude_none=True)
    return {
        "participants": {str(e["index"]): e for e in data["participants"]},
        "structure": {str(e["index"]): e for e in data["structure"]},
        "masks": {f"{e['secret']}/{e['set']}/{e['participant']}": e for e in data["masks"]},
        "participant_commitments": {
            f"{e['secret']}/{e['set']}/{e['participant']}": e for e in data["participant_commitments"]
        },
        "secret_commitments": {str(e["secret"]): e for e in data["secret_commitments"]},
    }


def diff_bulletins(
    old: Optional[BulletinFile],
    new: BulletinFile,
    operation: str,
    detail: Optional[dict] = None,
) -> JournalRecord:
    """The delta turning ``old`` (or an empty board) into ``new``."""
    old_sections = _sections(old) if old is not None else {name: {} for name in SECTIONS}
    new_sections = _sections(new)
    upserts: Dict[str, Dict[str, dict]] = {}
    removals: Dict[str, List[str]] = {}
    for name in SECTIONS:
        before, after = old_sections[name], new_sections[name]
        changed = {key: value for key, value in after.items() if before.get(key) != value}
        gone = sorted((key for key in before if key not in after), key=_sort_key)
        if changed:
            upserts[name] = changed
        if gone:
            removals[name] = gone
    params_changed = old is None or old.params != new.params
    return JournalRecord(
        version=new.version,
        operation=operation,
        detail=detail or {},
        params=new.params if params_changed else None,
        upserts=upserts,
        removals=removals,
    )


def replay(records: Iterable[JournalRecord]) -> BulletinFile:
    """Fold journal records into the bulletin they describe."""
    sections: Dict[str, Dict[str, dict]] = {name: {} for name in SECTIONS}
    params: Optional[ParamsDocument] = None
    version = 0
    for record in records:
        if record.version != version + 1:
            raise SerializationError(f"journal jumps from version {version} to {record.version}")
        version = record.version
        if record.params is not None:
            params = record.params
        for name, keys in record.removals.items():
            for key in keys:
                sections[name].pop(key, None)
        for name, entries in record.upserts.items():
            sections[name].update(entries)
    if params is None:
        raise SerializationError("journal is empty")
    return BulletinFile.model_validate({
        "version": version,
        "params": params.model_dump(mode="json", exclude_none=True),
        **{
            name: [entries[key] for key in sorted(entries, key=_sort_key)]
            for name, entries in sections.items()
        },
    })


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class BulletinBoard:
    """A directory standing in for the public board and the secure channels."""

    BULLETIN = "bulletin.json"
    JOURNAL = "journal.jsonl"
    HISTORY = "history"
    SHARES = "shares"
    STATE = "dealer.state"

    def __init__(self, directory: Union[str, Path], state_path: Optional[Union[str, Path]] = None):
        """Initialize board."""
        self.directory = Path(directory)
        self.state_path = Path(state_path) if state_path else self.directory / self.STATE

    @property
    def bulletin_path(self) -> Path:
        return self.directory / self.BULLETIN

    @property
    def journal_path(self) -> Path:
        return self.directory / self.JOURNAL

    def share_path(self, j: int) -> Path:
        return self.directory / self.SHARES / f"P{j}.share"

    def history_path(self, version: int) -> Path:
        return self.directory / self.HISTORY / f"bulletin-{version:06d}.json"

    @contextmanager
    def locked(self) -> Iterator[None]:
        """Exclusive advisory lock for dealer-state writers."""
        lock_path = self.state_path.with_name(self.state_path.name + ".lock")
        lock_path.parent.mkdir(parents=True, exist_ok=True)
        with open(lock_path, "w") as handle:
            fcntl.flock(handle, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(handle, fcntl.LOCK_UN)

    def read_bulletin_document(self) -> BulletinFile:
        if not self.bulletin_path.exists():
            raise SerializationError(f"no bulletin found at {self.bulletin_path}")
        return parse(BulletinFile, self.bulletin_path.read_text(encoding="utf-8"))

    def read_bulletin(self) -> Bulletin:
        return bulletin_from_document(self.read_bulletin_document())

    def publish(self, bulletin: Bulletin, operation: str, detail: Optional[dict] = None) -> JournalRecord:
        """Write a new bulletin version and append its delta to the journal."""
        previous = self.read_bulletin_document() if self.bulletin_path.exists() else None
        doc = bulletin_to_document(bulletin)
        if previous is not None and doc.version != previous.version + 1:
            raise SerializationError(
                f"bulletin version {doc.version} does not follow published version {previous.version}"
            )
        record = diff_bulletins(previous, doc, operation, detail)
        text = emit(doc)

        history = self.history_path(doc.version)
        if history.exists():
            raise SerializationError(f"bulletin version {doc.version} was already published")
        _write_atomic(history, text)
        _write_atomic(self.bulletin_path, text)
        line = json.dumps(record.model_dump(mode="json", exclude_none=True), sort_keys=True, separators=(",", ":"))
        with open(self.journal_path, "a", encoding="utf-8") as journal:
            journal.write(line + "\n")
        logger.info("published bulletin v%d (%s)", doc.version, operation)
        return record

    def read_journal(self) -> List[JournalRecord]:
        if not self.journal_path.exists():
            return []
        return [
            parse(JournalRecord, line)
            for line in self.journal_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def replay(self) -> BulletinFile:
        return replay(self.read_journal())

    def write_share(self, j: int, share: int, params: PublicParameters) -> Path:
        doc = ShareFile(participant=j, share=to_hex(share), scheme=scheme_identifier(params))
        path = self.share_path(j)
        _write_atomic(path, emit(doc))
        os.chmod(path, 0o600)
        return path

    @staticmethod
    def read_share(path: Union[str, Path]) -> ShareFile:
        return parse(ShareFile, Path(path).read_text(encoding="utf-8"))

    def write_state(self, state: SchemeState) -> None:
        _write_atomic(self.state_path, emit(state_to_document(state)))
        os.chmod(self.state_path, 0o600)

    def read_state(self) -> SchemeState:
        if not self.state_path.exists():
            raise SerializationError(f"no dealer state found at {self.state_path}")
        return state_from_document(parse(DealerStateFile, self.state_path.read_text(encoding="utf-8")))
