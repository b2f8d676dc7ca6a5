"""
Dealer, participant and combiner roles of the multi-secret sharing scheme.

Workflow:
1. Dealer: pick p, ids and distinct shares; sample one polynomial per
   (secret, qualified set); publish masks M = f(ID) - U, commitments N = c(U)
   and secret commitments S = c(s).
2. Participant: derive the pseudo-share U = h(x || i || q) for the set it joins.
3. Combiner: check every U against N, then interpolate the points
   (ID, U + M) at zero.
4. Participant: check the revealed secret against S.

All public values live in an immutable ``Bulletin``; the dealer's private
material lives in ``SchemeState`` and the bulletin is always recomputable from it.
"""
import logging
import random
import secrets as _secrets
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from src.commit import (
    HASH_MODE,
    MODES,
    CommitParams,
    Commitment,
    EncodingParams,
    PseudoShare,
    check_hash_algorithm,
    commit,
    derive_pseudo_share,
    find_generator,
    is_generator,
    pseudo_share_bias,
    verify_commitment,
)
from src.corefield import (
    FieldElement,
    Polynomial,
    Prime,
    lagrange_at_zero,
    poly_eval,
    random_element,
    sample_polynomial,
)
from src.errors import (
    CapacityExceeded,
    DuplicateId,
    DuplicateShare,
    FieldExhausted,
    IncompleteSet,
    MissingGenerator,
    NotAMember,
    ParameterError,
    SecretOutOfRange,
    StructureInvalid,
    UnknownSecretIndex,
    UnknownSet,
    UnknownTriple,
    VerificationFailed,
)

logger = logging.getLogger(__name__)

# (secret index i, set index q, participant index j), all 1-based
Triple = Tuple[int, int, int]

# Full replacements of a secret at l_max sets that the set-index width leaves room for.
REISSUE_BUDGET = 31

NONCE_BITS = 128

# Hash-to-field bias above this is logged at setup.
BIAS_WARNING = 2 ** -32


@dataclass(frozen=True)
class Participant:
    index: int
    id: FieldElement
    share: FieldElement
    active: bool = True


@dataclass(frozen=True)
class SecretStructure:
    """Γ_i: the active qualified sets of one secret, keyed by set index q."""
    sets: Mapping[int, Tuple[int, ...]]
    retired: Tuple[int, ...] = ()
    active: bool = True

    @property
    def next_set_index(self) -> int:
        # Set indices are never reused, retired ones included.
        return max([*self.sets, *self.retired], default=0) + 1

    def find(self, members: Sequence[int]) -> Optional[int]:
        wanted = tuple(sorted(members))
        for q, existing in self.sets.items():
            if existing == wanted:
                return q
        return None


@dataclass(frozen=True)
class AccessStructure:
    """Per-secret access structures over participant indices."""
    secrets: Mapping[int, SecretStructure]

    @classmethod
    def from_lists(cls, structure: Sequence[Sequence[Sequence[int]]]) -> "AccessStructure":
        """Build from ``[[set, set, ...] per secret]``; indices are assigned 1, 2, ... in order."""
        return cls(secrets={
            i: SecretStructure(sets={q: tuple(sorted(members)) for q, members in enumerate(gamma, 1)})
            for i, gamma in enumerate(structure, 1)
        })

    @property
    def active_secrets(self) -> List[int]:
        return sorted(i for i, entry in self.secrets.items() if entry.active)

    @property
    def next_secret_index(self) -> int:
        return max(self.secrets, default=0) + 1

    @property
    def max_sets(self) -> int:
        """l = max_i l_i over active secrets."""
        return max((len(self.secrets[i].sets) for i in self.active_secrets), default=0)

    def secret(self, i: int) -> SecretStructure:
        entry = self.secrets.get(i)
        if entry is None or not entry.active:
            raise UnknownSecretIndex(f"secret {i} is not active")
        return entry

    def qualified_set(self, i: int, q: int) -> Tuple[int, ...]:
        entry = self.secrets.get(i)
        if entry is None or not entry.active or q not in entry.sets:
            raise UnknownSet(f"no active qualified set (i={i}, q={q})")
        return entry.sets[q]

    def active_sets(self) -> Iterator[Tuple[int, int, Tuple[int, ...]]]:
        for i in self.active_secrets:
            for q in sorted(self.secrets[i].sets):
                yield i, q, self.secrets[i].sets[q]

    def triples(self) -> Iterator[Triple]:
        for i, q, members in self.active_sets():
            for j in members:
                yield i, q, j

    def sets_containing(self, j: int) -> Dict[int, List[int]]:
        found: Dict[int, List[int]] = {}
        for i, q, members in self.active_sets():
            if j in members:
                found.setdefault(i, []).append(q)
        return found

    def with_secret(self, i: int, entry: SecretStructure) -> "AccessStructure":
        return AccessStructure(secrets={**self.secrets, i: entry})


@dataclass(frozen=True)
class PublicParameters:
    """Everything the dealer makes public besides the per-entry values."""
    p: Prime
    hash_id: str
    mode: str
    encoding: EncodingParams
    k_max: int
    l_max: int
    ids: Mapping[int, FieldElement]
    structure: AccessStructure
    generator: Optional[int] = None
    secret_offset: int = 0
    retired_participants: FrozenSet[int] = frozenset()
    # Random per setup, so two schemes built from one config stay distinguishable.
    nonce: Optional[str] = None

    @property
    def commit_params(self) -> CommitParams:
        return CommitParams(p=self.p, hash_id=self.hash_id, generator=self.generator)


@dataclass(frozen=True)
class Bulletin:
    version: int
    params: PublicParameters
    masks: Mapping[Triple, FieldElement]
    participant_commitments: Mapping[Triple, Commitment]
    secret_commitments: Mapping[int, Commitment]


@dataclass(frozen=True)
class SchemeState:
    """The dealer's private state; ``bulletin`` is its publication."""
    secrets: Mapping[int, FieldElement]
    polynomials: Mapping[Tuple[int, int], Polynomial]
    participants: Mapping[int, Participant]
    bulletin: Bulletin
    seed: Optional[int] = None

    @property
    def params(self) -> PublicParameters:
        return self.bulletin.params

    @property
    def version(self) -> int:
        return self.bulletin.version

    @property
    def shares(self) -> Dict[int, FieldElement]:
        return {j: participant.share for j, participant in self.participants.items()}


@dataclass(frozen=True)
class SetupOptions:
    """
    Dealer configuration.

    ``supplied_shares`` is the participant-chosen variant: participants propose
    their own shares and the dealer rejects duplicates. ``ids`` pins the public
    identifiers (random otherwise). Capacities default to
    ``capacity_factor`` times the current k and l. ``reissue_budget`` sizes the
    set-index width: each replacement of a secret moves its sets to fresh indices.
    """
    hash_id: str = "sha256"
    mode: str = HASH_MODE
    generator: Optional[int] = None
    k_max: Optional[int] = None
    l_max: Optional[int] = None
    capacity_factor: int = 2
    reissue_budget: int = REISSUE_BUDGET
    secret_offset: int = 0
    supplied_shares: Mapping[int, int] = field(default_factory=dict)
    ids: Mapping[int, int] = field(default_factory=dict)
    seed: Optional[int] = None


def default_rng() -> random.Random:
    return _secrets.SystemRandom()


def encode_secret(secret: int, params: PublicParameters) -> FieldElement:
    """Shift a caller secret by the published offset into Z_p."""
    value = secret + params.secret_offset
    if not params.p.contains(value):
        raise SecretOutOfRange(
            f"secret {secret} (offset {params.secret_offset}) must map into [0, {params.p.p})"
        )
    return value


def decode_secret(value: FieldElement, params: PublicParameters) -> int:
    return value - params.secret_offset


def validate_sets(
    gamma: Sequence[Sequence[int]],
    eligible: Sequence[int],
    label: str = "secret",
) -> List[Tuple[int, ...]]:
    """
    Normalize and check one access structure Γ_i.

    Raises:
        StructureInvalid: a set is too small, repeats or names unknown members,
            or the number of sets is out of bounds
    """
    n = len(eligible)
    allowed = set(eligible)
    normalized: List[Tuple[int, ...]] = []
    if not gamma:
        raise StructureInvalid(f"{label} needs at least one qualified set")
    if len(gamma) > 2 ** n - (n + 1):
        raise StructureInvalid(f"{label} lists {len(gamma)} qualified sets; at most {2 ** n - (n + 1)} exist")
    for members in gamma:
        members = tuple(members)
        if len(members) < 2:
            raise StructureInvalid(f"every qualified set needs at least 2 members, {label} has {list(members)}")
        if len(set(members)) != len(members):
            raise StructureInvalid(f"qualified set {list(members)} of {label} repeats a member")
        unknown = sorted(set(members) - allowed)
        if unknown:
            raise StructureInvalid(f"qualified set {list(members)} of {label} names unknown participants {unknown}")
        key = tuple(sorted(members))
        if key in normalized:
            raise StructureInvalid(f"qualified set {list(key)} appears twice in {label}")
        normalized.append(key)
    return normalized


def draw_distinct(
    count: int,
    taken: Sequence[int],
    draw,
    space: int,
    what: str,
) -> List[int]:
    """Draw ``count`` values from ``draw()`` avoiding ``taken`` and each other."""
    if len(set(taken)) + count > space:
        raise FieldExhausted(f"not enough distinct {what} left in a space of {space}")
    seen = set(taken)
    drawn = []
    while len(drawn) < count:
        value = draw()
        if value not in seen:
            seen.add(value)
            drawn.append(value)
    return drawn


def publish(
    params: PublicParameters,
    secrets: Mapping[int, FieldElement],
    polynomials: Mapping[Tuple[int, int], Polynomial],
    participants: Mapping[int, Participant],
    version: int,
) -> Bulletin:
    """Recompute every published value from private state."""
    p = params.p
    commit_params = params.commit_params
    masks: Dict[Triple, FieldElement] = {}
    commitments: Dict[Triple, Commitment] = {}

    for i, q, members in params.structure.active_sets():
        f = polynomials[(i, q)]
        for j in members:
            member = participants[j]
            u = derive_pseudo_share(member.share, i, q, params.encoding, p, params.hash_id)
            b = poly_eval(f, member.id, p)
            masks[(i, q, j)] = (b - u) % p.p
            commitments[(i, q, j)] = commit(u, params.mode, commit_params)

    secret_commitments = {
        i: commit(secrets[i], params.mode, commit_params)
        for i in params.structure.active_secrets
    }
    return Bulletin(
        version=version,
        params=params,
        masks=masks,
        participant_commitments=commitments,
        secret_commitments=secret_commitments,
    )


def resolve_generator(p: Prime, mode: str, generator: Optional[int]) -> Optional[int]:
    if generator is not None:
        if not is_generator(generator, p):
            raise ParameterError(f"{generator} is not a primitive element of Z_p")
        return generator
    if mode == HASH_MODE:
        return None
    try:
        return find_generator(p)
    except ValueError as e:
        raise MissingGenerator("could not find a primitive element of Z_p") from e


def dealer_setup(
    secrets: Sequence[int],
    structure: Union[AccessStructure, Sequence[Sequence[Sequence[int]]]],
    n: int,
    p: Prime,
    options: Optional[SetupOptions] = None,
    rng: Optional[random.Random] = None,
) -> Tuple[SchemeState, Bulletin, Dict[int, FieldElement]]:
    """
    Run the dealer phase: initialization, pseudo-share generation and
    publication of the verification values.

    Returns:
        (state, bulletin, shares) where ``shares`` maps participant index to x_j;
        handing each x_j to its participant is the caller's secure channel.

    Raises:
        SecretOutOfRange, StructureInvalid, CapacityExceeded, DuplicateShare,
        DuplicateId, UnknownHashAlgorithm, MissingGenerator
    """
    options = options or SetupOptions()
    rng = rng or default_rng()

    if options.mode not in MODES:
        raise ParameterError(f"unknown verification mode {options.mode!r}")
    if options.secret_offset < 0:
        raise ParameterError("secret offset must be non-negative")
    if options.reissue_budget < 0:
        raise ParameterError("reissue budget must be non-negative")
    if not 1 <= n < p.p:
        raise ParameterError(f"participant count must satisfy 1 <= n < p, got n={n}")
    check_hash_algorithm(options.hash_id, p.bit_length)

    if not isinstance(structure, AccessStructure):
        structure = AccessStructure.from_lists(structure)
    if len(secrets) != len(structure.secrets):
        raise StructureInvalid(
            f"{len(secrets)} secrets but {len(structure.secrets)} access structures"
        )
    registry = list(range(1, n + 1))
    for i in structure.active_secrets:
        validate_sets(list(structure.secrets[i].sets.values()), registry, f"secret {i}")

    k = len(secrets)
    l = structure.max_sets
    k_max = options.k_max or options.capacity_factor * k
    l_max = options.l_max or options.capacity_factor * l
    if k_max < k or l_max < l:
        raise CapacityExceeded(f"capacities (k_max={k_max}, l_max={l_max}) below current (k={k}, l={l})")

    generator = resolve_generator(p, options.mode, options.generator)

    ids = _assign_ids(n, p, options.ids, rng)
    shares = _assign_shares(n, p, options.supplied_shares, rng)
    participants = {j: Participant(index=j, id=ids[j], share=shares[j]) for j in registry}
    nonce = format(rng.getrandbits(NONCE_BITS), f"0{NONCE_BITS // 4}x")

    bias = pseudo_share_bias(p)
    if bias > BIAS_WARNING:
        logger.warning("pseudo-shares over a %d-bit prime are %.3g away from uniform", p.bit_length, bias)

    params = PublicParameters(
        p=p,
        hash_id=options.hash_id,
        mode=options.mode,
        encoding=EncodingParams.for_capacities(p, k_max, l_max, options.reissue_budget),
        k_max=k_max,
        l_max=l_max,
        ids=ids,
        structure=structure,
        generator=generator,
        secret_offset=options.secret_offset,
        nonce=nonce,
    )
    field_secrets = {i: encode_secret(s, params) for i, s in enumerate(secrets, 1)}

    polynomials = {
        (i, q): sample_polynomial(field_secrets[i], len(members) - 1, p, rng)
        for i, q, members in structure.active_sets()
    }

    bulletin = publish(params, field_secrets, polynomials, participants, version=1)
    state = SchemeState(
        secrets=field_secrets,
        polynomials=polynomials,
        participants=participants,
        bulletin=bulletin,
        seed=options.seed,
    )
    logger.info(
        "dealer setup: k=%d secrets, n=%d participants, %d-bit prime, mode=%s, %d masks",
        k, n, p.bit_length, options.mode, len(bulletin.masks),
    )
    return state, bulletin, dict(shares)


def _assign_ids(n: int, p: Prime, supplied: Mapping[int, int], rng: random.Random) -> Dict[int, int]:
    ids: Dict[int, int] = {}
    for j, value in supplied.items():
        if not 1 <= j <= n:
            raise ParameterError(f"identifier supplied for unknown participant {j}")
        if not 1 <= value < p.p:
            raise ParameterError(f"identifier of participant {j} must lie in Z_p^*")
        if value in ids.values():
            raise DuplicateId(f"identifier {value} supplied twice")
        ids[j] = value
    missing = [j for j in range(1, n + 1) if j not in ids]
    drawn = draw_distinct(
        len(missing), list(ids.values()), lambda: random_element(p, rng, nonzero=True), p.p - 1, "identifiers"
    )
    ids.update(zip(missing, drawn))
    return dict(sorted(ids.items()))


def _assign_shares(n: int, p: Prime, supplied: Mapping[int, int], rng: random.Random) -> Dict[int, int]:
    shares: Dict[int, int] = {}
    holders: Dict[int, List[int]] = {}
    for j, value in supplied.items():
        if not 1 <= j <= n:
            raise ParameterError(f"share supplied for unknown participant {j}")
        if not p.contains(value):
            raise ParameterError(f"share of participant {j} must lie in [0, p)")
        holders.setdefault(value, []).append(j)
        shares[j] = value
    clashes = sorted(j for group in holders.values() if len(group) > 1 for j in group)
    if clashes:
        raise DuplicateShare(f"participants {clashes} supplied equal shares and must choose again", clashes)
    missing = [j for j in range(1, n + 1) if j not in shares]
    drawn = draw_distinct(
        len(missing), list(shares.values()), lambda: random_element(p, rng), p.p, "shares"
    )
    shares.update(zip(missing, drawn))
    return dict(sorted(shares.items()))


def participant_pseudo_share(
    x: FieldElement,
    i: int,
    q: int,
    public_params: PublicParameters,
    participant: int,
) -> PseudoShare:
    """
    Participant phase I: derive the pseudo-share for qualified set (i, q).

    Raises:
        NotAMember: ``participant`` is not in the set
        UnknownSet, IndexOverflow
    """
    members = public_params.structure.qualified_set(i, q)
    if participant not in members:
        raise NotAMember(f"participant {participant} is not a member of qualified set (i={i}, q={q})")
    value = derive_pseudo_share(x, i, q, public_params.encoding, public_params.p, public_params.hash_id)
    return PseudoShare(value=value, secret_index=i, set_index=q, participant=participant)


def combiner_verify_participant(claimed: PseudoShare, bulletin: Bulletin) -> bool:
    """
    Check a pseudo-share against its published commitment N.

    Raises:
        UnknownTriple: nothing is published for (i, q, participant)
    """
    key = (claimed.secret_index, claimed.set_index, claimed.participant)
    commitment = bulletin.participant_commitments.get(key)
    if commitment is None:
        raise UnknownTriple(f"no commitment published for (i, q, participant) = {key}")
    ok = verify_commitment(claimed.value, commitment, bulletin.params.commit_params)
    if not ok:
        logger.warning("pseudo-share of participant %d failed verification for (i=%d, q=%d)",
                       claimed.participant, claimed.secret_index, claimed.set_index)
    return ok


def combiner_verify_set(
    i: int,
    q: int,
    pseudo_shares: Mapping[int, PseudoShare],
    bulletin: Bulletin,
) -> Dict[int, bool]:
    """
    Verdict per submitted participant of set (i, q).

    A document labelled for a different (i, q, participant) than the slot it
    was submitted under counts as a failure.
    """
    members = bulletin.params.structure.qualified_set(i, q)
    verdicts: Dict[int, bool] = {}
    for j in sorted(pseudo_shares):
        if j not in members:
            raise NotAMember(f"participant {j} is not a member of qualified set (i={i}, q={q})")
        claimed = pseudo_shares[j]
        if (claimed.secret_index, claimed.set_index, claimed.participant) != (i, q, j):
            logger.warning("participant %d submitted a pseudo-share labelled for another set", j)
            verdicts[j] = False
            continue
        verdicts[j] = combiner_verify_participant(claimed, bulletin)
    return verdicts


def combiner_reconstruct(
    i: int,
    q: int,
    pseudo_shares: Mapping[int, PseudoShare],
    bulletin: Bulletin,
    verify: bool = True,
) -> FieldElement:
    """
    Combiner phase: verify, then interpolate (ID_b, U_b + M_b) at zero.

    Qualified sets are exact; there is no threshold fallback. ``verify=False``
    skips the commitment checks, for callers that already ran
    ``combiner_verify_set`` and for adversarial tests.

    Raises:
        UnknownSet, NotAMember
        IncompleteSet: a member's pseudo-share is missing
        VerificationFailed: at least one pseudo-share does not open its commitment
    """
    params = bulletin.params
    members = params.structure.qualified_set(i, q)
    outsiders = sorted(set(pseudo_shares) - set(members))
    if outsiders:
        raise NotAMember(f"participants {outsiders} are not members of qualified set (i={i}, q={q})")
    missing = sorted(set(members) - set(pseudo_shares))
    if missing:
        raise IncompleteSet(f"qualified set (i={i}, q={q}) is missing participants {missing}", missing)

    if verify:
        verdicts = combiner_verify_set(i, q, pseudo_shares, bulletin)
        failed = [j for j, ok in verdicts.items() if not ok]
        if failed:
            raise VerificationFailed(f"participants {failed} failed verification", failed)

    p = params.p
    points = [
        (params.ids[j], (pseudo_shares[j].value + bulletin.masks[(i, q, j)]) % p.p)
        for j in members
    ]
    return lagrange_at_zero(points, p)


def participant_verify_secret(s_claimed: FieldElement, i: int, bulletin: Bulletin) -> bool:
    """
    Participant phase II: check the combiner's answer against S_i.

    Raises:
        UnknownSecretIndex
    """
    commitment = bulletin.secret_commitments.get(i)
    if commitment is None:
        raise UnknownSecretIndex(f"secret {i} is not active")
    ok = verify_commitment(s_claimed, commitment, bulletin.params.commit_params)
    if not ok:
        logger.warning("revealed value for secret %d does not match its commitment", i)
    return ok


def audit_bulletin(state: SchemeState) -> bool:
    """True iff the published bulletin is exactly the publication of ``state``."""
    params = state.params
    for i, q, members in params.structure.active_sets():
        f = state.polynomials.get((i, q))
        if f is None or f.constant != state.secrets.get(i) or f.degree != len(members) - 1:
            return False
    expected = publish(params, state.secrets, state.polynomials, state.participants, state.version)
    return expected == state.bulletin
