"""
Renewal of a live scheme: secrets, participants and qualified sets can be added
or made inactive without touching any existing participant's share.

Every operation takes the current ``SchemeState`` and returns a new state whose
bulletin carries the next version number; the input state is left untouched.

Replacing a secret retires every active set index of that secret and reissues
the surviving sets under fresh indices. Pseudo-shares are bound to (i, q), so a
fresh q gives every member a new pseudo-share and values revealed to earlier
combiners cannot open the replacement.
"""
import logging
import random
from dataclasses import replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from src.corefield import FieldElement, Polynomial, sample_polynomial
from src.errors import (
    CapacityExceeded,
    DuplicateId,
    DuplicateSet,
    DuplicateShare,
    FieldExhausted,
    MissingReplacement,
    OrphanedSecret,
    ParameterError,
    StructureInvalid,
    UnknownSecretIndex,
)
from src.scheme import (
    Bulletin,
    Participant,
    PublicParameters,
    SchemeState,
    SecretStructure,
    decode_secret,
    default_rng,
    draw_distinct,
    encode_secret,
    publish,
    validate_sets,
)

logger = logging.getLogger(__name__)

Members = Sequence[int]


def _active_participants(state: SchemeState) -> List[int]:
    return sorted(j for j, participant in state.participants.items() if participant.active)


def _commit_state(
    state: SchemeState,
    *,
    params: PublicParameters,
    secrets: Mapping[int, FieldElement],
    polynomials: Mapping[Tuple[int, int], Polynomial],
    participants: Mapping[int, Participant],
) -> Tuple[SchemeState, Bulletin]:
    bulletin = publish(params, secrets, polynomials, participants, state.version + 1)
    new_state = replace(
        state,
        secrets=dict(secrets),
        polynomials=dict(polynomials),
        participants=dict(participants),
        bulletin=bulletin,
    )
    return new_state, bulletin


def _check_set_capacity(params: PublicParameters, i: int, active: int, added: int) -> None:
    """l_max bounds the active sets of a secret; retired indices do not count."""
    if active + added > params.l_max:
        raise CapacityExceeded(
            f"secret {i} would hold {active + added} qualified sets but the capacity is l_max={params.l_max}"
        )


def _check_set_index(params: PublicParameters, i: int, last_q: int) -> None:
    limit = params.encoding.max_set_index
    if last_q > limit:
        raise CapacityExceeded(
            f"secret {i} would need set index {last_q} but {params.encoding.v}-bit set indices stop at {limit}"
        )


def _reissue(
    params: PublicParameters,
    polynomials: Mapping[Tuple[int, int], Polynomial],
    i: int,
    surviving: List[Tuple[int, ...]],
    value: FieldElement,
    rng: random.Random,
) -> Tuple[SecretStructure, Dict[Tuple[int, int], Polynomial]]:
    """Retire all active sets of secret i and reissue ``surviving`` around ``value``."""
    entry = params.structure.secret(i)
    first_q = entry.next_set_index
    _check_set_index(params, i, first_q + len(surviving) - 1)

    polynomials = {key: f for key, f in polynomials.items() if key[0] != i}
    sets = {}
    for q, members in enumerate(surviving, first_q):
        sets[q] = members
        polynomials[(i, q)] = sample_polynomial(value, len(members) - 1, params.p, rng)
    retired = tuple(sorted([*entry.retired, *entry.sets]))
    return SecretStructure(sets=sets, retired=retired, active=True), polynomials


def add_secret(
    state: SchemeState,
    s_new: int,
    gamma_new: Sequence[Members],
    rng: Optional[random.Random] = None,
) -> Tuple[SchemeState, Bulletin]:
    """
    Share a new secret under its own access structure.

    Raises:
        CapacityExceeded: k_max secrets already active, too many sets, or no
            secret index left in the u-bit width
        StructureInvalid, SecretOutOfRange
    """
    rng = rng or default_rng()
    params = state.params
    active = len(params.structure.active_secrets)
    if active + 1 > params.k_max:
        raise CapacityExceeded(f"{active} active secrets already fill the capacity k_max={params.k_max}")
    i = params.structure.next_secret_index
    if i > params.encoding.max_secret_index:
        raise CapacityExceeded(
            f"secret index {i} does not fit in {params.encoding.u} bits; deleted secrets keep their indices"
        )
    sets = validate_sets(gamma_new, _active_participants(state), f"secret {i}")
    _check_set_capacity(params, i, 0, len(sets))
    value = encode_secret(s_new, params)

    polynomials = dict(state.polynomials)
    for q, members in enumerate(sets, 1):
        polynomials[(i, q)] = sample_polynomial(value, len(members) - 1, params.p, rng)
    structure = params.structure.with_secret(i, SecretStructure(sets=dict(enumerate(sets, 1))))

    logger.info("adding secret %d with %d qualified sets", i, len(sets))
    return _commit_state(
        state,
        params=replace(params, structure=structure),
        secrets={**state.secrets, i: value},
        polynomials=polynomials,
        participants=state.participants,
    )


def deactivate_secret(
    state: SchemeState,
    i: int,
    s_replacement: int,
    rng: Optional[random.Random] = None,
) -> Tuple[SchemeState, Bulletin]:
    """
    Replace secret i by ``s_replacement`` and republish everything tied to it.

    Raises:
        UnknownSecretIndex, SecretOutOfRange, CapacityExceeded
    """
    rng = rng or default_rng()
    params = state.params
    entry = params.structure.secret(i)
    value = encode_secret(s_replacement, params)
    if value == state.secrets[i]:
        raise ParameterError(f"replacement for secret {i} must differ from the current secret")

    structure_entry, polynomials = _reissue(
        params, state.polynomials, i, [entry.sets[q] for q in sorted(entry.sets)], value, rng
    )
    logger.info("replacing secret %d; set indices %s retired", i, sorted(entry.sets))
    return _commit_state(
        state,
        params=replace(params, structure=params.structure.with_secret(i, structure_entry)),
        secrets={**state.secrets, i: value},
        polynomials=polynomials,
        participants=state.participants,
    )


def remove_secret(state: SchemeState, i: int) -> Tuple[SchemeState, Bulletin]:
    """Hard delete: drop every published entry of secret i and retire its index."""
    params = state.params
    entry = params.structure.secret(i)
    retired = tuple(sorted([*entry.retired, *entry.sets]))
    structure = params.structure.with_secret(i, SecretStructure(sets={}, retired=retired, active=False))
    logger.info("removing secret %d", i)
    return _commit_state(
        state,
        params=replace(params, structure=structure),
        secrets={key: value for key, value in state.secrets.items() if key != i},
        polynomials={key: f for key, f in state.polynomials.items() if key[0] != i},
        participants=state.participants,
    )


def add_participant(
    state: SchemeState,
    share: Optional[int] = None,
    rng: Optional[random.Random] = None,
    participant_id: Optional[int] = None,
) -> Tuple[SchemeState, int, FieldElement]:
    """
    Register a new participant with a fresh share and identifier.

    The participant joins no qualified set yet, so no mask or commitment changes;
    only the published identifier list grows.

    Returns:
        (state, new participant index, share)

    Raises:
        DuplicateShare, DuplicateId, FieldExhausted
    """
    rng = rng or default_rng()
    params = state.params
    p = params.p
    j = max(state.participants, default=0) + 1
    if j >= p.p:
        raise FieldExhausted(f"a field of size {p.p} cannot hold {j} participants")

    shares = [participant.share for participant in state.participants.values()]
    ids = [participant.id for participant in state.participants.values()]
    if share is None:
        share = draw_distinct(1, shares, lambda: rng.randrange(p.p), p.p, "shares")[0]
    elif not p.contains(share):
        raise ParameterError("share must lie in [0, p)")
    elif share in shares:
        raise DuplicateShare(f"share of participant {j} collides with an existing share", [j])
    if participant_id is None:
        participant_id = draw_distinct(1, ids, lambda: rng.randrange(1, p.p), p.p - 1, "identifiers")[0]
    elif not 1 <= participant_id < p.p:
        raise ParameterError("identifier must lie in Z_p^*")
    elif participant_id in ids:
        raise DuplicateId(f"identifier {participant_id} is already in use")

    participants = {**state.participants, j: Participant(index=j, id=participant_id, share=share)}
    new_params = replace(params, ids={**params.ids, j: participant_id})
    logger.info("registered participant %d", j)
    new_state, _ = _commit_state(
        state,
        params=new_params,
        secrets=state.secrets,
        polynomials=state.polynomials,
        participants=participants,
    )
    return new_state, j, share


def deactivate_participant(
    state: SchemeState,
    j: int,
    replacements: Mapping[int, int],
    rng: Optional[random.Random] = None,
) -> Tuple[SchemeState, Bulletin]:
    """
    Remove participant j from every qualified set and replace each secret it
    could help reconstruct.

    Sets that drop below two members disappear; sets that collapse onto an
    existing set are merged.

    Raises:
        MissingReplacement: an affected secret has no replacement value
        OrphanedSecret: an affected secret would be left without any set
        StructureInvalid: j is not an active participant
    """
    rng = rng or default_rng()
    params = state.params
    participant = state.participants.get(j)
    if participant is None or not participant.active:
        raise StructureInvalid(f"participant {j} is not active")

    affected = params.structure.sets_containing(j)
    missing = sorted(set(affected) - set(replacements))
    if missing:
        raise MissingReplacement(f"secrets {missing} contain participant {j} and need replacement values")

    plans: Dict[int, Tuple[List[Tuple[int, ...]], FieldElement]] = {}
    for i in sorted(affected):
        entry = params.structure.secret(i)
        surviving: List[Tuple[int, ...]] = []
        for q in sorted(entry.sets):
            members = tuple(m for m in entry.sets[q] if m != j)
            if len(members) >= 2 and members not in surviving:
                surviving.append(members)
        if not surviving:
            raise OrphanedSecret(f"removing participant {j} leaves secret {i} without a qualified set", i)
        value = encode_secret(replacements[i], params)
        if value == state.secrets[i]:
            raise ParameterError(f"replacement for secret {i} must differ from the current secret")
        plans[i] = (surviving, value)

    structure = params.structure
    secrets = dict(state.secrets)
    polynomials = dict(state.polynomials)
    for i, (surviving, value) in plans.items():
        entry, polynomials = _reissue(
            replace(params, structure=structure), polynomials, i, surviving, value, rng
        )
        structure = structure.with_secret(i, entry)
        secrets[i] = value

    participants = {**state.participants, j: replace(participant, active=False)}
    logger.info("deactivated participant %d; secrets %s replaced", j, sorted(plans))
    return _commit_state(
        state,
        params=replace(
            params,
            structure=structure,
            retired_participants=params.retired_participants | {j},
        ),
        secrets=secrets,
        polynomials=polynomials,
        participants=participants,
    )


def add_qualified_set(
    state: SchemeState,
    i: int,
    members: Members,
    rng: Optional[random.Random] = None,
) -> Tuple[SchemeState, Bulletin]:
    """
    Append a qualified set to Γ_i; its index is the next unused q.

    Raises:
        UnknownSecretIndex, StructureInvalid, DuplicateSet, CapacityExceeded
    """
    rng = rng or default_rng()
    params = state.params
    entry = params.structure.secret(i)
    (normalized,) = validate_sets([members], _active_participants(state), f"secret {i}")
    if entry.find(normalized) is not None:
        raise DuplicateSet(f"qualified set {list(normalized)} already belongs to secret {i}")
    _check_set_capacity(params, i, len(entry.sets), 1)
    q = entry.next_set_index
    _check_set_index(params, i, q)

    polynomials = {
        **state.polynomials,
        (i, q): sample_polynomial(state.secrets[i], len(normalized) - 1, params.p, rng),
    }
    new_entry = replace(entry, sets={**entry.sets, q: normalized})
    logger.info("adding qualified set q=%d to secret %d", q, i)
    return _commit_state(
        state,
        params=replace(params, structure=params.structure.with_secret(i, new_entry)),
        secrets=state.secrets,
        polynomials=polynomials,
        participants=state.participants,
    )


def deactivate_qualified_set(
    state: SchemeState,
    i: int,
    q: int,
    s_replacement: Optional[int] = None,
    rng: Optional[random.Random] = None,
) -> Tuple[SchemeState, Bulletin]:
    """
    Retire set (i, q). Its members could still pool their old values, so the
    secret is replaced and the remaining sets of Γ_i are reissued.

    Raises:
        UnknownSet, OrphanedSecret, MissingReplacement
    """
    rng = rng or default_rng()
    params = state.params
    params.structure.qualified_set(i, q)
    entry = params.structure.secret(i)
    surviving = [entry.sets[other] for other in sorted(entry.sets) if other != q]
    if not surviving:
        raise OrphanedSecret(f"set q={q} is the only qualified set of secret {i}", i)
    if s_replacement is None:
        raise MissingReplacement(f"retiring set q={q} requires a replacement for secret {i}")
    value = encode_secret(s_replacement, params)
    if value == state.secrets[i]:
        raise ParameterError(f"replacement for secret {i} must differ from the current secret")

    structure_entry, polynomials = _reissue(params, state.polynomials, i, surviving, value, rng)
    logger.info("retired qualified set q=%d of secret %d", q, i)
    return _commit_state(
        state,
        params=replace(params, structure=params.structure.with_secret(i, structure_entry)),
        secrets={**state.secrets, i: value},
        polynomials=polynomials,
        participants=state.participants,
    )


def random_replacement(state: SchemeState, i: int, rng: Optional[random.Random] = None) -> int:
    """A uniformly random replacement for secret i, returned in caller (offset-free) form."""
    rng = rng or default_rng()
    params = state.params
    if i not in state.secrets:
        raise UnknownSecretIndex(f"secret {i} is not active")
    current = state.secrets[i]
    while True:
        value = rng.randrange(params.p.p)
        if value != current:
            return decode_secret(value, params)
