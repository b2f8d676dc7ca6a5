"""
Tests for the dealer, participant and combiner roles.

Usage:
    pytest tests/test_scheme.py -v
    pytest tests/test_scheme.py -v -m adversarial
"""

import logging
import random
from dataclasses import replace

import pytest

from scheme_cases import P13, P64, P256, STRUCTURES, pseudo_shares_for, reconstruct, setup_scheme
from src.commit import DLOG_MODE, PseudoShare, count_hash_calls
from src.corefield import Polynomial
from src.errors import (
    CapacityExceeded,
    DuplicateId,
    DuplicateShare,
    IncompleteSet,
    MissingGenerator,
    NotAMember,
    ParameterError,
    SecretOutOfRange,
    StructureInvalid,
    UnknownHashAlgorithm,
    UnknownSecretIndex,
    UnknownSet,
    UnknownTriple,
    VerificationFailed,
)
from src.scheme import (
    AccessStructure,
    SetupOptions,
    audit_bulletin,
    combiner_reconstruct,
    combiner_verify_participant,
    combiner_verify_set,
    dealer_setup,
    decode_secret,
    encode_secret,
    participant_pseudo_share,
    participant_verify_secret,
)


# ============================================================================
# WORKED INSTANCE (p = 13, f(x) = 2 + 3x, IDs 1 and 2, U = 4 and 9)
# ============================================================================

@pytest.fixture
def worked_instance(monkeypatch):
    """Dealer run with the hash and the polynomial forced to the hand-checked values."""
    forced_u = {7: 4, 11: 9}
    monkeypatch.setattr("src.scheme.derive_pseudo_share", lambda x, i, q, enc, p, h: forced_u[x])
    monkeypatch.setattr("src.scheme.sample_polynomial", lambda s, d, p, rng: Polynomial((s, 3)))
    options = SetupOptions(supplied_shares={1: 7, 2: 11}, ids={1: 1, 2: 2})
    return dealer_setup([2], [[[1, 2]]], 2, P13, options, random.Random(0))


class TestWorkedInstance:

    def test_masks(self, worked_instance):
        _, bulletin, _ = worked_instance
        assert bulletin.masks == {(1, 1, 1): 1, (1, 1, 2): 12}

    def test_bulletin_shape(self, worked_instance):
        _, bulletin, _ = worked_instance
        assert len(bulletin.masks) == 2
        assert len(bulletin.participant_commitments) == 2
        assert len(bulletin.secret_commitments) == 1
        assert bulletin.version == 1

    def test_end_to_end(self, worked_instance):
        state, bulletin, _ = worked_instance
        pseudo = pseudo_shares_for(state, 1, 1)
        assert {j: u.value for j, u in pseudo.items()} == {1: 4, 2: 9}
        secret = combiner_reconstruct(1, 1, pseudo, bulletin)
        assert secret == 2
        assert participant_verify_secret(secret, 1, bulletin)


# ============================================================================
# DEALER
# ============================================================================

class TestDealerSetup:

    @pytest.mark.parametrize("secrets,structure,n", STRUCTURES, ids=["one-pair", "two-secrets", "three-secrets", "five-of-five"])
    def test_every_set_reconstructs(self, secrets, structure, n):
        state, bulletin, shares = setup_scheme(secrets, structure, n)
        assert len(shares) == n
        assert len(set(shares.values())) == n
        for i, q, members in state.params.structure.active_sets():
            assert reconstruct(state, i, q) == secrets[i - 1], (
                f"set {list(members)} of secret {i} should reconstruct {secrets[i - 1]}"
            )

    def test_bulletin_is_a_recomputation(self):
        state, _, _ = setup_scheme(*STRUCTURES[2])
        assert audit_bulletin(state)

    def test_flipped_mask_fails_audit(self):
        state, bulletin, _ = setup_scheme(*STRUCTURES[1])
        key = next(iter(bulletin.masks))
        tampered = replace(bulletin, masks={**bulletin.masks, key: (bulletin.masks[key] + 1) % P64.p})
        assert not audit_bulletin(replace(state, bulletin=tampered))

    def test_set_of_one(self):
        with pytest.raises(StructureInvalid, match="qualified set"):
            setup_scheme([5], [[[1]]], 2)

    def test_unknown_member(self):
        with pytest.raises(StructureInvalid):
            setup_scheme([5], [[[1, 3]]], 2)

    def test_repeated_set(self):
        with pytest.raises(StructureInvalid):
            setup_scheme([5], [[[1, 2], [2, 1]]], 2)

    def test_secret_equal_to_p(self):
        with pytest.raises(SecretOutOfRange):
            setup_scheme([13], [[[1, 2]]], 2, p=P13)

    def test_secret_count_mismatch(self):
        with pytest.raises(StructureInvalid):
            setup_scheme([1, 2], [[[1, 2]]], 2)

    def test_capacity_below_current(self):
        with pytest.raises(CapacityExceeded):
            setup_scheme([1, 2], [[[1, 2]], [[1, 2]]], 2, k_max=1)

    def test_default_capacities(self):
        state, _, _ = setup_scheme(*STRUCTURES[2])
        params = state.params
        assert (params.k_max, params.l_max) == (6, 6)
        # v leaves room for 31 full reissues of six sets: 6 * 32 = 192 needs 8 bits
        assert (params.encoding.u, params.encoding.v) == (3, 8)
        assert params.encoding.max_set_index == 255

    def test_reissue_budget_sets_set_index_width(self):
        state, _, _ = setup_scheme([5], [[[1, 2]]], 2, l_max=4, reissue_budget=0)
        assert state.params.encoding.v == 3

    def test_small_field_bias_is_logged(self, caplog):
        with caplog.at_level(logging.WARNING, logger="src.scheme"):
            setup_scheme([2], [[[1, 2]]], 2, p=P13)
        assert "away from uniform" in caplog.text
        caplog.clear()
        with caplog.at_level(logging.WARNING, logger="src.scheme"):
            setup_scheme([2], [[[1, 2]]], 2, p=P64)
        assert "away from uniform" not in caplog.text

    def test_negative_reissue_budget(self):
        with pytest.raises(ParameterError):
            setup_scheme([5], [[[1, 2]]], 2, reissue_budget=-1)

    def test_setups_get_distinct_nonces(self):
        first, _, _ = setup_scheme([5], [[[1, 2]]], 2, seed=1)
        second, _, _ = setup_scheme([5], [[[1, 2]]], 2, seed=2)
        again, _, _ = setup_scheme([5], [[[1, 2]]], 2, seed=1)
        assert len(first.params.nonce) == 32
        assert first.params.nonce != second.params.nonce
        assert first.params.nonce == again.params.nonce

    def test_duplicate_supplied_shares(self):
        with pytest.raises(DuplicateShare) as excinfo:
            setup_scheme([5], [[[1, 2, 3]]], 3, supplied_shares={1: 99, 2: 42, 3: 99})
        assert excinfo.value.participants == (1, 3)

    def test_supplied_shares_are_used(self):
        _, _, shares = setup_scheme([5], [[[1, 2, 3]]], 3, supplied_shares={2: 1234})
        assert shares[2] == 1234

    def test_duplicate_ids(self):
        with pytest.raises(DuplicateId):
            setup_scheme([5], [[[1, 2]]], 2, ids={1: 5, 2: 5})

    def test_short_hash(self):
        with pytest.raises(UnknownHashAlgorithm):
            setup_scheme([5], [[[1, 2]]], 2, p=P256, hash_id="sha1")

    def test_seeded_setup_is_reproducible(self):
        first = setup_scheme(*STRUCTURES[1], seed=11)
        second = setup_scheme(*STRUCTURES[1], seed=11)
        assert first[1] == second[1]
        assert first[2] == second[2]

    def test_accepts_access_structure_object(self):
        structure = AccessStructure.from_lists([[[2, 1]]])
        state, _, _ = setup_scheme([5], structure, 2)
        assert state.params.structure.qualified_set(1, 1) == (1, 2)


class TestSecretOffset:

    def test_negative_secret_round_trip(self):
        state, bulletin, _ = setup_scheme([-40], [[[1, 2]]], 2, secret_offset=100)
        value = reconstruct(state, 1, 1)
        assert value == 60
        assert decode_secret(value, state.params) == -40
        assert participant_verify_secret(encode_secret(-40, state.params), 1, bulletin)

    def test_offset_cannot_push_past_p(self):
        with pytest.raises(SecretOutOfRange):
            setup_scheme([10], [[[1, 2]]], 2, p=P13, secret_offset=5)


class TestDlogMode:

    def test_generator_discovered(self):
        state, bulletin, _ = setup_scheme([5], [[[1, 2]]], 2, p=P13, mode=DLOG_MODE)
        assert state.params.generator == 2
        assert all(c.mode == DLOG_MODE for c in bulletin.participant_commitments.values())
        assert reconstruct(state, 1, 1) == 5

    def test_supplied_generator_must_be_primitive(self):
        with pytest.raises(ParameterError, match="primitive"):
            setup_scheme([5], [[[1, 2]]], 2, p=P13, mode=DLOG_MODE, generator=3)

    def test_modes_agree(self):
        rng = random.Random(8)
        for seed in range(20):
            hash_state, hash_bulletin, _ = setup_scheme([rng.randrange(13)], [[[1, 2, 3]]], 3, p=P13, seed=seed)
            dlog_state, dlog_bulletin, _ = setup_scheme(
                [hash_state.secrets[1]], [[[1, 2, 3]]], 3, p=P13, seed=seed, mode=DLOG_MODE
            )
            for claimed in (hash_state.secrets[1], hash_state.secrets[1] + 1):
                assert participant_verify_secret(claimed, 1, hash_bulletin) == participant_verify_secret(
                    claimed, 1, dlog_bulletin
                )

    def test_missing_generator_error_type(self):
        assert issubclass(MissingGenerator, ValueError)


# ============================================================================
# PARTICIPANT AND COMBINER
# ============================================================================

class TestParticipant:

    def test_matches_dealer_value(self):
        state, bulletin, shares = setup_scheme(*STRUCTURES[1])
        pseudo = participant_pseudo_share(shares[2], 1, 2, state.params, 2)
        assert combiner_verify_participant(pseudo, bulletin)

    def test_pseudo_shares_differ_between_sets(self):
        state, _, shares = setup_scheme([5], [[[1, 2], [1, 2, 3]]], 3)
        first = participant_pseudo_share(shares[1], 1, 1, state.params, 1)
        second = participant_pseudo_share(shares[1], 1, 2, state.params, 1)
        assert first.value != second.value

    def test_not_a_member(self):
        state, _, shares = setup_scheme(*STRUCTURES[1])
        with pytest.raises(NotAMember):
            participant_pseudo_share(shares[1], 1, 2, state.params, 1)

    def test_unknown_set(self):
        state, _, shares = setup_scheme(*STRUCTURES[1])
        with pytest.raises(UnknownSet):
            participant_pseudo_share(shares[1], 1, 5, state.params, 1)


class TestCombiner:

    def test_missing_member(self):
        state, bulletin, _ = setup_scheme(*STRUCTURES[2])
        pseudo = pseudo_shares_for(state, 2, 2)
        del pseudo[3]
        with pytest.raises(IncompleteSet) as excinfo:
            combiner_reconstruct(2, 2, pseudo, bulletin)
        assert excinfo.value.missing == (3,)

    def test_outsider(self):
        state, bulletin, _ = setup_scheme(*STRUCTURES[1])
        pseudo = pseudo_shares_for(state, 1, 1)
        pseudo[3] = PseudoShare(value=1, secret_index=1, set_index=1, participant=3)
        with pytest.raises(NotAMember):
            combiner_reconstruct(1, 1, pseudo, bulletin)

    @pytest.mark.adversarial
    def test_tampered_share_is_named(self):
        state, bulletin, _ = setup_scheme(*STRUCTURES[2])
        pseudo = pseudo_shares_for(state, 3, 3)
        pseudo[2] = replace(pseudo[2], value=(pseudo[2].value + 1) % P64.p)
        verdicts = combiner_verify_set(3, 3, pseudo, bulletin)
        assert verdicts == {1: True, 2: False, 3: True, 4: True}
        with pytest.raises(VerificationFailed) as excinfo:
            combiner_reconstruct(3, 3, pseudo, bulletin)
        assert excinfo.value.failed == (2,)

    @pytest.mark.adversarial
    def test_replay_against_another_set(self):
        state, bulletin, _ = setup_scheme([5], [[[1, 2], [1, 2, 3]]], 3)
        replayed = replace(pseudo_shares_for(state, 1, 1)[1], set_index=2)
        assert not combiner_verify_participant(replayed, bulletin)

    @pytest.mark.adversarial
    def test_mislabelled_document_fails(self):
        state, bulletin, _ = setup_scheme([5], [[[1, 2], [1, 2, 3]]], 3)
        pseudo = pseudo_shares_for(state, 1, 2)
        pseudo[1] = pseudo_shares_for(state, 1, 1)[1]
        assert combiner_verify_set(1, 2, pseudo, bulletin)[1] is False

    def test_unknown_triple(self):
        _, bulletin, _ = setup_scheme(*STRUCTURES[1])
        with pytest.raises(UnknownTriple):
            combiner_verify_participant(PseudoShare(value=1, secret_index=2, set_index=1, participant=2), bulletin)

    @pytest.mark.adversarial
    def test_substituted_share_is_uniform(self):
        state, bulletin, _ = setup_scheme([5], [[[1, 2]]], 2, p=P13)
        pseudo = pseudo_shares_for(state, 1, 1)
        results = []
        for value in range(13):
            forged = {**pseudo, 2: replace(pseudo[2], value=value)}
            results.append(combiner_reconstruct(1, 1, forged, bulletin, verify=False))
        assert sorted(results) == list(range(13))

    def test_verify_secret_wrong_value(self):
        state, bulletin, _ = setup_scheme(*STRUCTURES[1])
        assert participant_verify_secret(17, 1, bulletin)
        assert not participant_verify_secret(18, 1, bulletin)

    def test_verify_unknown_secret(self):
        _, bulletin, _ = setup_scheme(*STRUCTURES[1])
        with pytest.raises(UnknownSecretIndex):
            participant_verify_secret(17, 9, bulletin)


class TestHashCounts:

    def test_per_role_counts(self):
        m = 5
        with count_hash_calls() as dealer:
            state, bulletin, shares = setup_scheme([5], [[list(range(1, m + 1))]], m)
        assert dealer.calls == 2 * m + 1

        with count_hash_calls() as participant:
            pseudo = participant_pseudo_share(shares[1], 1, 1, state.params, 1)
            participant_verify_secret(5, 1, bulletin)
        assert participant.calls == 2

        everyone = {**pseudo_shares_for(state, 1, 1), 1: pseudo}
        with count_hash_calls() as combiner:
            combiner_reconstruct(1, 1, everyone, bulletin)
        assert combiner.calls == m
