"""
Command-line frontend: dealer, participants and combiner run the protocol
against a directory that stands in for the public bulletin board.

    mssgas setup --config demo.json --seed 7
    mssgas pseudo-share --share bulletin/shares/P1.share --secret-index 1 --set-index 1
    mssgas reconstruct --secret-index 1 --set-index 1 P1.json P2.json
    mssgas verify-secret --secret-index 1 2
    mssgas renew add-set --secret-index 1 --members 1,2,3

Reports go to stdout, diagnostics to stderr. Exit codes are stable:
0 ok, 1 verification false, 2 invalid input, 3 not a member,
4 dishonest participant, 5 incomplete set, 6 capacity exceeded, 7 orphaned secret.
"""
import argparse
import json
import logging
import random
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from src import renew
from src.board import BulletinBoard, bulletin_to_document, emit, parse, scheme_identifier
from src.commit import PseudoShare
from src.config import Config
from src.corefield import from_hex, random_prime, to_hex, validate_prime
from src.errors import (
    CapacityError,
    IncompleteSet,
    MembershipError,
    MssgasError,
    NotAMember,
    OrphanedSecret,
    SerializationError,
    VerificationFailed,
)
from src.models import PseudoShareDocument, SchemeConfigFile
from src.scheme import (
    REISSUE_BUDGET,
    SchemeState,
    SetupOptions,
    audit_bulletin,
    combiner_reconstruct,
    combiner_verify_set,
    dealer_setup,
    decode_secret,
    default_rng,
    participant_pseudo_share,
    participant_verify_secret,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_INVALID = 2
EXIT_NOT_MEMBER = 3
EXIT_DISHONEST = 4
EXIT_INCOMPLETE = 5
EXIT_CAPACITY = 6
EXIT_ORPHANED = 7


def exit_code_for(error: Exception) -> int:
    """Map an error to its exit code."""
    if isinstance(error, OrphanedSecret):
        return EXIT_ORPHANED
    if isinstance(error, CapacityError):
        return EXIT_CAPACITY
    if isinstance(error, IncompleteSet):
        return EXIT_INCOMPLETE
    if isinstance(error, VerificationFailed):
        return EXIT_DISHONEST
    if isinstance(error, MembershipError):
        return EXIT_NOT_MEMBER
    return EXIT_INVALID


def parse_int(text: str) -> int:
    """Decimal, or hex with a 0x prefix."""
    text = text.strip().lower()
    try:
        return int(text, 16) if text.startswith("0x") else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")


def parse_members(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"members must be comma-separated indices, got {text!r}")


def parse_assignment(text: str):
    index, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected I=VALUE, got {text!r}")
    try:
        return int(index), parse_int(value)
    except argparse.ArgumentTypeError:
        raise
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected I=VALUE, got {text!r}")


def _board(args) -> BulletinBoard:
    return BulletinBoard(args.bulletin or Config.BULLETIN_DIR, getattr(args, "state", None))


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SerializationError(f"{path} is not valid JSON: {e}") from e


# Dealer

def cmd_setup(args) -> int:
    config = SchemeConfigFile.model_validate(_read_json(args.config))
    board = _board(args)
    if board.bulletin_path.exists():
        raise SerializationError("bulletin directory already holds a scheme; use a fresh directory")

    rng = random.Random(args.seed) if args.seed is not None else default_rng()
    mode = args.mode or config.mode or Config.MODE
    if config.prime is not None:
        p = validate_prime(config.prime)
    else:
        bits = config.prime_bits or Config.PRIME_BITS
        logger.info("generating a %d-bit prime", bits)
        p = random_prime(bits, rng, safe=(mode == "dlog"))

    options = SetupOptions(
        hash_id=args.hash or config.hash or Config.HASH,
        mode=mode,
        generator=config.generator,
        k_max=config.capacities.secrets,
        l_max=config.capacities.sets,
        capacity_factor=Config.CAPACITY_FACTOR,
        reissue_budget=REISSUE_BUDGET if config.capacities.reissues is None else config.capacities.reissues,
        secret_offset=config.secret_offset,
        supplied_shares=config.shares,
        ids=config.ids,
        seed=args.seed,
    )
    with board.locked():
        state, bulletin, shares = dealer_setup(
            config.secrets, config.access_structure, config.participants, p, options, rng
        )
        board.publish(bulletin, "setup", {"secrets": len(config.secrets), "participants": config.participants})
        for j, share in shares.items():
            board.write_share(j, share, state.params)
        board.write_state(state)

    params = state.params
    print("✓ Dealer setup complete")
    print(f"  Bulletin version: {bulletin.version}")
    print(f"  Prime: {p.bit_length} bits, mode {params.mode}, hash {params.hash_id}")
    print(f"  Secrets: {len(state.secrets)} (capacity {params.k_max}), sets per secret up to {params.l_max}")
    print(f"  Participants: {len(shares)}")
    print(f"  Scheme: {scheme_identifier(params)}")
    return EXIT_OK


# Participant

def cmd_pseudo_share(args) -> int:
    board = _board(args)
    share = BulletinBoard.read_share(args.share)
    bulletin = board.read_bulletin()
    scheme = scheme_identifier(bulletin.params)
    if share.scheme != scheme:
        raise SerializationError("share file was issued for a different scheme than this bulletin")

    pseudo = participant_pseudo_share(
        from_hex(share.share), args.secret_index, args.set_index, bulletin.params, share.participant
    )
    doc = PseudoShareDocument(
        participant=pseudo.participant,
        secret_index=pseudo.secret_index,
        set_index=pseudo.set_index,
        value=to_hex(pseudo.value),
        scheme=scheme,
    )
    sys.stdout.write(emit(doc))
    return EXIT_OK


def cmd_verify_secret(args) -> int:
    bulletin = _board(args).read_bulletin()
    value = args.secret + bulletin.params.secret_offset
    if participant_verify_secret(value, args.secret_index, bulletin):
        print(f"✓ Secret {args.secret_index} matches its commitment")
        return EXIT_OK
    print(f"✗ Secret {args.secret_index} does not match its commitment")
    return EXIT_FALSE


# Combiner

def _load_pseudo_shares(paths: Sequence[str], scheme: str) -> Dict[int, PseudoShare]:
    pseudo_shares: Dict[int, PseudoShare] = {}
    for path in paths:
        doc = parse(PseudoShareDocument, Path(path).read_text(encoding="utf-8"))
        if doc.scheme != scheme:
            raise SerializationError(f"pseudo-share of participant {doc.participant} belongs to another scheme")
        if doc.participant in pseudo_shares:
            raise SerializationError(f"participant {doc.participant} submitted more than one pseudo-share")
        pseudo_shares[doc.participant] = PseudoShare(
            value=from_hex(doc.value),
            secret_index=doc.secret_index,
            set_index=doc.set_index,
            participant=doc.participant,
        )
    return pseudo_shares


def cmd_reconstruct(args) -> int:
    bulletin = _board(args).read_bulletin()
    params = bulletin.params
    i, q = args.secret_index, args.set_index
    pseudo_shares = _load_pseudo_shares(args.documents, scheme_identifier(params))

    members = params.structure.qualified_set(i, q)
    outsiders = sorted(set(pseudo_shares) - set(members))
    if outsiders:
        return _fail(NotAMember(f"participants {outsiders} are not members of qualified set (i={i}, q={q})"))
    missing = sorted(set(members) - set(pseudo_shares))
    if missing:
        return _fail(IncompleteSet(f"qualified set (i={i}, q={q}) is missing participants {missing}", missing))

    verdicts = combiner_verify_set(i, q, pseudo_shares, bulletin)
    for j, ok in verdicts.items():
        print(f"{'✓' if ok else '✗'} participant {j}")
    failed = [j for j, ok in verdicts.items() if not ok]
    if failed:
        return _fail(VerificationFailed(f"dishonest participants: {failed}", failed))

    value = combiner_reconstruct(i, q, pseudo_shares, bulletin, verify=False)
    if not participant_verify_secret(value, i, bulletin):
        print(f"✗ reconstructed value does not match the commitment of secret {i}")
        return EXIT_FALSE
    print(f"✓ secret {i} matches its commitment")
    print(decode_secret(value, params))
    return EXIT_OK


# Renewal

def _renew_rng(state: SchemeState) -> random.Random:
    """Seeded schemes stay reproducible across renewals."""
    if state.seed is None:
        return default_rng()
    return random.Random(f"{state.seed}:{state.version}")


def _replacement(args, state: SchemeState, i: int, rng: random.Random) -> Optional[int]:
    if getattr(args, "random_replacement", False):
        value = renew.random_replacement(state, i, rng)
        print(f"  New secret {i}: {value}")
        return value
    return args.replacement


def cmd_renew(args) -> int:
    board = _board(args)
    with board.locked():
        state = board.read_state()
        published = board.read_bulletin_document()
        if published.version != state.version:
            raise SerializationError(
                f"dealer state is at version {state.version} but the bulletin is at {published.version}"
            )
        rng = _renew_rng(state)
        new_state, detail = RENEWALS[args.renew_command](args, state, rng, board)
        board.publish(new_state.bulletin, args.renew_command, detail)
        board.write_state(new_state)

    print(f"✓ {args.renew_command} complete (bulletin v{new_state.version})")
    return EXIT_OK


def _add_secret(args, state, rng, board):
    new_state, _ = renew.add_secret(state, args.secret, args.sets, rng)
    i = max(new_state.secrets)
    print(f"  Secret index: {i}")
    return new_state, {"secret": i}


def _deactivate_secret(args, state, rng, board):
    i = args.secret_index
    if args.delete:
        new_state, _ = renew.remove_secret(state, i)
        return new_state, {"secret": i, "deleted": True}
    new_state, _ = renew.deactivate_secret(state, i, _replacement(args, state, i, rng), rng)
    return new_state, {"secret": i}


def _add_participant(args, state, rng, board):
    new_state, j, share = renew.add_participant(state, args.supplied_share, rng, args.id)
    board.write_share(j, share, new_state.params)
    print(f"  Participant index: {j}")
    return new_state, {"participant": j}


def _deactivate_participant(args, state, rng, board):
    j = args.participant
    replacements = dict(args.replacement or [])
    if args.random_replacements:
        for i in sorted(state.params.structure.sets_containing(j)):
            if i not in replacements:
                replacements[i] = renew.random_replacement(state, i, rng)
                print(f"  New secret {i}: {replacements[i]}")
    new_state, _ = renew.deactivate_participant(state, j, replacements, rng)
    return new_state, {"participant": j, "secrets": sorted(replacements)}


def _add_set(args, state, rng, board):
    new_state, _ = renew.add_qualified_set(state, args.secret_index, args.members, rng)
    q = max(new_state.params.structure.secret(args.secret_index).sets)
    print(f"  Set index: {q}")
    return new_state, {"secret": args.secret_index, "set": q}


def _deactivate_set(args, state, rng, board):
    i, q = args.secret_index, args.set_index
    new_state, _ = renew.deactivate_qualified_set(state, i, q, _replacement(args, state, i, rng), rng)
    return new_state, {"secret": i, "set": q}


RENEWALS = {
    "add-secret": _add_secret,
    "deactivate-secret": _deactivate_secret,
    "add-participant": _add_participant,
    "deactivate-participant": _deactivate_participant,
    "add-set": _add_set,
    "deactivate-set": _deactivate_set,
}


# Board maintenance

def cmd_audit(args) -> int:
    board = _board(args)
    state = board.read_state()
    published = board.bulletin_path.read_text(encoding="utf-8")
    if audit_bulletin(state) and emit(bulletin_to_document(state.bulletin)) == published:
        print(f"✓ Bulletin v{state.version} matches the dealer state")
        return EXIT_OK
    print(f"✗ Bulletin does not match the dealer state (v{state.version})")
    return EXIT_FALSE


def cmd_replay(args) -> int:
    board = _board(args)
    replayed = emit(board.replay())
    sys.stdout.write(replayed)
    if replayed != board.bulletin_path.read_text(encoding="utf-8"):
        logger.warning("journal replay differs from the published bulletin")
        return EXIT_FALSE
    return EXIT_OK


def _fail(error: MssgasError) -> int:
    print(f"✗ {error}", file=sys.stderr)
    return exit_code_for(error)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mssgas",
        description="Verifiable multi-use multi-secret sharing for general access structures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_bulletin(p):
        p.add_argument("--bulletin", help=f"bulletin directory (default ${{MSSGAS_BULLETIN_DIR}} or {Config.BULLETIN_DIR!r})")

    def add_state(p):
        p.add_argument("--state", help="dealer state file (default <bulletin>/dealer.state)")

    setup = sub.add_parser("setup", help="dealer: share the configured secrets")
    setup.add_argument("--config", required=True, help="scheme config (JSON)")
    add_bulletin(setup)
    add_state(setup)
    setup.add_argument("--seed", type=int, help="INSECURE, test only: seed all dealer randomness")
    setup.add_argument("--mode", choices=("hash", "dlog"), help="verification mode")
    setup.add_argument("--hash", help="hash algorithm (hashlib name)")
    setup.set_defaults(handler=cmd_setup)

    pseudo = sub.add_parser("pseudo-share", help="participant: derive a pseudo-share")
    pseudo.add_argument("--share", required=True, help="share file")
    add_bulletin(pseudo)
    pseudo.add_argument("--secret-index", type=int, required=True)
    pseudo.add_argument("--set-index", type=int, required=True)
    pseudo.set_defaults(handler=cmd_pseudo_share)

    rec = sub.add_parser("reconstruct", help="combiner: verify pseudo-shares and recover a secret")
    add_bulletin(rec)
    rec.add_argument("--secret-index", type=int, required=True)
    rec.add_argument("--set-index", type=int, required=True)
    rec.add_argument("documents", nargs="+", help="pseudo-share documents")
    rec.set_defaults(handler=cmd_reconstruct)

    check = sub.add_parser("verify-secret", help="participant: check a revealed secret")
    add_bulletin(check)
    check.add_argument("--secret-index", type=int, required=True)
    check.add_argument("secret", type=parse_int)
    check.set_defaults(handler=cmd_verify_secret)

    audit = sub.add_parser("audit", help="dealer: compare the bulletin with the dealer state")
    add_bulletin(audit)
    add_state(audit)
    audit.set_defaults(handler=cmd_audit)

    replay = sub.add_parser("replay", help="rebuild the bulletin from the journal")
    add_bulletin(replay)
    replay.set_defaults(handler=cmd_replay)

    renewal = sub.add_parser("renew", help="dealer: change the access structure")
    renew_sub = renewal.add_subparsers(dest="renew_command", required=True)

    def renew_parser(name, help_text):
        p = renew_sub.add_parser(name, help=help_text)
        add_bulletin(p)
        add_state(p)
        p.set_defaults(handler=cmd_renew)
        return p

    def add_replacement(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--replacement", type=parse_int, help="replacement secret")
        group.add_argument("--random-replacement", action="store_true", help="draw the replacement at random")
        return group

    p = renew_parser("add-secret", "share a new secret")
    p.add_argument("--secret", type=parse_int, required=True)
    p.add_argument("--set", dest="sets", type=parse_members, action="append", required=True,
                   help="qualified set as comma-separated participant indices (repeatable)")

    p = renew_parser("deactivate-secret", "replace or delete a secret")
    p.add_argument("--secret-index", type=int, required=True)
    group = add_replacement(p)
    group.add_argument("--delete", action="store_true", help="drop the secret and all its entries")

    p = renew_parser("add-participant", "register a participant")
    p.add_argument("--supplied-share", type=parse_int, help="participant-chosen share")
    p.add_argument("--id", type=parse_int, help="public identifier (random otherwise)")

    p = renew_parser("deactivate-participant", "remove a participant from every set")
    p.add_argument("--participant", type=int, required=True)
    p.add_argument("--replacement", type=parse_assignment, action="append",
                   help="replacement for secret I as I=VALUE (repeatable)")
    p.add_argument("--random-replacements", action="store_true",
                   help="draw replacements for affected secrets not given explicitly")

    p = renew_parser("add-set", "add a qualified set to a secret")
    p.add_argument("--secret-index", type=int, required=True)
    p.add_argument("--members", type=parse_members, required=True)

    p = renew_parser("deactivate-set", "retire a qualified set")
    p.add_argument("--secret-index", type=int, required=True)
    p.add_argument("--set-index", type=int, required=True)
    add_replacement(p)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, force=True, **Config.get_logging_config())
    try:
        Config.validate()
        return args.handler(args)
    except ValidationError as e:
        print(f"✗ Invalid document: {e}", file=sys.stderr)
        return EXIT_INVALID
    except MssgasError as e:
        return _fail(e)
    except (ValueError, OSError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
