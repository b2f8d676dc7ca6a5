"""Hash-input encoding, pseudo-share derivation and commitments.

Pseudo-shares are U = h(x_L || i_u || q_v) read as an element of Z_p. The bit
layout is normative: every component is fixed-width big-endian, the whole
string is left-padded with zero bits to a byte boundary before hashing, and the
leading L bits of the digest are reduced mod p.

Two commitment backends are available: ``hash`` publishes h(value) and
``dlog`` publishes g^value mod p for a primitive element g.
"""
import hashlib
import hmac
import logging
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from itertools import count
from typing import Iterator, Optional, Union

from sympy import is_primitive_root, isprime, primitive_root

from src.corefield import FieldElement, Prime, to_hex
from src.errors import (
    IndexOverflow,
    MissingGenerator,
    ParameterError,
    SecretOutOfRange,
    UnknownHashAlgorithm,
)

logger = logging.getLogger(__name__)

HASH_MODE = "hash"
DLOG_MODE = "dlog"
MODES = (HASH_MODE, DLOG_MODE)

# Extendable-output functions are read at this many bytes for commitments.
XOF_ALGORITHMS = {"shake_128": 32, "shake_256": 32}


@dataclass(frozen=True)
class EncodingParams:
    """Bit widths of the pseudo-share hash input: L (share), u (secret index), v (set index)."""
    L: int
    u: int
    v: int

    @classmethod
    def for_capacities(cls, p: Prime, k_max: int, l_max: int, reissues: int = 0) -> "EncodingParams":
        """
        Widths frozen from the declared capacities, never from the current k and l.

        Set indices are never reused, so v also reserves room for ``reissues``
        full replacements of a secret holding l_max sets.
        """
        return cls(L=p.bit_length, u=k_max.bit_length(), v=(l_max * (reissues + 1)).bit_length())

    @property
    def max_secret_index(self) -> int:
        return (1 << self.u) - 1

    @property
    def max_set_index(self) -> int:
        return (1 << self.v) - 1

    @property
    def width(self) -> int:
        return self.L + self.u + self.v


@dataclass(frozen=True)
class BitString:
    """A fixed-width bit string stored as an integer."""
    value: int
    width: int

    @classmethod
    def parse(cls, bits: str) -> "BitString":
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return cls(value=int(bits, 2), width=len(bits))

    def __str__(self) -> str:
        return format(self.value, f"0{self.width}b")

    def to_bytes(self) -> bytes:
        """Left-pad with zero bits to a whole number of bytes."""
        return self.value.to_bytes((self.width + 7) // 8, "big")


@dataclass(frozen=True)
class PseudoShare:
    """U for participant ``participant`` in qualified set (secret_index, set_index)."""
    value: FieldElement
    secret_index: int
    set_index: int
    participant: int


@dataclass(frozen=True)
class Commitment:
    mode: str
    payload: Union[bytes, int]

    def payload_hex(self) -> str:
        if self.mode == HASH_MODE:
            return self.payload.hex()
        return to_hex(self.payload)


@dataclass(frozen=True)
class CommitParams:
    """Everything ``commit`` needs: the field, the hash and the optional generator."""
    p: Prime
    hash_id: str = "sha256"
    generator: Optional[int] = None


@dataclass
class HashMeter:
    calls: int = 0


_active_meter: ContextVar[Optional[HashMeter]] = ContextVar("hash_meter", default=None)


@contextmanager
def count_hash_calls() -> Iterator[HashMeter]:
    """Count every hash invocation made inside the block."""
    meter = HashMeter()
    token = _active_meter.set(meter)
    try:
        yield meter
    finally:
        _active_meter.reset(token)


def _digest(data: bytes, hash_id: str, length: Optional[int] = None) -> bytes:
    try:
        h = hashlib.new(hash_id, data)
    except (ValueError, TypeError) as e:
        raise UnknownHashAlgorithm(f"unknown hash algorithm: {hash_id!r}") from e
    meter = _active_meter.get()
    if meter is not None:
        meter.calls += 1
    if hash_id in XOF_ALGORITHMS:
        return h.digest(length or XOF_ALGORITHMS[hash_id])
    return h.digest()


def check_hash_algorithm(hash_id: str, field_bits: int) -> None:
    """
    Reject hashes that are unknown or too short to fill ``field_bits`` bits.

    Raises:
        UnknownHashAlgorithm
    """
    if hash_id in XOF_ALGORITHMS:
        return
    try:
        digest_bits = hashlib.new(hash_id).digest_size * 8
    except (ValueError, TypeError) as e:
        raise UnknownHashAlgorithm(f"unknown hash algorithm: {hash_id!r}") from e
    if digest_bits < field_bits:
        raise UnknownHashAlgorithm(
            f"{hash_id} yields {digest_bits} bits but the field needs {field_bits}; "
            f"use a longer hash or shake_256"
        )


def encode_hash_input(x: FieldElement, i: int, q: int, params: EncodingParams) -> BitString:
    """
    Build x_L || i_u || q_v.

    Raises:
        IndexOverflow: a component does not fit its declared width (or an index is < 1)
    """
    if not 1 <= i < (1 << params.u):
        raise IndexOverflow(f"secret index {i} does not fit in {params.u} bits")
    if not 1 <= q < (1 << params.v):
        raise IndexOverflow(f"set index {q} does not fit in {params.v} bits")
    if not 0 <= x < (1 << params.L):
        raise IndexOverflow(f"share does not fit in {params.L} bits")
    value = (x << (params.u + params.v)) | (i << params.v) | q
    return BitString(value=value, width=params.width)


def hash_to_field(bits: Union[BitString, str], p: Prime, hash_id: str) -> FieldElement:
    """
    Hash ``bits`` and map the digest into Z_p.

    The digest is truncated to its leading L = bitlen(p) bits and reduced mod p.
    Residues below 2^L - p get two preimages, so the output is only close to
    uniform when p is close to 2^L; ``pseudo_share_bias`` gives the exact distance.
    """
    if isinstance(bits, str):
        bits = BitString.parse(bits)
    if bits.width < 1:
        raise ValueError("hash input must be non-empty")

    out_len = max(XOF_ALGORITHMS.get(hash_id, 0), (p.bit_length + 7) // 8)
    digest = _digest(bits.to_bytes(), hash_id, out_len)
    digest_bits = len(digest) * 8
    if digest_bits < p.bit_length:
        raise UnknownHashAlgorithm(
            f"{hash_id} yields {digest_bits} bits but the field needs {p.bit_length}"
        )
    leading = int.from_bytes(digest, "big") >> (digest_bits - p.bit_length)
    return leading % p.p


def pseudo_share_bias(p: Prime) -> float:
    """
    Total variation distance between ``hash_to_field`` output and uniform on Z_p,
    assuming uniform digests: r(p - r) / (p * 2^L) with r = 2^L - p.

    Below 2^-60 for p = 2^61 - 1, but about 0.144 for p = 13 and never above 0.172.
    """
    span = 1 << p.bit_length
    r = span - p.p
    return r * (p.p - r) / (p.p * span)


def derive_pseudo_share(
    x: FieldElement,
    i: int,
    q: int,
    encoding: EncodingParams,
    p: Prime,
    hash_id: str,
) -> FieldElement:
    """U = h(x || i || q) as a field element."""
    return hash_to_field(encode_hash_input(x, i, q, encoding), p, hash_id)


def commit(value: int, mode: str, params: CommitParams) -> Commitment:
    """
    Commit to ``value``: h(value_L) in hash mode, g^value mod p in dlog mode.

    Raises:
        SecretOutOfRange: value outside [0, p)
        MissingGenerator: dlog mode without a generator
    """
    if not params.p.contains(value):
        raise SecretOutOfRange(f"committed value must lie in [0, {params.p.p})")
    if mode == HASH_MODE:
        width = (params.p.bit_length + 7) // 8
        return Commitment(mode=mode, payload=_digest(value.to_bytes(width, "big"), params.hash_id))
    if mode == DLOG_MODE:
        if params.generator is None:
            raise MissingGenerator("dlog commitments need a generator g of Z_p^*")
        return Commitment(mode=mode, payload=pow(params.generator, value, params.p.p))
    raise ParameterError(f"unknown commitment mode: {mode!r}")


def verify_commitment(value: int, c: Commitment, params: CommitParams) -> bool:
    """True iff ``value`` opens ``c``; hash payloads are compared in constant time."""
    if not params.p.contains(value):
        return False
    recomputed = commit(value, c.mode, params)
    if c.mode == HASH_MODE:
        return hmac.compare_digest(recomputed.payload, c.payload)
    return recomputed.payload == c.payload


def is_generator(g: int, p: Prime) -> bool:
    """True iff ``g`` generates Z_p^*."""
    if not 1 <= g < p.p:
        return False
    if p.p == 3:
        return g == 2
    r = (p.p - 1) // 2
    if isprime(r):
        return pow(g, 2, p.p) != 1 and pow(g, r, p.p) != 1
    return bool(is_primitive_root(g, p.p))


def find_generator(p: Prime) -> int:
    """
    Smallest primitive element of Z_p.

    Safe primes are handled directly; otherwise sympy factors p - 1, which is
    only practical when p - 1 is smooth or small.
    """
    r = (p.p - 1) // 2
    if p.p > 3 and isprime(r):
        for g in count(2):
            if is_generator(g, p):
                return g
    g = int(primitive_root(p.p))
    logger.debug("found generator %d for p with %d bits", g, p.bit_length)
    return g
