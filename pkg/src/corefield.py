"""Prime-field arithmetic over Z_p.

Field elements are plain Python ints kept fully reduced (0 <= value < p); the
``Prime`` and ``Polynomial`` wrappers carry the structure. Primality testing and
modular inversion come from sympy.
"""
import random
import string
from dataclasses import dataclass
from typing import Sequence, Tuple

from sympy import isprime, mod_inverse

from src.errors import (
    DegreeTooSmall,
    DuplicateAbscissa,
    InsufficientPoints,
    NotPrime,
    SecretOutOfRange,
    SerializationError,
    TooSmall,
)

# A residue in [0, p). Kept as int so big-integer arithmetic stays native.
FieldElement = int
Point = Tuple[FieldElement, FieldElement]


@dataclass(frozen=True)
class Prime:
    """A validated prime modulus."""
    p: int
    bit_length: int

    def contains(self, value: int) -> bool:
        return 0 <= value < self.p


@dataclass(frozen=True)
class Polynomial:
    """Coefficients over Z_p, index 0 is the constant term (the shared secret)."""
    coefficients: Tuple[FieldElement, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def constant(self) -> FieldElement:
        return self.coefficients[0]


def validate_prime(candidate: int) -> Prime:
    """
    Wrap ``candidate`` as a Prime after primality testing.

    sympy's ``isprime`` is deterministic below 2^64 and runs a strong BPSW test
    above it, which has no known counterexample; its error is far below 2^-64.

    Raises:
        TooSmall: candidate < 3
        NotPrime: candidate is composite
    """
    if candidate < 3:
        raise TooSmall(f"prime candidate must be at least 3, got {candidate}")
    if not isprime(candidate):
        raise NotPrime(f"{candidate} is not prime")
    return Prime(p=candidate, bit_length=candidate.bit_length())


def random_prime(bits: int, rng: random.Random, safe: bool = False) -> Prime:
    """
    Draw a random prime of exactly ``bits`` bits from ``rng``.

    With ``safe=True`` the result satisfies p = 2r + 1 with r prime, which makes
    primitive elements cheap to certify (see ``commit.find_generator``).
    """
    if bits < 3:
        raise TooSmall(f"prime size must be at least 3 bits, got {bits}")
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if safe:
            if isprime(candidate) and isprime((candidate - 1) // 2):
                return Prime(p=candidate, bit_length=bits)
        elif isprime(candidate):
            return Prime(p=candidate, bit_length=bits)


def random_element(p: Prime, rng: random.Random, nonzero: bool = False) -> FieldElement:
    """Uniform element of Z_p (or Z_p^* when ``nonzero``)."""
    if nonzero:
        return rng.randrange(1, p.p)
    return rng.randrange(p.p)


def inverse(value: FieldElement, p: Prime) -> FieldElement:
    """Multiplicative inverse by the extended Euclidean algorithm."""
    if value % p.p == 0:
        raise ZeroDivisionError("zero has no inverse in Z_p")
    return int(mod_inverse(value, p.p))


def poly_eval(f: Polynomial, x: FieldElement, p: Prime) -> FieldElement:
    """Evaluate ``f`` at ``x`` with Horner's rule."""
    result = 0
    for coefficient in reversed(f.coefficients):
        result = (result * x + coefficient) % p.p
    return result


def sample_polynomial(
    secret: FieldElement,
    degree: int,
    p: Prime,
    rng: random.Random,
) -> Polynomial:
    """
    Build a random polynomial with constant term ``secret``.

    The non-constant coefficients are drawn uniformly from all of Z_p, zero
    included, so the leading coefficient may vanish. Interpolating through
    degree + 1 points still recovers the constant term.

    Raises:
        DegreeTooSmall: degree < 1 (qualified sets have at least two members)
        SecretOutOfRange: secret outside [0, p)
    """
    if degree < 1:
        raise DegreeTooSmall(f"polynomial degree must be at least 1, got {degree}")
    if not p.contains(secret):
        raise SecretOutOfRange(f"secret must lie in [0, {p.p}), got {secret}")
    coefficients = [secret] + [rng.randrange(p.p) for _ in range(degree)]
    return Polynomial(coefficients=tuple(coefficients))


def lagrange_at_zero(points: Sequence[Point], p: Prime) -> FieldElement:
    """
    Interpolate ``points`` and evaluate the interpolant at x = 0.

    Computes sum_b y_b * prod_{r != b} (-x_r) / (x_b - x_r) mod p.

    Raises:
        InsufficientPoints: fewer than two points
        DuplicateAbscissa: two x values coincide mod p
    """
    if len(points) < 2:
        raise InsufficientPoints(f"need at least 2 points, got {len(points)}")

    xs = [x % p.p for x, _ in points]
    if len(set(xs)) != len(xs):
        raise DuplicateAbscissa("interpolation points must have distinct x values")

    secret = 0
    for b, (_, y) in enumerate(points):
        numerator = 1
        denominator = 1
        for r, x_r in enumerate(xs):
            if r == b:
                continue
            numerator = numerator * (-x_r) % p.p
            denominator = denominator * (xs[b] - x_r) % p.p
        secret = (secret + y * numerator * inverse(denominator, p)) % p.p
    return secret


def to_hex(value: int) -> str:
    """Canonical minimal lowercase hex, no prefix."""
    if value < 0:
        raise ValueError("field elements are non-negative")
    return format(value, "x")


def from_hex(text: str) -> int:
    """Parse hex written by ``to_hex``; leading zeros and upper case are accepted."""
    try:
        if not text or any(c not in string.hexdigits for c in text):
            raise ValueError(text)
        return int(text, 16)
    except ValueError as e:
        raise SerializationError(f"not a hex field element: {text!r}") from e

