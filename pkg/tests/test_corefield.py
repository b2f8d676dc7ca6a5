"""
Tests for prime-field arithmetic.

Usage:
    pytest tests/test_corefield.py -v
"""

import random
from itertools import product

import pytest

from src.corefield import (
    Polynomial,
    Prime,
    from_hex,
    inverse,
    lagrange_at_zero,
    poly_eval,
    random_element,
    random_prime,
    sample_polynomial,
    to_hex,
    validate_prime,
)
from src.errors import (
    DegreeTooSmall,
    DuplicateAbscissa,
    InsufficientPoints,
    NotPrime,
    ParameterError,
    SecretOutOfRange,
    SerializationError,
    TooSmall,
)


class TestValidatePrime:

    def test_small_prime(self):
        assert validate_prime(13) == Prime(p=13, bit_length=4)

    def test_mersenne_61(self):
        p = validate_prime(2305843009213693951)
        assert p.bit_length == 61

    @pytest.mark.parametrize("candidate", [15, 21, 2 ** 61 + 1, 561], ids=["15", "21", "2^61+1", "carmichael"])
    def test_composite(self, candidate):
        with pytest.raises(NotPrime):
            validate_prime(candidate)

    @pytest.mark.parametrize("candidate", [0, 1, 2])
    def test_too_small(self, candidate):
        with pytest.raises(TooSmall):
            validate_prime(candidate)

    def test_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            validate_prime(15)
        assert issubclass(NotPrime, ParameterError)


class TestPolyEval:

    @pytest.mark.parametrize(
        "coefficients,x,expected",
        [((2, 3), 4, 1), ((7, 5, 11), 0, 7), ((0, 1), 9, 9)],
        ids=["linear", "at-zero", "identity"],
    )
    def test_known_values(self, p13, coefficients, x, expected):
        assert poly_eval(Polynomial(coefficients=coefficients), x, p13) == expected

    def test_matches_power_sum(self, p64):
        rng = random.Random(1000)
        for trial in range(1000):
            f = Polynomial(tuple(random_element(p64, rng) for _ in range(rng.randint(1, 9))))
            x = random_element(p64, rng)
            expected = sum(c * pow(x, k, p64.p) for k, c in enumerate(f.coefficients)) % p64.p
            assert poly_eval(f, x, p64) == expected, f"seed 1000 trial {trial}: Horner disagrees with the power sum"

    def test_degree_and_constant(self):
        f = Polynomial(coefficients=(7, 5, 11))
        assert f.degree == 2
        assert f.constant == 7


class TestSamplePolynomial:

    def test_constant_term_and_length(self, p13, rng):
        f = sample_polynomial(2, 1, p13, rng)
        assert f.coefficients[0] == 2
        assert len(f.coefficients) == 2

    def test_zero_secret(self, p13, rng):
        f = sample_polynomial(0, 3, p13, rng)
        assert f.coefficients[0] == 0
        assert len(f.coefficients) == 4

    def test_coefficients_in_field(self, p13, rng):
        for _ in range(50):
            f = sample_polynomial(5, 4, p13, rng)
            assert all(0 <= c < 13 for c in f.coefficients)

    def test_coefficients_uniform(self, p13):
        rng = random.Random(13)
        counts = [0] * 13
        for _ in range(10_000):
            for c in sample_polynomial(5, 3, p13, rng).coefficients[1:]:
                counts[c] += 1
        draws = sum(counts)
        for residue, count in enumerate(counts):
            assert abs(count / draws - 1 / 13) <= 0.01, (
                f"seed 13: residue {residue} drawn {count} times out of {draws}"
            )

    def test_degree_zero_rejected(self, p13, rng):
        with pytest.raises(DegreeTooSmall):
            sample_polynomial(2, 0, p13, rng)

    def test_secret_out_of_range(self, p13, rng):
        with pytest.raises(SecretOutOfRange):
            sample_polynomial(13, 1, p13, rng)


class TestLagrange:

    def test_two_points(self, p13):
        assert lagrange_at_zero([(1, 5), (2, 8)], p13) == 2

    def test_constant_points(self, p13):
        assert lagrange_at_zero([(1, 4), (2, 4), (3, 4)], p13) == 4

    def test_order_does_not_matter(self, p13):
        assert lagrange_at_zero([(2, 8), (1, 5)], p13) == 2

    def test_recovers_sampled_secret(self):
        rng = random.Random(64)
        trials = 0
        for _ in range(50):
            p = random_prime(64, rng)
            for _ in range(20):
                degree = rng.randint(1, 6)
                secret = random_element(p, rng)
                f = sample_polynomial(secret, degree, p, rng)
                xs = rng.sample(range(1, 10 ** 9), degree + 1)
                points = [(x, poly_eval(f, x, p)) for x in xs]
                assert lagrange_at_zero(points, p) == secret, (
                    f"seed 64 p={p.p} degree {degree}: interpolation through {degree + 1} points "
                    f"must give back the constant term"
                )
                trials += 1
        assert trials == 1000

    @pytest.mark.parametrize("degree,trials", [(1, 20), (2, 20), (3, 5)])
    def test_one_point_short_is_undetermined(self, p13, degree, trials):
        # With degree points known, every candidate secret fits exactly one polynomial.
        rng = random.Random(degree)
        for trial in range(trials):
            f = sample_polynomial(random_element(p13, rng), degree, p13, rng)
            known = [(x, poly_eval(f, x, p13)) for x in rng.sample(range(1, 13), degree)]
            for candidate in range(13):
                fits = sum(
                    all(poly_eval(Polynomial((candidate, *rest)), x, p13) == y for x, y in known)
                    for rest in product(range(13), repeat=degree)
                )
                assert fits == 1, f"seed {degree} trial {trial}: secret {candidate} fits {fits} polynomials"

    def test_duplicate_abscissa(self, p13):
        with pytest.raises(DuplicateAbscissa):
            lagrange_at_zero([(1, 5), (14, 8)], p13)

    def test_single_point(self, p13):
        with pytest.raises(InsufficientPoints):
            lagrange_at_zero([(1, 5)], p13)


class TestInverse:

    def test_inverse(self, p13):
        for value in range(1, 13):
            assert value * inverse(value, p13) % 13 == 1

    def test_zero_has_no_inverse(self, p13):
        with pytest.raises(ZeroDivisionError):
            inverse(0, p13)


class TestRandomPrime:

    def test_bit_length(self):
        p = random_prime(64, random.Random(1))
        assert p.bit_length == 64

    def test_safe_prime(self):
        p = random_prime(32, random.Random(2), safe=True)
        assert validate_prime((p.p - 1) // 2)

    def test_seeded(self):
        assert random_prime(48, random.Random(3)) == random_prime(48, random.Random(3))


class TestHex:

    @pytest.mark.parametrize("value,text", [(0, "0"), (10, "a"), (255, "ff"), (4096, "1000")])
    def test_minimal_lowercase(self, value, text):
        assert to_hex(value) == text
        assert from_hex(text) == value

    @pytest.mark.parametrize("text", ["", "0x1f", "xyz", "-1"])
    def test_rejects_non_hex(self, text):
        with pytest.raises(SerializationError):
            from_hex(text)
