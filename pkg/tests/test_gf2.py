"""GF(2^w) arithmetic tests against independent oracles (sympy polynomial
factorization over GF(2), exhaustive small-field checks)."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import GF, Poly, Symbol

from mpcgraph.gf2 import clmul, gf_mul, gf_pow, modulus, mul_bit_table

X = Symbol("x")


def to_poly(bits: int) -> Poly:
    coeffs = [(bits >> i) & 1 for i in range(bits.bit_length())][::-1]
    return Poly(coeffs or [0], X, domain=GF(2))


def from_poly(p: Poly) -> int:
    out = 0
    for power, coeff in p.terms():
        if coeff % 2:
            out |= 1 << power[0]
    return out


@given(st.integers(0, 2**20), st.integers(0, 2**20))
@settings(max_examples=200)
def test_clmul_matches_sympy_poly_product(a, b):
    assert clmul(a, b) == from_poly(to_poly(a) * to_poly(b))


@pytest.mark.parametrize("w", range(1, 17))
def test_modulus_is_irreducible_of_right_degree(w):
    f = modulus(w)
    assert f.bit_length() == w + 1
    assert to_poly(f).is_irreducible


@pytest.mark.parametrize("w", range(1, 17))
def test_modulus_is_numerically_smallest(w):
    f = modulus(w)
    for g in range(1 << w, f):
        # even g (zero constant term) is divisible by x, skip straight to sympy
        if (g & 1 or w == 1) and to_poly(g).is_irreducible:
            pytest.fail(f"smaller irreducible {g:#x} below chosen {f:#x}")


def test_field_axioms_exhaustive_w3():
    w, size = 3, 8
    for a in range(size):
        for b in range(size):
            assert gf_mul(a, b, w) == gf_mul(b, a, w)
            for c in range(size):
                left = gf_mul(a, gf_mul(b, c, w), w)
                right = gf_mul(gf_mul(a, b, w), c, w)
                assert left == right
                assert gf_mul(a, b ^ c, w) == gf_mul(a, b, w) ^ gf_mul(a, c, w)


@pytest.mark.parametrize("w", [2, 4, 5, 8])
def test_every_nonzero_element_has_inverse(w):
    for a in range(1, 1 << w):
        inv = gf_pow(a, (1 << w) - 2, w)
        assert gf_mul(a, inv, w) == 1


@given(st.integers(1, 13), st.data())
@settings(max_examples=150)
def test_mul_is_linear_in_second_operand(w, data):
    x = data.draw(st.integers(0, (1 << w) - 1))
    a = data.draw(st.integers(0, (1 << w) - 1))
    b = data.draw(st.integers(0, (1 << w) - 1))
    assert gf_mul(x, a ^ b, w) == gf_mul(x, a, w) ^ gf_mul(x, b, w)


@pytest.mark.parametrize("w", [1, 2, 3, 5])
def test_bit_table_exhaustive(w):
    for x in range(1 << w):
        table = mul_bit_table(x, w)
        for a in range(1 << w):
            prod = gf_mul(x, a, w)
            for t in range(w):
                parity = bin(table[t] & a).count("1") & 1
                assert parity == (prod >> t) & 1


def test_bit_table_random_wide():
    w = 13
    rng = random.Random(7)
    for _ in range(50):
        x = rng.randrange(1 << w)
        a = rng.randrange(1 << w)
        table = mul_bit_table(x, w)
        prod = gf_mul(x, a, w)
        for t in range(w):
            assert (bin(table[t] & a).count("1") & 1) == (prod >> t) & 1


def test_gf_pow_matches_repeated_multiplication():
    w = 6
    for a in (0, 1, 5, 37, 63):
        acc = 1
        for e in range(10):
            assert gf_pow(a, e, w) == acc
            acc = gf_mul(acc, a, w)
