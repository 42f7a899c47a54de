"""Binary field arithmetic for the hash families.

Elements of GF(2^w) are ints in [0, 2^w).  Multiplication is carry-less
(XOR-convolution) followed by reduction modulo a fixed irreducible polynomial.
The modulus for each width is the numerically smallest irreducible polynomial
of degree w, found by direct search; the rule is deterministic so seeds are
reproducible across runs and machines.
"""

from __future__ import annotations

from functools import lru_cache


def clmul(a: int, b: int) -> int:
    """Carry-less product of two nonnegative ints (polynomial product over GF(2))."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _polymod(a: int, mod: int) -> int:
    dm = mod.bit_length() - 1
    while a.bit_length() - 1 >= dm:
        a ^= mod << (a.bit_length() - 1 - dm)
    return a


def _polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, _polymod(a, b)
    return a


def _is_irreducible(f: int) -> bool:
    """Rabin's test: f of degree w is irreducible iff x^(2^w) == x (mod f)
    and gcd(x^(2^(w/q)) - x, f) == 1 for every prime q dividing w."""
    w = f.bit_length() - 1
    if w < 1:
        return False

    def xpow2k(k: int) -> int:
        # x^(2^k) mod f via repeated squaring of the polynomial
        r = 0b10  # x
        for _ in range(k):
            r = _polymod(clmul(r, r), f)
        return r

    x_reduced = _polymod(0b10, f)
    if xpow2k(w) != x_reduced:
        return False
    n, q = w, 2
    primes = []
    while q * q <= n:
        if n % q == 0:
            primes.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        primes.append(n)
    for q in primes:
        if _polygcd(xpow2k(w // q) ^ x_reduced, f) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def modulus(w: int) -> int:
    """Smallest irreducible polynomial of degree w (as an int with bit w set)."""
    if w < 1:
        raise ValueError("field width must be >= 1")
    for f in range(1 << w, 2 << w):
        if _is_irreducible(f):
            return f
    raise AssertionError("unreachable: irreducible polynomials exist for every degree")


def gf_mul(a: int, b: int, w: int) -> int:
    return _polymod(clmul(a, b), modulus(w))


def gf_pow(a: int, e: int, w: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = gf_mul(r, a, w)
        a = gf_mul(a, a, w)
        e >>= 1
    return r


@lru_cache(maxsize=None)
def mul_bit_table(x: int, w: int) -> tuple[int, ...]:
    """For fixed x, the map a -> a*x over GF(2^w) is GF(2)-linear in a's bits.

    Returns w masks, one per output bit t: mask[t] has bit s set iff bit t of
    (e_s * x) is 1, so bit t of (a*x) = parity(mask[t] & a).
    """
    cols = [gf_mul(1 << s, x, w) for s in range(w)]
    masks = []
    for t in range(w):
        m = 0
        for s in range(w):
            if (cols[s] >> t) & 1:
                m |= 1 << s
        masks.append(m)
    return tuple(masks)
