"""Limited-independence hash families over GF(2^w).

A family maps domain indices {1..n} to ell-bit outputs.  Both constructions
are GF(2)-linear in the seed bits, which the derandomization engine exploits
to compute exact expectations over seed sub-families without enumeration.

Pairwise:  h(i) = trunc_ell(a * x_i + b), seed = (a, b), two field elements.
KWise:     h(i) = trunc_ell(sum_j c_j * x_i^j, j < k), seed = k field elements,
           exactly k-wise independent (polynomial interpolation is a bijection
           on any k distinct evaluation points).

Seed serialization is a big-endian bit string: the first seed bit is the most
significant bit of the seed integer, and the derandomization phases fix blocks
starting from that end.  For Pairwise the element a occupies the leading bits;
for KWise the coefficient c_0 does, then c_1, and so on.

Width rule: w = max(ell, ceil(log2(n + 1))) so that indices embed injectively
into the field and outputs can be truncated to ell bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import IndexOutOfRange
from .gf2 import gf_mul, gf_pow, mul_bit_table

PAIRWISE = "pairwise"
KWISE = "kwise"


@dataclass(frozen=True)
class FamilySpec:
    n: int            # domain size; indices are 1..n
    ell: int          # output bits; Pr[h(i) = y] = 2^-ell for each y
    kind: str         # PAIRWISE or KWISE
    k: int            # independence (2 for pairwise)
    w: int            # field width
    seed_bits: int    # total seed length tau


def _width(n: int, ell: int) -> int:
    return max(ell, (n).bit_length())  # bit_length(n) == ceil(log2(n+1)) for n >= 1


def make_pairwise(n: int, ell: int) -> FamilySpec:
    if n < 1 or ell < 1:
        raise ValueError("need n >= 1 and ell >= 1")
    w = _width(n, ell)
    return FamilySpec(n=n, ell=ell, kind=PAIRWISE, k=2, w=w, seed_bits=2 * w)


def make_kwise(n: int, ell: int, k: int) -> FamilySpec:
    if n < 1 or ell < 1 or k < 1:
        raise ValueError("need n >= 1, ell >= 1, k >= 1")
    w = _width(n, ell)
    return FamilySpec(n=n, ell=ell, kind=KWISE, k=k, w=w, seed_bits=k * w)


def family_size(spec: FamilySpec) -> int:
    return 1 << spec.seed_bits


def _check_index(spec: FamilySpec, i: int) -> None:
    if not 1 <= i <= spec.n:
        raise IndexOutOfRange(f"index {i} outside domain 1..{spec.n}")


def eval_hash(spec: FamilySpec, seed: int, i: int) -> int:
    """h(i) for the given seed; result is an ell-bit value."""
    _check_index(spec, i)
    if not 0 <= seed < family_size(spec):
        raise IndexOutOfRange(f"seed {seed} outside family of {spec.seed_bits} bits")
    w, mask = spec.w, (1 << spec.w) - 1
    if spec.kind == PAIRWISE:
        a = (seed >> w) & mask
        b = seed & mask
        val = gf_mul(a, i, w) ^ b
    else:
        val = 0
        for j in range(spec.k):
            c = (seed >> ((spec.k - 1 - j) * w)) & mask
            val ^= gf_mul(c, gf_pow(i, j, w), w)
    return val & ((1 << spec.ell) - 1)


def as_indicator(spec: FamilySpec, seed: int, i: int) -> int:
    """X_i = 1 iff h(i) = 0; Pr over the family is exactly 2^-ell."""
    return 1 if eval_hash(spec, seed, i) == 0 else 0


def family_iter(spec: FamilySpec, prefix: int = 0, prefix_len: int = 0,
                block: int | None = None, chi: int = 0):
    """Iterate seeds (ascending) whose leading prefix_len bits equal prefix,
    optionally with the next chi bits pinned to block."""
    tau = spec.seed_bits
    if prefix_len < 0 or prefix_len > tau or prefix < 0 or prefix >= (1 << prefix_len):
        raise IndexOutOfRange("bad seed prefix")
    hi = prefix << (tau - prefix_len) if prefix_len else 0
    free = tau - prefix_len
    if block is not None:
        if chi < 1 or prefix_len + chi > tau or block >= (1 << chi):
            raise IndexOutOfRange("bad block")
        hi |= block << (tau - prefix_len - chi)
        free -= chi
    for low in range(1 << free):
        yield hi | low


@lru_cache(maxsize=1 << 20)
def linear_rows(spec: FamilySpec, i: int) -> tuple[int, ...]:
    """GF(2)-linear form of h(i): ell masks over seed-int bit positions, one
    per output bit t, with bit t of h(i) = parity(mask[t] & seed)."""
    _check_index(spec, i)
    w = spec.w
    rows = [0] * spec.ell
    if spec.kind == PAIRWISE:
        tabs = [(w, mul_bit_table(i, w)), (0, None)]  # (shift, table); None = identity
        for shift, tab in tabs:
            for t in range(spec.ell):
                rows[t] ^= (tab[t] if tab else (1 << t)) << shift
    else:
        for j in range(spec.k):
            shift = (spec.k - 1 - j) * w
            tab = mul_bit_table(gf_pow(i, j, w), w)
            for t in range(spec.ell):
                rows[t] ^= tab[t] << shift
    return tuple(rows)
