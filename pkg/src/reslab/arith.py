"""Integer and character arithmetic.

Kronecker symbols (d/n), fundamental discriminants, prime sieves,
square/squarefree decomposition, and the small multiplicative functions

    h(n)  = prod_{p | n} p/(p+1),          h(1) = 1
    g1(n0) = exp((log n0)^(1-eps))
    g2(n1) = sum_{q | n1} mu^2(q) q^(-(1/2+eps))

All functions are pure; the module keeps two read-only caches (a prime
table for trial division and per-prime quadratic-residue tables) that are
built once and shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError

# Trial-division prime table is allowed to grow to this many integers;
# factoring anything that needs larger primes is a resource error.
FACTOR_TABLE_CAP = 10_000_000
# Largest prime for which a quadratic-residue lookup table is kept in RAM.
QR_TABLE_LIMIT = 20_000
# Memory guards for the bulk sieves.
SIEVE_CAP = 10**12
ENUMERATION_CAP = 10**8

_SIGNS = ("positive", "negative", "both")


# ---------------------------------------------------------------------------
# prime sieves
# ---------------------------------------------------------------------------

def _simple_prime_mask(limit: int) -> np.ndarray:
    """Boolean primality mask for 0..limit."""
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p:: p] = False
    return mask


_prime_table = np.array([2, 3, 5, 7], dtype=np.int64)
_prime_table_limit = 10


def _primes_upto(limit: int) -> np.ndarray:
    """Cached ascending primes <= limit (grows geometrically, capped)."""
    global _prime_table, _prime_table_limit
    if limit > FACTOR_TABLE_CAP:
        raise ResourceError(
            f"prime table request {limit} exceeds cap {FACTOR_TABLE_CAP}")
    if limit > _prime_table_limit:
        new_limit = min(max(limit, 2 * _prime_table_limit), FACTOR_TABLE_CAP)
        _prime_table = np.flatnonzero(_simple_prime_mask(new_limit)).astype(np.int64)
        _prime_table_limit = new_limit
    return _prime_table[: int(np.searchsorted(_prime_table, limit, side="right"))]


def sieve_primes(lo: float, hi: float) -> np.ndarray:
    """All primes p with lo < p <= hi, ascending.

    Segmented, so large *values* are fine as long as hi stays below
    SIEVE_CAP; the endpoints may be arbitrary reals.
    """
    if not (hi >= lo >= 0):
        raise DomainError(f"need hi >= lo >= 0, got ({lo}, {hi})")
    if hi > SIEVE_CAP:
        raise ResourceError(f"sieve endpoint {hi} exceeds cap {SIEVE_CAP}")
    start = math.floor(lo) + 1          # smallest integer > lo
    end = math.floor(hi)                # largest integer <= hi
    if end < 2 or end < start:
        return np.empty(0, dtype=np.int64)
    start = max(start, 2)
    base = np.flatnonzero(_simple_prime_mask(math.isqrt(end))).astype(np.int64)
    out = []
    seg = 1 << 20
    for lo_seg in range(start, end + 1, seg):
        hi_seg = min(lo_seg + seg - 1, end)
        mask = np.ones(hi_seg - lo_seg + 1, dtype=bool)
        for p in base:
            p = int(p)
            first = max(p * p, ((lo_seg + p - 1) // p) * p)
            if first > hi_seg:
                continue
            mask[first - lo_seg:: p] = False
        if lo_seg <= 1:
            mask[: 2 - lo_seg] = False
        out.append(lo_seg + np.flatnonzero(mask))
    return np.concatenate(out).astype(np.int64) if out else np.empty(0, np.int64)


def squarefree_mask(limit: int) -> np.ndarray:
    """Boolean mask over 0..limit, True where the index is squarefree (>0)."""
    if limit > ENUMERATION_CAP:
        raise ResourceError(f"squarefree sieve limit {limit} exceeds cap")
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = False
    for p in range(2, math.isqrt(limit) + 1):
        p2 = p * p
        mask[p2:: p2] = False
    return mask


# ---------------------------------------------------------------------------
# Kronecker symbol and fundamental discriminants
# ---------------------------------------------------------------------------

# (d/2) by d mod 8 for odd d; 0 for even d.
_KRONECKER_MOD8 = (0, 1, 0, -1, 0, -1, 0, 1)


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for n >= 1.

    Completely multiplicative in n; zero exactly when gcd(n, d) > 1.
    """
    if n < 1:
        raise DomainError(f"kronecker defined for n >= 1, got n={n}")
    a, b = d, n
    if b == 1:
        return 1
    if a % 2 == 0 and b % 2 == 0:
        return 0
    result = 1
    # strip factors of 2 from b, each contributing (a/2)
    twos = 0
    while b % 2 == 0:
        b //= 2
        twos += 1
    if twos % 2 == 1:
        s = _KRONECKER_MOD8[a % 8]
        if s == 0:
            return 0
        result *= s
    # b now odd >= 1; fold in the sign of a
    if a < 0:
        a = -a
        if b % 4 == 3:
            result = -result
    a %= b
    # Jacobi loop with quadratic reciprocity
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if b % 8 in (3, 5):
                result = -result
        a, b = b, a
        if a % 4 == 3 and b % 4 == 3:
            result = -result
        a %= b
    return result if b == 1 else 0


def is_squarefree(n: int) -> bool:
    """True if n >= 1 has no repeated prime factor."""
    if n < 1:
        raise DomainError(f"squarefree test needs n >= 1, got {n}")
    if n < 4:
        return True
    m = n
    for p in _primes_upto(math.isqrt(n)):
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            m //= p
            if m % p == 0:
                return False
    return True


def is_fundamental_discriminant(d: int) -> bool:
    """True iff d indexes a real primitive character chi_d.

    Either d = 1 (mod 4) and squarefree, or d = 4m with m = 2, 3 (mod 4)
    squarefree.  d = 1 is accepted by convention; d = 0 is a domain error.
    """
    if d == 0:
        raise DomainError("d = 0 is not a discriminant")
    if d % 4 == 1:
        return is_squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        if m % 4 in (2, 3):
            return is_squarefree(abs(m))
    return False


def validate_fundamental(d: int) -> int:
    """Return d unchanged if fundamental, else raise DomainError."""
    if not is_fundamental_discriminant(d):
        raise DomainError(f"{d} is not a fundamental discriminant")
    return d


def enumerate_fundamental(lo: int, hi: int, signs: str = "both") -> np.ndarray:
    """Fundamental discriminants with lo < |d| <= hi, ascending by |d|,
    positive sign first on ties.

    An empty result is not an error; lo >= hi is.
    """
    if signs not in _SIGNS:
        raise DomainError(f"signs must be one of {_SIGNS}, got {signs!r}")
    if not (0 <= lo < hi):
        raise DomainError(f"need 0 <= lo < hi, got ({lo}, {hi})")
    if hi > ENUMERATION_CAP:
        raise ResourceError(f"enumeration bound {hi} exceeds cap {ENUMERATION_CAP}")
    sf = squarefree_mask(hi)
    n = np.arange(hi + 1, dtype=np.int64)
    mod4 = n & 3
    div4 = n >> 2
    sf_quarter = np.zeros(hi + 1, dtype=bool)
    q_ok = mod4 == 0
    sf_quarter[q_ok] = sf[div4[q_ok]]
    qmod4 = div4 & 3

    pos = ((mod4 == 1) & sf) | (q_ok & ((qmod4 == 2) | (qmod4 == 3)) & sf_quarter)
    neg = ((mod4 == 3) & sf) | (q_ok & ((qmod4 == 1) | (qmod4 == 2)) & sf_quarter)
    in_range = n > lo

    parts = []
    if signs in ("positive", "both"):
        parts.append(np.flatnonzero(pos & in_range).astype(np.int64))
    if signs in ("negative", "both"):
        parts.append(-np.flatnonzero(neg & in_range).astype(np.int64))
    d_all = np.concatenate(parts) if parts else np.empty(0, np.int64)
    order = np.lexsort((d_all < 0, np.abs(d_all)))
    return d_all[order]


# ---------------------------------------------------------------------------
# factorization-backed multiplicative functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SquareDecomposition:
    """n = n0 * n1**2 with n0 squarefree."""
    n0: int
    n1: int

    def __post_init__(self):
        if self.n0 < 1 or self.n1 < 1:
            raise DomainError("square decomposition needs positive parts")


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization [(p, e), ...] by trial division.

    Desk-scale guard: inputs needing trial primes beyond FACTOR_TABLE_CAP
    raise ResourceError.
    """
    if n < 1:
        raise DomainError(f"factorize needs n >= 1, got {n}")
    root = math.isqrt(n)
    if root > FACTOR_TABLE_CAP:
        raise ResourceError(f"factorization of {n} exceeds the trial-division cap")
    out = []
    m = n
    for p in _primes_upto(root):
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    if m > 1:
        out.append((m, 1))
    return out


def square_decompose(n: int) -> SquareDecomposition:
    """Split n = n0 * n1**2 with n0 squarefree."""
    n0 = n1 = 1
    for p, e in factorize(n):
        if e % 2:
            n0 *= p
        n1 *= p ** (e // 2)
    return SquareDecomposition(n0, n1)


def h_value(n: int) -> float:
    """Multiplicative h(n) = prod_{p|n} p/(p+1); h(1) = 1."""
    out = 1.0
    for p, _ in factorize(n):
        out *= p / (p + 1)
    return out


def _check_eps(eps: float) -> None:
    if not 0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 1/2), got {eps}")


def g1(n0: int, eps: float) -> float:
    """g1(n0) = exp((log n0)^(1-eps)) for squarefree n0 >= 1."""
    _check_eps(eps)
    if n0 < 1:
        raise DomainError(f"g1 needs n0 >= 1, got {n0}")
    return math.exp(math.log(n0) ** (1.0 - eps)) if n0 > 1 else 1.0


def g2(n1: int, eps: float) -> float:
    """g2(n1) = sum_{q | n1} mu^2(q) q^(-(1/2+eps)).

    Squarefree divisors only, so the sum collapses to the product
    prod_{p | n1} (1 + p^(-(1/2+eps))).
    """
    _check_eps(eps)
    if n1 < 1:
        raise DomainError(f"g2 needs n1 >= 1, got {n1}")
    out = 1.0
    for p, _ in factorize(n1):
        out *= 1.0 + p ** -(0.5 + eps)
    return out


# ---------------------------------------------------------------------------
# vectorized character evaluation
# ---------------------------------------------------------------------------

class CharacterSieve:
    """chi_d(n) for blocks of n and batches of d, as int8 arrays.

    Quadratic-residue lookup tables are kept for odd primes up to
    QR_TABLE_LIMIT; larger primes fall back to the scalar kronecker().
    Completely multiplicative values are filled bottom-up: composites are
    grouped by number of prime factors so each group is one vector op.
    """

    def __init__(self, n_max: int):
        if n_max < 1:
            raise DomainError("n_max must be >= 1")
        if n_max > 5_000_000:
            raise ResourceError(f"character sieve block {n_max} too large")
        self.n_max = n_max
        mask = _simple_prime_mask(n_max) if n_max >= 2 else np.zeros(2, bool)
        self.primes = np.flatnonzero(mask).astype(np.int64)

        # smallest prime factor and cofactor, for the multiplicative fill
        spf = np.zeros(n_max + 1, dtype=np.int64)
        for p in self.primes:
            p = int(p)
            s = spf[p::p]
            s[s == 0] = p
        self.spf = spf
        cof = np.zeros(n_max + 1, dtype=np.int64)
        cof[1:] = np.arange(1, n_max + 1) // np.maximum(spf[1:], 1)
        self.cof = cof

        omega = np.zeros(n_max + 1, dtype=np.int16)  # prime factors w/ mult.
        for n in range(2, n_max + 1):
            omega[n] = omega[cof[n]] + 1
        comp = np.flatnonzero((omega >= 2))
        self._comp_rounds = [comp[omega[comp] == r] for r in
                             range(2, int(omega.max()) + 1)] if n_max >= 4 else []

        # flat quadratic-residue tables for odd primes <= QR_TABLE_LIMIT
        small = self.primes[(self.primes > 2) & (self.primes <= QR_TABLE_LIMIT)]
        offsets = np.zeros(len(small), dtype=np.int64)
        total = 0
        chunks = []
        for i, p in enumerate(small):
            p = int(p)
            t = np.full(p, -1, dtype=np.int8)
            t[0] = 0
            r = np.arange(1, (p + 1) // 2, dtype=np.int64)
            t[(r * r) % p] = 1
            offsets[i] = total
            total += p
            chunks.append(t)
        self._qr_flat = np.concatenate(chunks) if chunks else np.empty(0, np.int8)
        self._qr_offsets = offsets
        self._qr_primes = small
        self._big_primes = self.primes[self.primes > QR_TABLE_LIMIT]

    def chi_primes(self, d_batch: np.ndarray) -> np.ndarray:
        """(len(d_batch), len(self.primes)) int8 array of chi_d(p)."""
        d = np.asarray(d_batch, dtype=np.int64).reshape(-1)
        cols = {}
        if len(self.primes) and self.primes[0] == 2:
            mod8 = np.asarray(_KRONECKER_MOD8, dtype=np.int8)[d % 8]
            mod8[d % 2 == 0] = 0
            cols[2] = mod8
        out = np.zeros((len(d), len(self.primes)), dtype=np.int8)
        j = 0
        if 2 in cols:
            out[:, 0] = cols[2]
            j = 1
        if len(self._qr_primes):
            mods = d[:, None] % self._qr_primes[None, :]
            out[:, j: j + len(self._qr_primes)] = \
                self._qr_flat[self._qr_offsets[None, :] + mods]
            j += len(self._qr_primes)
        for k, p in enumerate(self._big_primes):
            p = int(p)
            out[:, j + k] = [kronecker(int(dd), p) for dd in d]
        return out

    def chi_block(self, d_batch: np.ndarray, n_max: int | None = None) -> np.ndarray:
        """(len(d_batch), n_max+1) int8 array with chi_d(n) in column n."""
        n_max = self.n_max if n_max is None else n_max
        if n_max > self.n_max:
            raise DomainError("block exceeds sieve size")
        d = np.asarray(d_batch, dtype=np.int64).reshape(-1)
        chi = np.zeros((len(d), n_max + 1), dtype=np.int8)
        chi[:, 1] = 1
        keep = self.primes[self.primes <= n_max]
        chi[:, keep] = self.chi_primes(d)[:, : len(keep)]
        for group in self._comp_rounds:
            g = group[group <= n_max]
            if len(g):
                chi[:, g] = chi[:, self.spf[g]] * chi[:, self.cof[g]]
        return chi


_sieve_cache: dict[int, CharacterSieve] = {}


def character_sieve(n_max: int) -> CharacterSieve:
    """Shared CharacterSieve, grown in steps to limit rebuilds."""
    size = 1 << max(10, (n_max - 1).bit_length())
    if size not in _sieve_cache:
        _sieve_cache[size] = CharacterSieve(size)
    return _sieve_cache[size]


_legendre_cache: dict[int, np.ndarray] = {}


def chi_prime_batch(d_batch, p: int) -> np.ndarray:
    """chi_d(p) as int8 for an array of d at a single prime p.

    Residue-table lookup: for odd p this is the Legendre symbol of
    d mod p, for p = 2 the mod-8 table (0 on even d).
    """
    d = np.asarray(d_batch, dtype=np.int64)
    if p == 2:
        out = np.asarray(_KRONECKER_MOD8, dtype=np.int8)[d % 8]
        out[d % 2 == 0] = 0
        return out
    table = _legendre_cache.get(p)
    if table is None:
        table = np.full(p, -1, dtype=np.int8)
        table[0] = 0
        r = np.arange(1, (p + 1) // 2 + 1, dtype=np.int64)
        table[(r * r) % p] = 1
        _legendre_cache[p] = table
    return table[d % p]
