"""Resonator construction and its bound machinery.

The resonator is a multiplicative weight f supported on squarefree
products of primes from a window

    e * logN * log2N  <  p  <=  exp((log2N)^gamma) * logN * log2N,

split into layers P_k = (e^k L, e^(k+1) L] with L = logN * log2N.  The
support set M keeps the squarefree products whose per-layer prime count
stays below the threshold

    Delta_k = a * (logN)^(2-2*sigma) / (k^2 * (log3N)^(2-2*sigma)),

which makes M divisor closed.  ``log2``/``log3`` denote iterated natural
logarithms throughout.

Everything here is exact desk-scale arithmetic: layers and members are
enumerated, products are evaluated as compensated sums of logs, and the
proposition-level inequalities are reproduced as finite computations.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .arith import factorize, sieve_primes
from .errors import DomainError, NumericError, ResourceError

_E_MINUS_1 = math.e - 1.0

GAMMA_DEFAULT = 0.55
A_DEFAULT = 1.8
DELTA_DEFAULT = 0.9
EPS_DEFAULT = 0.04
M_CAP_DEFAULT = 10_000_000

_N_FLOOR = math.exp(math.e)   # log3 N must exist


def derive_sigma(N: int, A: float) -> float:
    """sigma = 1/2 + A / loglog(N)."""
    if N <= _N_FLOOR:
        raise DomainError(f"N must exceed e^e ~ 15.15, got {N}")
    if A < 0:
        raise DomainError(f"A must be nonnegative, got {A}")
    return 0.5 + A / math.log(math.log(N))


def lambda_A(A: float) -> float:
    """Exponent constant 1 / (2 (e-1) e^A)."""
    if A < 0:
        raise DomainError(f"A must be nonnegative, got {A}")
    return 1.0 / (2.0 * _E_MINUS_1 * math.exp(A))


THEOREM_X_FLOOR = 10_000


def theorem_lower_bound(X: int, A: float) -> float:
    """Asymptotic baseline exp(lambda(A) sqrt(logX log3X / log2X)).

    The o(1) term is dropped; reports label this value "asymptotic
    baseline".  X below 10^4 is rejected so the iterated logs are
    comfortably defined.
    """
    if X < THEOREM_X_FLOOR:
        raise DomainError(f"X must be >= {THEOREM_X_FLOOR}, got {X}")
    lx = math.log(X)
    llx = math.log(lx)
    lllx = math.log(llx)
    return math.exp(lambda_A(A) * math.sqrt(lx * lllx / llx))


def find_optimal_b(a: float) -> float:
    """Minimizer b* = a/(e-1) of b -> (e-1)(b-1) - a log(b), for a > e-1."""
    if a <= _E_MINUS_1:
        raise DomainError(f"a must exceed e-1 ~ 1.71828, got {a}")
    return a / _E_MINUS_1


def chernoff_exponent_coefficient(a: float, b: float) -> float:
    """(e-1)(b-1) - a*log(b): negative iff the layer tail bound is useful."""
    if b <= 1:
        raise DomainError(f"b must exceed 1, got {b}")
    return _E_MINUS_1 * (b - 1.0) - a * math.log(b)


@dataclass(frozen=True)
class ResonatorConfig:
    """All resonator parameters in one validated record.

    sigma is derived (1/2 + A/log2N), never set independently.  Defaults:
    gamma = 0.55 keeps a = 1.8 inside the required window
    e-1 < a < 1/gamma; b defaults to the optimal a/(e-1).
    """
    N: int
    A: float
    gamma: float = GAMMA_DEFAULT
    a: float = A_DEFAULT
    delta: float = DELTA_DEFAULT
    eps: float = EPS_DEFAULT
    b: float | None = None
    m_cap: int = M_CAP_DEFAULT

    def __post_init__(self):
        if self.N <= _N_FLOOR:
            raise DomainError(f"N must exceed e^e ~ 15.15, got {self.N}")
        if self.A < 0:
            raise DomainError(f"A must be nonnegative, got {self.A}")
        if not 0 < self.gamma < 1.0 / _E_MINUS_1:
            raise DomainError(
                f"gamma must lie in (0, 1/(e-1) ~ 0.58198), got {self.gamma}")
        if not _E_MINUS_1 < self.a < 1.0 / self.gamma:
            raise DomainError(
                f"a must lie in (e-1, 1/gamma = {1.0 / self.gamma:.6f}), "
                f"got {self.a}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.eps < 0.05:
            raise DomainError(f"eps must lie in (0, 1/20), got {self.eps}")
        if self.b is None:
            object.__setattr__(self, "b", find_optimal_b(self.a))
        elif self.b <= 1:
            raise DomainError(f"b must exceed 1, got {self.b}")
        if self.m_cap < 1:
            raise DomainError("m_cap must be positive")

    @property
    def log_n(self) -> float:
        return math.log(self.N)

    @property
    def log2_n(self) -> float:
        return math.log(self.log_n)

    @property
    def log3_n(self) -> float:
        return math.log(self.log2_n)

    @property
    def sigma(self) -> float:
        return 0.5 + self.A / self.log2_n

    @property
    def p_window(self) -> tuple[float, float]:
        """(lower, upper] endpoints of the prime window."""
        scale = self.log_n * self.log2_n
        return math.e * scale, math.exp(self.log2_n ** self.gamma) * scale


@dataclass(frozen=True)
class Layer:
    k: int
    lo: float                 # exclusive
    hi: float                 # inclusive
    primes: tuple[int, ...]
    delta_k: float

    @property
    def cap(self) -> int:
        """Largest admissible per-member prime count: count < delta_k,
        i.e. count <= ceil(delta_k) - 1."""
        return max(0, math.ceil(self.delta_k) - 1)


@dataclass(frozen=True)
class PrimeLayers:
    """The prime window and its layer decomposition."""
    config: ResonatorConfig
    p_lo: float
    p_hi: float
    layers: tuple[Layer, ...]
    diagnostics: tuple[str, ...] = ()

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for layer in self.layers for p in layer.primes)

    @property
    def degenerate(self) -> bool:
        return all(not layer.primes for layer in self.layers)


def delta_threshold(cfg: ResonatorConfig, k: int) -> float:
    """Delta_k = a (logN)^(2-2s) / (k^2 (log3N)^(2-2s))."""
    if k < 1:
        raise DomainError(f"layer index must be >= 1, got {k}")
    expo = 2.0 - 2.0 * cfg.sigma
    return cfg.a * cfg.log_n ** expo / (k * k * cfg.log3_n ** expo)


def build_prime_layers(cfg: ResonatorConfig) -> PrimeLayers:
    """Sieve the prime window and split it into layers.

    An empty window is a structured "degenerate resonator" outcome, not
    an error.  Any Delta_k < 2 is reported in diagnostics (at such k the
    layer contributes at most one prime per member, or none at all);
    thresholds are never clamped.
    """
    p_lo, p_hi = cfg.p_window
    scale = cfg.log_n * cfg.log2_n
    n_layers = int(math.floor(cfg.log2_n ** cfg.gamma))
    primes = sieve_primes(p_lo, p_hi)
    layers = []
    diagnostics = []
    for k in range(1, n_layers + 1):
        lo_k = math.exp(k) * scale
        hi_k = p_hi if k == n_layers else min(math.exp(k + 1) * scale, p_hi)
        in_layer = primes[(primes > lo_k) & (primes <= hi_k)]
        dk = delta_threshold(cfg, k)
        if dk < 2:
            diagnostics.append(
                f"layer {k}: Delta_k = {dk:.6f} < 2 "
                f"(members admit at most {max(0, math.ceil(dk) - 1)} primes here)")
        layers.append(Layer(k=k, lo=lo_k, hi=hi_k,
                            primes=tuple(int(p) for p in in_layer), delta_k=dk))
    out = PrimeLayers(config=cfg, p_lo=p_lo, p_hi=p_hi,
                      layers=tuple(layers), diagnostics=tuple(diagnostics))
    if out.degenerate:
        object.__setattr__(
            out, "diagnostics",
            out.diagnostics + (
                f"degenerate resonator: no primes in ({p_lo:.3f}, {p_hi:.3f}]",))
    return out


def f_value(p: int, cfg: ResonatorConfig) -> float:
    """Resonator weight at a prime: the window formula inside the prime
    window, exactly 0 outside it."""
    if p < 2 or factorize(p) != [(p, 1)]:
        raise DomainError(f"f_value expects a prime, got {p}")
    p_lo, p_hi = cfg.p_window
    if not p_lo < p <= p_hi:
        return 0.0
    s = cfg.sigma
    prefactor = cfg.log_n ** (1.0 - s) * cfg.log2_n ** s / cfg.log3_n ** (1.0 - s)
    denom = p ** s * (math.log(p) - cfg.log2_n - cfg.log3_n)
    return prefactor / denom


@dataclass(frozen=True, eq=False)
class ResonatorSet:
    """The support set M with weights f(m), plus the layer data that
    generated it (enough to recompute member values without the list)."""
    layer_primes: tuple[tuple[int, ...], ...]
    layer_caps: tuple[int, ...]
    f_by_prime: dict[int, float]
    members: tuple[int, ...]          # sorted ascending
    weights: np.ndarray               # f(m), aligned with members
    sum_f_sq: float                   # sum of f(m)^2 over members

    @property
    def size(self) -> int:
        return len(self.members)

    def member_set(self) -> frozenset:
        return frozenset(self.members)


def trivial_resonator() -> ResonatorSet:
    """M = {1} with weight 1 (R_d is then identically 1)."""
    return ResonatorSet(layer_primes=(), layer_caps=(), f_by_prime={},
                        members=(1,), weights=np.ones(1), sum_f_sq=1.0)


def synthetic_resonator(layer_primes, layer_caps, f_by_prime) -> ResonatorSet:
    """Build a ResonatorSet from explicit layers, caps and weights.

    Intended for tests and small experiments; enumerates members the
    same way build_M does.
    """
    members, weights = _enumerate_members(layer_primes, layer_caps, f_by_prime)
    return ResonatorSet(
        layer_primes=tuple(tuple(lp) for lp in layer_primes),
        layer_caps=tuple(layer_caps),
        f_by_prime=dict(f_by_prime),
        members=members, weights=weights,
        sum_f_sq=float(math.fsum(w * w for w in weights)))


def _enumerate_members(layer_primes, layer_caps, f_by_prime):
    """Cross product of per-layer squarefree selections under the caps."""
    per_layer = []
    for primes, cap in zip(layer_primes, layer_caps):
        choices = [(1, 1.0)]
        for j in range(1, min(cap, len(primes)) + 1):
            for combo in itertools.combinations(primes, j):
                m = 1
                w = 1.0
                for p in combo:
                    m *= p
                    w *= f_by_prime[p]
                choices.append((m, w))
        per_layer.append(choices)
    members = [1]
    weights = [1.0]
    for choices in per_layer:
        new_m = []
        new_w = []
        for (m, w) in zip(members, weights):
            for (dm, dw) in choices:
                new_m.append(m * dm)
                new_w.append(w * dw)
        members, weights = new_m, new_w
    order = sorted(range(len(members)), key=members.__getitem__)
    members = tuple(members[i] for i in order)
    weights = np.array([weights[i] for i in order], dtype=np.float64)
    return members, weights


def expected_member_count(layers: PrimeLayers) -> int:
    """|M| predicted from the per-layer caps, without enumerating."""
    total = 1
    for layer in layers.layers:
        n = len(layer.primes)
        cap = min(layer.cap, n)
        total *= sum(math.comb(n, j) for j in range(cap + 1))
    return total


def build_M(cfg: ResonatorConfig, layers: PrimeLayers) -> ResonatorSet:
    """Enumerate M with weights; degenerate layers give M = {1}.

    The member count is computed up front from the caps and checked
    against cfg.m_cap before any enumeration happens.
    """
    count = expected_member_count(layers)
    if count > cfg.m_cap:
        sizes = {layer.k: (len(layer.primes), min(layer.cap, len(layer.primes)))
                 for layer in layers.layers}
        raise ResourceError(
            f"|M| = {count} exceeds m_cap = {cfg.m_cap} "
            f"(per-layer (primes, cap): {sizes})")
    layer_primes = tuple(layer.primes for layer in layers.layers)
    layer_caps = tuple(min(layer.cap, len(layer.primes)) for layer in layers.layers)
    f_by_prime = {p: f_value(p, cfg) for p in layers.primes}
    members, weights = _enumerate_members(layer_primes, layer_caps, f_by_prime)
    return ResonatorSet(layer_primes=layer_primes, layer_caps=layer_caps,
                        f_by_prime=f_by_prime, members=members, weights=weights,
                        sum_f_sq=float(math.fsum(w * w for w in weights)))


# ---------------------------------------------------------------------------
# amplification product and proposition-level machinery
# ---------------------------------------------------------------------------

def _prime_terms(cfg: ResonatorConfig, layers: PrimeLayers):
    """(p, f, h, p^-sigma) for every window prime."""
    s = cfg.sigma
    out = []
    for p in layers.primes:
        f = f_value(p, cfg)
        out.append((p, f, p / (p + 1.0), p ** (-s)))
    return out


def a_n_log_terms(cfg: ResonatorConfig, layers: PrimeLayers) -> np.ndarray:
    """log of each Euler factor (1 + f^2 h + f h p^-s) / (1 + f^2)."""
    terms = []
    for p, f, h, pms in _prime_terms(cfg, layers):
        factor = (1.0 + f * f * h + f * h * pms) / (1.0 + f * f)
        if factor < 1.0:
            raise NumericError(
                f"amplification factor below 1 at p={p}: {factor!r}")
        terms.append(math.log(factor))
    return np.array(terms, dtype=np.float64)


def compute_A_N(cfg: ResonatorConfig, layers: PrimeLayers) -> float:
    """Amplification A_N as exp of a compensated sum of log factors.

    Empty window: empty product = 1.
    """
    return math.exp(math.fsum(a_n_log_terms(cfg, layers)))


def compute_A_N_direct(cfg: ResonatorConfig, layers: PrimeLayers) -> float:
    """Plain running product over the same factors (consistency check)."""
    out = 1.0
    for p, f, h, pms in _prime_terms(cfg, layers):
        out *= (1.0 + f * f * h + f * h * pms) / (1.0 + f * f)
    return out


def prop31_bound(cfg: ResonatorConfig) -> float:
    """delta*gamma*(logN)^(1-s) (log3N)^s (log2N)^(-s): the lower-bound
    exponent for log A_N with the o(1) dropped."""
    s = cfg.sigma
    return cfg.delta * cfg.gamma * cfg.log_n ** (1.0 - s) \
        * cfg.log3_n ** s * cfg.log2_n ** (-s)


def chirre_layer_sum(k: int, layers: PrimeLayers, sigma: float) -> float:
    """Exact sum of p^(-2*sigma) over layer k (nonempty required)."""
    match = [layer for layer in layers.layers if layer.k == k]
    if not match or not match[0].primes:
        raise DomainError(f"layer {k} is missing or empty")
    return math.fsum(p ** (-2.0 * sigma) for p in match[0].primes)


def chirre_layer_report(layers: PrimeLayers) -> list[dict]:
    """Per-layer record of the exact sum against (log2N)^(-2*sigma):
    the ratio is the effective delta at this N."""
    cfg = layers.config
    s = cfg.sigma
    scale = cfg.log2_n ** (-2.0 * s)
    out = []
    for layer in layers.layers:
        if not layer.primes:
            out.append({"k": layer.k, "sum": 0.0, "scale": scale,
                        "effective_delta": 0.0, "delta_k": layer.delta_k,
                        "n_primes": 0})
            continue
        val = chirre_layer_sum(layer.k, layers, s)
        out.append({"k": layer.k, "sum": val, "scale": scale,
                    "effective_delta": val / scale, "delta_k": layer.delta_k,
                    "n_primes": len(layer.primes)})
    return out


def prop32_chernoff(cfg: ResonatorConfig, layers: PrimeLayers, k: int,
                    b: float | None = None) -> float:
    """Layer-k tail bound b^(-Delta_k) * exp((b-1) sum_{p in P_k} f(p)^2),
    valid for any b > 1."""
    b = cfg.b if b is None else b
    if b <= 1:
        raise DomainError(f"b must exceed 1, got {b}")
    match = [layer for layer in layers.layers if layer.k == k]
    if not match:
        raise DomainError(f"no layer with index {k}")
    layer = match[0]
    fsq = math.fsum(f_value(p, cfg) ** 2 for p in layer.primes)
    return b ** (-layer.delta_k) * math.exp((b - 1.0) * fsq)


def prop32_chernoff_budget(cfg: ResonatorConfig, layers: PrimeLayers) -> float:
    """Exact finite-size comparator for prop32_exact_ratio.

    Chain (all steps exact at finite N): the excluded mass factors over
    layers; inside layer k the divisor sum is at most
    prod(1 + 1/(f p^s)), the layer tail obeys the Chernoff bound, and
    the normalizing product prod(1 + f^2 h + f h p^-s) is split into its
    layer-k part and the rest.  Summing over k gives

      ratio <= sum_k chernoff_k * prod_{p in P_k}
               (1 + f^2)(1 + 1/(f p^s)) / (1 + f^2 h + f h p^-s).
    """
    s = cfg.sigma
    total = 0.0
    for layer in layers.layers:
        if not layer.primes:
            continue
        log_corr = 0.0
        for p in layer.primes:
            f = f_value(p, cfg)
            h = p / (p + 1.0)
            pms = p ** (-s)
            v = 1.0 + f * f * h + f * h * pms
            log_corr += math.log((1.0 + f * f) * (1.0 + 1.0 / (f * p ** s)) / v)
        total += prop32_chernoff(cfg, layers, layer.k) * math.exp(log_corr)
    return total


_EXACT_ENUM_PRIME_CAP = 25


def _check_enum_guard(layers: PrimeLayers) -> list[tuple[int, float, int]]:
    """Window primes as (p, f(p), layer_index); guard |P| <= 25."""
    cfg = layers.config
    prime_info = []
    for li, layer in enumerate(layers.layers):
        for p in layer.primes:
            prime_info.append((p, f_value(p, cfg), li))
    if len(prime_info) > _EXACT_ENUM_PRIME_CAP:
        raise ResourceError(
            f"exact enumeration guard: |P| = {len(prime_info)} > "
            f"{_EXACT_ENUM_PRIME_CAP}")
    return prime_info


def prop32_exact_ratio(cfg: ResonatorConfig, layers: PrimeLayers) -> float:
    """Exact excluded-mass ratio, as a ratio to A_N.

    Enumerates every squarefree product n of window primes; n outside M
    contributes f(n) h(n) n^-s * sum_{q|n} f(q) q^s.  The result is
    divided by sum_over_support f(n)^2 and by A_N.
    """
    prime_info = _check_enum_guard(layers)
    s = cfg.sigma
    caps = [min(layer.cap, len(layer.primes)) for layer in layers.layers]
    # per-prime in-n weight with the divisor sum folded in:
    # f h p^-s * (1 + f p^s) summed over q|n choices
    term_w = [f * (p / (p + 1.0)) * p ** (-s) * (1.0 + f * p ** s)
              for p, f, _ in prime_info]
    excluded = [0.0]

    def rec(i, counts, prod):
        if i == len(prime_info):
            if any(c > caps[li] for li, c in enumerate(counts)):
                excluded[0] += prod
            return
        rec(i + 1, counts, prod)
        _, _, li = prime_info[i]
        counts[li] += 1
        rec(i + 1, counts, prod * term_w[i])
        counts[li] -= 1

    rec(0, [0] * len(layers.layers), 1.0)
    sum_f_sq_support = math.exp(math.fsum(
        math.log1p(f * f) for _, f, _ in prime_info))
    return excluded[0] / sum_f_sq_support / compute_A_N(cfg, layers)


def prop33_exact_ratio(cfg: ResonatorConfig, layers: PrimeLayers) -> float:
    """Exact small-divisor mass ratio, as a ratio to A_N.

    Over every squarefree product n of window primes (the whole support,
    M membership does not matter here), sums
    f(n) h(n) n^-s * sum_{q | n, q <= n/N^eps} f(q) q^s.
    Cost grows like 3^|P|; the |P| <= 25 guard applies.
    """
    prime_info = _check_enum_guard(layers)
    s = cfg.sigma
    n_eps = float(cfg.N) ** cfg.eps
    ps = [p for p, _, _ in prime_info]
    fs = [f for _, f, _ in prime_info]
    total = [0.0]

    def rec_n(i, n_val, fh_ns):
        if i == len(ps):
            if n_val == 1:
                return  # only divisor q = 1 and 1 <= 1/N^eps fails
            inner = [0.0]
            idx = [j for j in range(len(ps)) if (n_val % ps[j]) == 0]

            def rec_q(t, q_val, fq_qs):
                if t == len(idx):
                    if q_val * n_eps <= n_val:
                        inner[0] += fq_qs
                    return
                rec_q(t + 1, q_val, fq_qs)
                j = idx[t]
                rec_q(t + 1, q_val * ps[j], fq_qs * fs[j] * ps[j] ** s)

            rec_q(0, 1, 1.0)
            total[0] += fh_ns * inner[0]
            return
        rec_n(i + 1, n_val, fh_ns)
        p, f = ps[i], fs[i]
        rec_n(i + 1, n_val * p, fh_ns * f * (p / (p + 1.0)) * p ** (-s))

    rec_n(0, 1, 1.0)
    sum_f_sq_support = math.exp(math.fsum(math.log1p(f * f) for f in fs))
    return total[0] / sum_f_sq_support / compute_A_N(cfg, layers)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def resonator_to_csv(rset: ResonatorSet, path) -> None:
    """Write the member table as CSV with header ``m,f`` (17 significant
    digits, round-trip safe)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "f"])
        for m, w in zip(rset.members, rset.weights):
            writer.writerow([m, f"{w:.17g}"])


def resonator_table_from_csv(path) -> list[tuple[int, float]]:
    """Read back a ``m,f`` table written by resonator_to_csv."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["m", "f"]:
            raise DomainError(f"unexpected resonator CSV header: {header}")
        for row in reader:
            out.append((int(row[0]), float(row[1])))
    return out
