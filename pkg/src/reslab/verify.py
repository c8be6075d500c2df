"""Empirical verification harness.

Three families of checks:

* character-sum averages over fundamental discriminants (the square /
  non-square dichotomy with its desk-scale regression envelopes),
* AFE-versus-oracle agreement and the smoothing-integral properties,
* the structural invariants of every other module, bundled into a
  machine-readable property suite (quick <= ~1 min, full well under
  30 min).

Failures are data, not exceptions: each suite record carries a status
(pass / fail / flag) and a witness string.  "flag" marks properties the
desk-scale regime is expected to distort (pre-asymptotic sizes, sanity
bands); it does not fail the suite.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import arith, lfun, resonance, resonator
from .errors import DomainError, ResourceError

ZETA2 = math.pi ** 2 / 6.0

LEMMA_X_CAP = 10_000_000

# desk-scale regression envelopes for the dichotomy checks, frozen from
# the pilot enumeration (they are looser than the observed deviations)
SQUARE_REL_TOL = 0.01
NONSQUARE_REL_TOL = 0.01
NONSQUARE_EXPONENT = 0.75

# resolved-negative threshold for the positivity audit: values between
# -1e-13 and 0 are indistinguishable from quadrature roundoff
POSITIVITY_FLOOR = -1e-13


# ---------------------------------------------------------------------------
# character-sum average checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaCheckRecord:
    """One character-sum average: exact lhs vs main term and error scale."""
    n: int
    X: int
    lhs: int          # exact integer sum of chi_d(n) over |d| <= X
    main: float       # X/zeta(2) * prod_{p|n} p/(p+1) if n is a square, else 0
    abs_err: float
    err_scale: float  # X^(1/2+eps) * g1(n0) * g2(n1)


def _exact_character_sum(n: int, d_all: np.ndarray) -> int:
    """Integer-exact sum of chi_d(n) over the given discriminants."""
    acc = np.ones(len(d_all), dtype=np.int8)
    for p, e in arith.factorize(n):
        cp = arith.chi_prime_batch(d_all, p)
        acc = acc * (cp if e % 2 else cp * cp)
    return int(np.sum(acc, dtype=np.int64))


def check_lemma21(n: int, X: int, eps: float = 0.04) -> LemmaCheckRecord:
    """Exact average of chi_d(n) over fundamental |d| <= X.

    The main term is X/zeta(2) * prod_{p|n} p/(p+1) when n is a perfect
    square and 0 otherwise; err_scale records the theoretical error
    envelope X^(1/2+eps) g1(n0) g2(n1) for n = n0 * n1^2.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if X > LEMMA_X_CAP:
        raise ResourceError(f"X={X} exceeds the enumeration guard {LEMMA_X_CAP}")
    d_all = arith.enumerate_fundamental(0, X, "both")
    lhs = _exact_character_sum(n, d_all)
    dec = arith.square_decompose(n)
    is_square = dec.n0 == 1
    main = (X / ZETA2) * arith.h_value(n) if is_square else 0.0
    err_scale = X ** (0.5 + eps) * arith.g1(dec.n0, eps) * arith.g2(dec.n1, eps)
    return LemmaCheckRecord(n=n, X=X, lhs=lhs, main=main,
                            abs_err=abs(lhs - main), err_scale=err_scale)


# ---------------------------------------------------------------------------
# AFE and smoothing-integral checks
# ---------------------------------------------------------------------------

@dataclass
class AfeCheckResult:
    max_rel_err: float
    witness_d: int | None
    witness_alpha: float | None
    n_evaluations: int
    sample: tuple[int, ...]


def check_afe(sample_size: int, d_range: tuple[int, int], alphas,
              lcfg: lfun.AfeConfig = lfun.DEFAULT_AFE,
              seed: int = 0) -> AfeCheckResult:
    """Worst relative deviation of the AFE from the Hurwitz-zeta oracle.

    Samples positive fundamental d uniformly (seeded) from the range and
    compares L_afe against L_exact at every alpha.  An empty alpha list
    is a vacuous success.
    """
    lo, hi = d_range
    if hi > lfun.L_EXACT_DISC_CAP:
        raise ResourceError(f"d range exceeds the oracle guard: {d_range}")
    pool = arith.enumerate_fundamental(max(0, lo - 1), hi, "positive")
    if len(pool) == 0:
        raise DomainError(f"no fundamental discriminants in {d_range}")
    rng = np.random.default_rng(seed)
    take = min(sample_size, len(pool))
    sample = np.sort(rng.choice(pool, size=take, replace=False))
    worst = 0.0
    wd = None
    wa = None
    count = 0
    for a in alphas:
        l_fast = lfun.l_afe_batch(sample, a, lcfg)
        for d, lf in zip(sample, l_fast):
            le = lfun.L_exact(0.5 + a, int(d))
            rel = abs(lf - le) / abs(le)
            count += 1
            if rel > worst:
                worst, wd, wa = rel, int(d), a
    return AfeCheckResult(max_rel_err=worst, witness_d=wd, witness_alpha=wa,
                          n_evaluations=count, sample=tuple(int(x) for x in sample))


@dataclass
class UCheckRecord:
    alpha: float
    small_dev: float          # |U(1e-6) - 1|
    large_abs: float          # |U(40)|
    refine_delta: float       # worst change under half step / double range
    min_on_grid: float
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def check_U(alphas, lcfg: lfun.AfeConfig = lfun.DEFAULT_AFE) -> list[UCheckRecord]:
    """Audit of the smoothing integral on a 64-point log grid [1e-6, 40].

    Asserts |U(1e-6) - 1| <= 1e-3, |U(40)| <= 1e-15, refinement
    stability <= 1e-9, and positivity (a value below -1e-13 counts as a
    resolved violation; closer to zero is quadrature noise).
    """
    refined = lfun.AfeConfig(kernel=lcfg.kernel, quad_line=lcfg.quad_line,
                             quad_step=lcfg.quad_step / 2.0,
                             quad_tmax=lcfg.quad_tmax * 2.0,
                             term_cutoff=lcfg.term_cutoff,
                             max_terms=lcfg.max_terms)
    grid = np.geomspace(1e-6, 40.0, 64)
    out = []
    for a in alphas:
        vals = lfun.U_alpha(grid, a, lcfg)
        vals_ref = lfun.U_alpha(grid, a, refined)
        small = abs(lfun.U_alpha(1e-6, a, lcfg) - 1.0)
        large = abs(lfun.U_alpha(40.0, a, lcfg))
        refine = float(np.max(np.abs(vals - vals_ref)))
        rec = UCheckRecord(alpha=a, small_dev=small, large_abs=large,
                           refine_delta=refine, min_on_grid=float(vals.min()))
        if small > 1e-3:
            rec.failures.append(
                f"|U(1e-6) - 1| = {small:.6e} > 1e-3 at alpha={a}")
        if large > 1e-15:
            rec.failures.append(f"|U(40)| = {large:.3e} > 1e-15 at alpha={a}")
        if refine > 1e-9:
            rec.failures.append(
                f"refinement delta {refine:.3e} > 1e-9 at alpha={a}")
        resolved_neg = vals < POSITIVITY_FLOOR
        if resolved_neg.any():
            x_bad = grid[resolved_neg][0]
            rec.failures.append(
                f"U({x_bad:.6g}) = {vals[resolved_neg][0]:.3e} < 0 at alpha={a}")
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# the property suite
# ---------------------------------------------------------------------------

@dataclass
class SuiteRecord:
    invariant_id: str
    module: str
    status: str            # "pass" | "fail" | "flag"
    witness: str
    elapsed_ms: float

    def to_json_dict(self) -> dict:
        return {"invariant_id": self.invariant_id, "module": self.module,
                "status": self.status, "witness": self.witness,
                "elapsed_ms": self.elapsed_ms}


@dataclass
class SuiteReport:
    level: str
    records: list[SuiteRecord]

    @property
    def all_passed(self) -> bool:
        return all(r.status != "fail" for r in self.records)

    def to_json(self) -> str:
        return json.dumps({
            "level": self.level,
            "all_passed": self.all_passed,
            "records": [r.to_json_dict() for r in self.records],
        }, indent=2)


class _SuiteContext:
    """Shared artifacts, built lazily once per suite run."""

    def __init__(self, level: str):
        self.level = level
        self.full = level == "full"
        self._cache: dict = {}

    def resonator_main(self):
        """Default desk resonator: N = 10^6, A = 1."""
        if "res_main" not in self._cache:
            cfg = resonator.ResonatorConfig(N=10 ** 6, A=1.0)
            layers = resonator.build_prime_layers(cfg)
            rset = resonator.build_M(cfg, layers)
            self._cache["res_main"] = (cfg, layers, rset)
        return self._cache["res_main"]

    def resonator_small(self):
        """Small window (|P| = 8 at N = 5000) for exact enumerations."""
        if "res_small" not in self._cache:
            cfg = resonator.ResonatorConfig(N=5000, A=1.0)
            layers = resonator.build_prime_layers(cfg)
            rset = resonator.build_M(cfg, layers)
            self._cache["res_small"] = (cfg, layers, rset)
        return self._cache["res_small"]

    def scan_small(self):
        """X = 10^4 exhaustive scan with the main resonator."""
        if "scan_small" not in self._cache:
            _, _, rset = self.resonator_main()
            cfg = resonance.ScanConfig(X=10 ** 4, A=1.0)
            self._cache["scan_small"] = (cfg, rset, resonance.scan_max(cfg, rset))
        return self._cache["scan_small"]


def _fundamental_sample(limit: int) -> np.ndarray:
    return arith.enumerate_fundamental(1, limit, "both")


# --- arith invariants -------------------------------------------------------

def _inv_kronecker_multiplicative(ctx: _SuiteContext):
    d_limit, nm_limit = (100, 1000) if ctx.full else (30, 200)
    sieve = arith.character_sieve(nm_limit * nm_limit)
    nm = np.arange(1, nm_limit + 1)
    prod_idx = np.outer(nm, nm)
    for d in _fundamental_sample(d_limit):
        chi = sieve.chi_block(np.array([d]), nm_limit * nm_limit)[0]
        lhs = chi[prod_idx]
        rhs = np.outer(chi[1: nm_limit + 1], chi[1: nm_limit + 1])
        if not np.array_equal(lhs, rhs):
            bad = np.argwhere(lhs != rhs)[0]
            return "fail", (f"chi_{d}({bad[0]+1}*{bad[1]+1}) != "
                            f"chi_{d}({bad[0]+1})*chi_{d}({bad[1]+1})")
    return "pass", f"all d with |d|<={d_limit}, n,m<={nm_limit}"


def _inv_kronecker_periodic(ctx: _SuiteContext):
    d_limit = 300 if ctx.full else 60
    for d in _fundamental_sample(d_limit):
        q = abs(int(d))
        span = 4 * q
        chi = arith.character_sieve(span + q).chi_block(np.array([d]), span + q)[0]
        if not np.array_equal(chi[1: span + 1], chi[1 + q: span + q + 1]):
            return "fail", f"chi_{d} not {q}-periodic"
    return "pass", f"period |d| verified for |d| <= {d_limit}"


def _inv_kronecker_zero_iff_gcd(ctx: _SuiteContext):
    for d in range(-200, 201):
        if d == 0:
            continue
        for n in range(1, 201):
            if (arith.kronecker(d, n) == 0) != (math.gcd(n, abs(d)) > 1):
                return "fail", f"zero pattern wrong at (d={d}, n={n})"
    return "pass", "exhaustive |d| <= 200, n <= 200"


def _inv_chi_primitive(ctx: _SuiteContext):
    d_limit = 500 if ctx.full else 100
    for d in _fundamental_sample(d_limit):
        d = int(d)
        q = abs(d)
        if q == 1:
            continue
        chi = [arith.kronecker(d, n) for n in range(1, q + 1)]
        for n in range(1, q + 1):
            if (chi[n - 1] != 0) != (math.gcd(n, q) == 1):
                return "fail", f"support of chi_{d} is not the units mod {q}"
        divisors = sorted({a for a, _ in _divisor_pairs(q)} - {q})
        for qp in divisors:
            if not any(chi[n - 1] != 1 for n in range(1, q + 1)
                       if n % qp == 1 and math.gcd(n, q) == 1):
                return "fail", f"chi_{d} factors through modulus {qp}"
    return "pass", f"primitive real character verified for |d| <= {d_limit}"


def _divisor_pairs(q: int):
    out = []
    for a in range(1, math.isqrt(q) + 1):
        if q % a == 0:
            out.append((a, q // a))
            out.append((q // a, a))
    return out


def _inv_enumeration_matches_filter(ctx: _SuiteContext):
    limit = 10 ** 5 if ctx.full else 10 ** 4
    enum = set(int(x) for x in arith.enumerate_fundamental(0, limit, "both"))
    direct = set()
    for n in range(1, limit + 1):
        if arith.is_fundamental_discriminant(n):
            direct.add(n)
        if arith.is_fundamental_discriminant(-n):
            direct.add(-n)
    if enum != direct:
        diff = (enum ^ direct)
        return "fail", f"{len(diff)} mismatches, e.g. {sorted(diff)[:5]}"
    return "pass", f"{len(enum)} discriminants agree on (0, {limit}]"


def _inv_g2_submultiplicative(ctx: _SuiteContext):
    limit = 10 ** 4 if ctx.full else 10 ** 3
    eps = 0.1
    vals = np.empty(limit + 1)
    vals[1] = 1.0
    for n in range(2, limit + 1):
        vals[n] = arith.g2(n, eps)
    for x in range(2, limit + 1):
        for y in range(2, limit // x + 1):
            if vals[x * y] > vals[x] * vals[y] * (1 + 1e-12):
                return "fail", f"g2({x}*{y}) > g2({x})*g2({y})"
    return "pass", f"all pairs with x*y <= {limit}"


# --- lfun invariants --------------------------------------------------------

_U_ALPHAS = (0.0, 0.01, 0.1)


def _inv_u_decay_large(ctx: _SuiteContext):
    worst = max(abs(lfun.U_alpha(40.0, a)) for a in _U_ALPHAS)
    status = "pass" if worst <= 1e-15 else "fail"
    return status, f"max |U(40)| = {worst:.3e} (tol 1e-15)"


def _inv_u_value_small_arg(ctx: _SuiteContext):
    """Known-red at alpha in {0, 0.01}: the small-x expansion of U has
    leading coefficient ~1.47 for any admissible kernel, so
    |U(1e-6) - 1| ~ 1.47e-3 exceeds the 1e-3 envelope."""
    worst = max(abs(lfun.U_alpha(1e-6, a) - 1.0) for a in _U_ALPHAS)
    status = "pass" if worst <= 1e-3 else "fail"
    return status, f"max |U(1e-6) - 1| = {worst:.4e} (tol 1e-3)"


def _inv_u_refinement(ctx: _SuiteContext):
    recs = check_U(_U_ALPHAS)
    worst = max(r.refine_delta for r in recs)
    status = "pass" if worst <= 1e-9 else "fail"
    return status, f"max refinement delta = {worst:.3e} (tol 1e-9)"


def _inv_u_positive(ctx: _SuiteContext):
    recs = check_U(_U_ALPHAS)
    low = min(r.min_on_grid for r in recs)
    status = "pass" if low > POSITIVITY_FLOOR else "fail"
    return status, f"min U on grid = {low:.3e} (resolved-negative floor 1e-13)"


def _inv_afe_oracle(ctx: _SuiteContext):
    if ctx.full:
        res = check_afe(50, (10 ** 3, 10 ** 4), (0.0, 1e-3, 1e-2, 5e-2))
    else:
        res = check_afe(8, (10 ** 3, 10 ** 4), (0.0, 1e-2))
    status = "pass" if res.max_rel_err <= 1e-6 else "fail"
    return status, (f"worst rel err {res.max_rel_err:.3e} at "
                    f"d={res.witness_d}, alpha={res.witness_alpha} "
                    f"({res.n_evaluations} evaluations)")


def _inv_afe_alpha_continuity(ctx: _SuiteContext):
    ds = (1009 * 4 + 1, 2021, 4001) if not ctx.full else (2021, 4001, 5³ if False else 5, 8761)
    worst = 0.0
    for d in ds:
        if not arith.is_fundamental_discriminant(d):
            continue
        for a in (0.0, 0.01, 0.05):
            delta = abs(lfun.L_afe(d, a + 1e-6) - lfun.L_afe(d, a))
            worst = max(worst, delta)
    status = "pass" if worst <= 1e-3 else "fail"
    return status, f"max |L(a+1e-6) - L(a)| = {worst:.3e} (tol 1e-3)"


def _inv_afe_quadstep_stability(ctx: _SuiteContext):
    base = check_afe(4, (10 ** 3, 5 * 10 ** 3), (0.0, 0.01))
    halved = lfun.AfeConfig(quad_step=lfun.DEFAULT_AFE.quad_step / 2.0)
    fine = check_afe(4, (10 ** 3, 5 * 10 ** 3), (0.0, 0.01), lcfg=halved)
    delta = abs(base.max_rel_err - fine.max_rel_err)
    status = "pass" if delta <= 1e-9 else "fail"
    return status, f"worst-error change under half quad_step = {delta:.3e}"


# --- resonator invariants ---------------------------------------------------

def _inv_divisor_closure(ctx: _SuiteContext):
    _, _, rset = ctx.resonator_main()
    members = rset.member_set()
    rng = np.random.default_rng(0)
    idx = rng.choice(rset.size, size=min(1000, rset.size), replace=False)
    for i in idx:
        m = rset.members[int(i)]
        for p in rset.f_by_prime:
            if m % p == 0 and (m // p) not in members:
                return "fail", f"{m}/{p} escapes the member set"
    return "pass", f"{len(idx)} members closed under prime removal"


def _inv_layer_counts(ctx: _SuiteContext):
    cfg, layers, rset = ctx.resonator_main()
    for m in rset.members:
        for layer in layers.layers:
            count = sum(1 for p in layer.primes if m % p == 0)
            if not count < layer.delta_k:
                return "fail", f"member {m} holds {count} >= Delta_{layer.k}"
    return "pass", f"exhaustive over |M| = {rset.size}"


def _inv_f_monotone(ctx: _SuiteContext):
    cfg, layers, _ = ctx.resonator_main()
    primes = layers.primes
    vals = [resonator.f_value(p, cfg) for p in primes]
    if any(v <= 0 for v in vals):
        return "fail", "nonpositive weight inside the window"
    if any(v2 >= v1 for v1, v2 in zip(vals, vals[1:])):
        return "fail", "f not strictly decreasing across the window"
    denoms = [math.log(p) - cfg.log2_n - cfg.log3_n for p in primes]
    if any(dn <= 1 for dn in denoms):
        return "fail", "weight denominator not > 1"
    return "pass", f"f decreasing, positive, denominators > 1 over {len(primes)} primes"


def _inv_m_size_vs_n(ctx: _SuiteContext):
    cfg, _, rset = ctx.resonator_main()
    if rset.size <= cfg.N:
        return "pass", f"|M| = {rset.size} <= N = {cfg.N}"
    return "flag", f"pre-asymptotic regime: |M| = {rset.size} > N = {cfg.N}"


def _inv_f_below_log3_power(ctx: _SuiteContext):
    cfg, layers, _ = ctx.resonator_main()
    bound = cfg.log3_n ** (cfg.sigma - 1.0)
    worst = max(resonator.f_value(p, cfg) for p in layers.primes)
    if cfg.N >= 10 ** 6:
        status = "pass" if worst < bound else "fail"
    else:
        status = "pass" if worst < bound else "flag"
    return status, f"max f = {worst:.6f} vs (log3 N)^(sigma-1) = {bound:.6f}"


def _inv_a_n_consistency(ctx: _SuiteContext):
    cfg, layers, _ = ctx.resonator_main()
    a_n = resonator.compute_A_N(cfg, layers)
    direct = resonator.compute_A_N_direct(cfg, layers)
    rel = abs(math.log(a_n) - math.log(direct)) / abs(math.log(a_n))
    if a_n < 1.0:
        return "fail", f"A_N = {a_n} < 1"
    status = "pass" if rel <= 1e-10 else "fail"
    return status, f"A_N = {a_n:.12f}, log-sum vs product rel diff {rel:.3e}"


def _inv_weights_consistency(ctx: _SuiteContext, rset_override=None):
    cfg, layers, rset = ctx.resonator_main()
    if rset_override is not None:
        rset = rset_override
    for p, f_stored in rset.f_by_prime.items():
        f_formula = resonator.f_value(p, cfg)
        if abs(f_stored - f_formula) > 1e-12 * abs(f_formula):
            return "fail", (f"stored f({p}) = {f_stored!r} deviates from the "
                            f"window formula {f_formula!r}")
    member_idx = {m: i for i, m in enumerate(rset.members)}
    rng = np.random.default_rng(1)
    for i in rng.choice(rset.size, size=min(200, rset.size), replace=False):
        m = rset.members[int(i)]
        w = 1.0
        for p, f in rset.f_by_prime.items():
            if m % p == 0:
                w *= f
        if abs(w - rset.weights[member_idx[m]]) > 1e-12 * max(1.0, abs(w)):
            return "fail", f"weight of member {m} inconsistent with f values"
    return "pass", "stored weights match the window formula"


def _inv_prop32_vs_budget(ctx: _SuiteContext):
    cfg, layers, _ = ctx.resonator_small()
    ratio = resonator.prop32_exact_ratio(cfg, layers)
    budget = resonator.prop32_chernoff_budget(cfg, layers)
    status = "pass" if ratio <= budget * (1 + 1e-12) else "fail"
    return status, f"exact ratio {ratio:.6e} <= chernoff budget {budget:.6e}"


def _inv_weight_collapse(ctx: _SuiteContext):
    """Squarefree members pair to a square only with themselves, so the
    squared-weight definition collapses to the plain weights."""
    _, _, rset = ctx.resonator_small()
    members = rset.members
    for i, m in enumerate(members):
        for j, n in enumerate(members):
            prod = m * n
            root = math.isqrt(prod)
            if (root * root == prod) != (i == j):
                return "fail", f"square pairing broken at ({m}, {n})"
    return "pass", f"pairwise over |M| = {len(members)}"


# --- resonance invariants ---------------------------------------------------

def _inv_scan_deterministic(ctx: _SuiteContext):
    cfg, rset, rep = ctx.scan_small()
    rep2 = resonance.scan_max(cfg, rset)
    same = (rep.s1 == rep2.s1 and rep.s2 == rep2.s2
            and rep.max_l == rep2.max_l and rep.argmax_d == rep2.argmax_d)
    status = "pass" if same else "fail"
    return status, "bit-identical rerun (runtime excluded)" if same else "rerun drifted"


def _inv_scan_worker_invariance(ctx: _SuiteContext):
    cfg, rset, rep = ctx.scan_small()
    cfg2 = resonance.ScanConfig(X=cfg.X, A=cfg.A, workers=2)
    rep2 = resonance.scan_max(cfg2, rset)
    drift = max(abs(rep.s1 - rep2.s1) / abs(rep.s1),
                abs(rep.s2 - rep2.s2) / abs(rep.s2))
    status = "pass" if drift <= 1e-12 else "fail"
    return status, f"relative drift across worker counts = {drift:.3e}"


def _inv_max_ge_ratio(ctx: _SuiteContext):
    _, _, rep = ctx.scan_small()
    status = "pass" if rep.max_l >= rep.ratio - 1e-6 else "fail"
    return status, f"max L = {rep.max_l:.6f} vs S1/S2 = {rep.ratio:.6f}"


def _inv_s2_reassociation(ctx: _SuiteContext):
    rset = resonator.synthetic_resonator(
        [(3, 5, 7)], [2], {3: 0.6, 5: 0.5, 7: 0.4})
    cfg = resonance.ScanConfig(X=200, A=0.5)
    s2 = resonance.compute_S2(cfg, rset)
    d_all = arith.enumerate_fundamental(200, 400, "both")
    total = 0.0
    for m, wm in zip(rset.members, rset.weights):
        for n, wn in zip(rset.members, rset.weights):
            total += wm * wn * sum(arith.kronecker(int(d), m * n) for d in d_all)
    rel = abs(s2 - total) / abs(total)
    status = "pass" if rel <= 1e-9 else "fail"
    return status, f"direct vs re-associated S2 rel diff = {rel:.3e}"


def _inv_first_moment_band(ctx: _SuiteContext):
    cfg = resonance.ScanConfig(X=10 ** 4, A=1.0)
    triv = resonator.trivial_resonator()
    s1 = resonance.compute_S1(cfg, triv)
    s2 = resonance.compute_S2(cfg, triv)
    ratio = s1 / s2
    status = "pass" if 1.0 / 3.0 <= ratio <= 3.0 else "flag"
    return status, f"first-moment ratio S1/S2 = {ratio:.4f} (band [1/3, 3])"


# --- verify-module invariants -----------------------------------------------

def _inv_lemma21_dichotomy(ctx: _SuiteContext):
    X, n_max = (10 ** 6, 50) if ctx.full else (10 ** 5, 20)
    worst = ""
    for n in range(1, n_max + 1):
        rec = check_lemma21(n, X)
        if arith.square_decompose(n).n0 == 1:
            if rec.abs_err / X > SQUARE_REL_TOL:
                return "fail", f"square n={n}: |lhs-main|/X = {rec.abs_err / X:.4f}"
        else:
            if abs(rec.lhs) / X > NONSQUARE_REL_TOL:
                return "fail", f"non-square n={n}: |lhs|/X = {abs(rec.lhs) / X:.4f}"
            if abs(rec.lhs) > X ** NONSQUARE_EXPONENT:
                return "fail", f"non-square n={n}: |lhs| = {rec.lhs} > X^0.75"
    return "pass", f"dichotomy holds for n <= {n_max} at X = {X}"


def _inv_lemma21_radical(ctx: _SuiteContext):
    for n in range(1, 51):
        radical = 1
        for p, _ in arith.factorize(n):
            radical *= p
        if abs(arith.h_value(n) - arith.h_value(radical)) > 1e-15:
            return "fail", f"main-term product differs from its radical at n={n}"
    return "pass", "main-term product depends only on the radical (n <= 50)"


# --- cli invariants ---------------------------------------------------------

def _inv_config_merge(ctx: _SuiteContext):
    from .cli import merge_config
    base = {"X": 1000, "A": 1.0}
    over = {"A": 2.0, "workers": 4}
    merged = merge_config(base, over)
    again = merge_config(merged, over)
    disjoint_a = merge_config(merge_config({}, base), {"workers": 4})
    disjoint_b = merge_config(merge_config({}, {"workers": 4}), base)
    ok = (merged == {"X": 1000, "A": 2.0, "workers": 4}
          and again == merged and disjoint_a == disjoint_b)
    return ("pass", "idempotent; order-independent on disjoint keys") if ok \
        else ("fail", f"merge misbehaved: {merged}")


def _inv_report_roundtrip(ctx: _SuiteContext):
    _, _, rep = ctx.scan_small()
    parsed = json.loads(rep.to_json())
    if parsed["s1"] != rep.s1 or parsed["max_l"] != rep.max_l:
        return "fail", "JSON round-trip lost precision"
    row = rep.csv_row().split(",")
    header = resonance.ScanReport.CSV_HEADER.split(",")
    if len(row) != len(header):
        return "fail", "CSV row width mismatch"
    if float(row[header.index("S1")]) != rep.s1:
        return "fail", "CSV float not round-trip safe"
    return "pass", "JSON and CSV round-trip exactly"


_INVARIANTS = (
    ("kronecker_complete_multiplicativity", "arith", _inv_kronecker_multiplicative),
    ("kronecker_periodicity", "arith", _inv_kronecker_periodic),
    ("kronecker_zero_iff_common_factor", "arith", _inv_kronecker_zero_iff_gcd),
    ("chi_primitive_real_character", "arith", _inv_chi_primitive),
    ("enumeration_matches_filter", "arith", _inv_enumeration_matches_filter),
    ("g2_submultiplicative", "arith", _inv_g2_submultiplicative),
    ("u_decay_at_40", "lfun", _inv_u_decay_large),
    ("u_value_near_zero_arg", "lfun", _inv_u_value_small_arg),
    ("u_refinement_stability", "lfun", _inv_u_refinement),
    ("u_positivity", "lfun", _inv_u_positive),
    ("afe_oracle_agreement", "lfun", _inv_afe_oracle),
    ("afe_alpha_continuity", "lfun", _inv_afe_alpha_continuity),
    ("afe_quadstep_stability", "verify", _inv_afe_quadstep_stability),
    ("m_divisor_closure", "resonator", _inv_divisor_closure),
    ("m_layer_counts", "resonator", _inv_layer_counts),
    ("f_monotone_positive", "resonator", _inv_f_monotone),
    ("m_size_vs_n", "resonator", _inv_m_size_vs_n),
    ("f_below_log3_power", "resonator", _inv_f_below_log3_power),
    ("a_n_termwise_consistency", "resonator", _inv_a_n_consistency),
    ("resonator_weights_consistency", "resonator", _inv_weights_consistency),
    ("prop32_ratio_vs_chernoff_budget", "resonator", _inv_prop32_vs_budget),
    ("squared_weight_collapse", "resonator", _inv_weight_collapse),
    ("scan_deterministic_rerun", "resonance", _inv_scan_deterministic),
    ("scan_worker_invariance", "resonance", _inv_scan_worker_invariance),
    ("max_ge_ratio", "resonance", _inv_max_ge_ratio),
    ("s2_reassociation", "resonance", _inv_s2_reassociation),
    ("first_moment_band", "resonance", _inv_first_moment_band),
    ("lemma_dichotomy", "verify", _inv_lemma21_dichotomy),
    ("main_term_radical_dependence", "verify", _inv_lemma21_radical),
    ("config_merge_idempotent", "cli", _inv_config_merge),
    ("report_roundtrip", "cli", _inv_report_roundtrip),
)


def run_property_suite(level: str = "quick") -> SuiteReport:
    """Execute every registered invariant at the chosen scale.

    Failures are recorded, never raised; the report's all_passed is
    False only on a hard "fail" (flags are informational).
    """
    if level not in ("quick", "full"):
        raise DomainError(f"level must be quick or full, got {level!r}")
    ctx = _SuiteContext(level)
    records = []
    for invariant_id, module, fn in _INVARIANTS:
        t0 = time.perf_counter()
        try:
            status, witness = fn(ctx)
        except Exception as exc:   # an invariant crashing is itself a failure
            status, witness = "fail", f"raised {type(exc).__name__}: {exc}"
        records.append(SuiteRecord(
            invariant_id=invariant_id, module=module, status=status,
            witness=witness, elapsed_ms=(time.perf_counter() - t0) * 1e3))
    return SuiteReport(level=level, records=records)
