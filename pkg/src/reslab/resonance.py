"""Resonance pipeline: R_d values, the sums S1 and S2 over fundamental
discriminants in (X, 2X], the lower-bound ratio, error budget, the
N-from-X policy, and the extreme-value scan.

Determinism contract: discriminants are enumerated ascending by |d|
(positive first on ties) and split into fixed chunks of 4096; chunk
results are reduced in chunk order with math.fsum.  Worker count only
changes scheduling, never the arithmetic, so reports are bit-identical
across reruns and worker counts.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import arith
from .errors import DomainError, NumericError
from .lfun import AfeConfig, DEFAULT_AFE, L_exact, l_afe_batch
from .resonator import ResonatorSet, theorem_lower_bound, THEOREM_X_FLOOR

CHUNK_SIZE = 4096
_L_SUBBATCH = 256

_N_POLICIES = ("paper", "explicit")
_STRATEGIES = ("exhaustive", "top_k")

N_EXPLICIT_DEFAULT = 1_000_000

_X_FLOOR = math.exp(math.e)


@dataclass(frozen=True)
class ScanConfig:
    """Scan parameters.  alpha is derived: A / loglog(X), never set
    directly.  The paper-style N policy ties N to X^(1/4 + alpha/2 -
    5*eps); at desk scale that exponent gives tiny N, so the default is
    an explicit N chosen for a nonempty prime window.
    """
    X: int
    A: float
    n_policy: str = "explicit"
    N_explicit: int | None = N_EXPLICIT_DEFAULT
    signs: str = "both"
    strategy: str = "exhaustive"
    K: int = 1000
    workers: int = 1
    eps: float = 0.04

    def __post_init__(self):
        if self.X <= _X_FLOOR:
            raise DomainError(f"X must exceed e^e ~ 15.15, got {self.X}")
        if self.A < 0:
            raise DomainError(f"A must be nonnegative, got {self.A}")
        if self.n_policy not in _N_POLICIES:
            raise DomainError(f"n_policy must be one of {_N_POLICIES}")
        if self.signs not in ("positive", "negative", "both"):
            raise DomainError(f"bad signs {self.signs!r}")
        if self.strategy not in _STRATEGIES:
            raise DomainError(f"strategy must be one of {_STRATEGIES}")
        if self.K < 1:
            raise DomainError("K must be positive")
        if self.workers < 1:
            raise DomainError("workers must be positive")
        if not 0 < self.eps < 0.05:
            raise DomainError(f"eps must lie in (0, 1/20), got {self.eps}")

    @property
    def alpha(self) -> float:
        return self.A / math.log(math.log(self.X))


def derive_N_from_X(X: int, alpha: float, eps: float) -> int:
    """floor(X^(1/4 + alpha/2 - 5*eps)), implied constant taken as 1."""
    exponent = 0.25 + alpha / 2.0 - 5.0 * eps
    if not 0 < exponent < 0.5:
        raise DomainError(
            f"N-policy exponent {exponent:.6f} outside (0, 1/2); "
            f"alpha={alpha}, eps={eps}")
    return int(math.floor(X ** exponent))


def resolve_N(cfg: ScanConfig) -> int:
    """The resonator size parameter the config asks for."""
    if cfg.n_policy == "paper":
        return derive_N_from_X(cfg.X, cfg.alpha, cfg.eps)
    if cfg.N_explicit is None:
        raise DomainError("explicit N policy needs N_explicit")
    return cfg.N_explicit


@dataclass
class ScanReport:
    """Per-X scan results.  runtime_seconds is diagnostic only and is
    excluded from the bit-identical determinism contract."""
    x: int
    n: int
    sigma: float
    p_size: int
    m_size: int
    s1: float
    s2: float
    ratio: float
    max_l: float
    argmax_d: int
    theorem_baseline: float | None
    error_budget: float
    runtime_seconds: float
    diagnostics: list[str] = field(default_factory=list)

    CSV_HEADER = ("X,N,sigma,P_size,M_size,S1,S2,ratio,maxL,argmax_d,"
                  "theorem_baseline,error_budget,runtime_seconds")

    def to_json_dict(self) -> dict:
        return {
            "x": self.x, "n": self.n, "sigma": self.sigma,
            "p_size": self.p_size, "m_size": self.m_size,
            "s1": self.s1, "s2": self.s2, "ratio": self.ratio,
            "max_l": self.max_l, "argmax_d": self.argmax_d,
            "theorem_baseline": self.theorem_baseline,
            "error_budget": self.error_budget,
            "runtime_seconds": self.runtime_seconds,
            "diagnostics": list(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def csv_row(self) -> str:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return f"{v:.17g}"
            return str(v)
        cells = [self.x, self.n, self.sigma, self.p_size, self.m_size,
                 self.s1, self.s2, self.ratio, self.max_l, self.argmax_d,
                 self.theorem_baseline, self.error_budget,
                 self.runtime_seconds]
        return ",".join(fmt(c) for c in cells)


# ---------------------------------------------------------------------------
# resonator values
# ---------------------------------------------------------------------------

def resonator_value(d: int, rset: ResonatorSet) -> float:
    """R_d = sum_{m in M} f(m) chi_d(m), summed literally over members.

    Reference implementation (kronecker per member); the scan uses the
    layered evaluation below, which is tested against this one.
    """
    arith.validate_fundamental(d)
    return float(math.fsum(
        w * arith.kronecker(d, m) for m, w in zip(rset.members, rset.weights)))


def layered_resonator_values(d_batch, rset: ResonatorSet) -> np.ndarray:
    """R_d for a batch of d via per-layer elementary symmetric sums.

    Membership in M constrains each layer independently (count <= cap),
    so R_d factors as a product over layers of sum_{j <= cap} e_j of the
    values f(p) chi_d(p); each e_j comes from the standard descending
    DP, vectorized across the batch.
    """
    d = np.asarray(d_batch, dtype=np.int64)
    out = np.ones(len(d), dtype=np.float64)
    for primes, cap in zip(rset.layer_primes, rset.layer_caps):
        if cap == 0 or not primes:
            continue
        e = np.zeros((len(d), cap + 1), dtype=np.float64)
        e[:, 0] = 1.0
        for p in primes:
            x = rset.f_by_prime[p] * arith.chi_prime_batch(d, p).astype(np.float64)
            top = min(cap, len(primes))
            for j in range(top, 0, -1):
                e[:, j] += x * e[:, j - 1]
        out *= e.sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# chunked scan engine
# ---------------------------------------------------------------------------

def _enumerate_scan_d(cfg: ScanConfig) -> np.ndarray:
    return arith.enumerate_fundamental(cfg.X, 2 * cfg.X, cfg.signs)


def _chunk_l_values(d_chunk: np.ndarray, alpha: float, lcfg: AfeConfig,
                    use_exact: bool) -> np.ndarray:
    if use_exact:
        return np.array([L_exact(0.5 + alpha, int(dd)) for dd in d_chunk])
    out = np.empty(len(d_chunk), dtype=np.float64)
    for i in range(0, len(d_chunk), _L_SUBBATCH):
        out[i: i + _L_SUBBATCH] = l_afe_batch(
            d_chunk[i: i + _L_SUBBATCH], alpha, lcfg)
    return out


_WORKER_STATE: dict = {}


def _init_worker(rset, alpha, lcfg, use_exact):
    _WORKER_STATE["args"] = (rset, alpha, lcfg, use_exact)


def _run_chunk(task):
    idx, d_chunk, need_l = task
    rset, alpha, lcfg, use_exact = _WORKER_STATE["args"]
    return idx, _chunk_values(d_chunk, rset, alpha, lcfg, need_l, use_exact)


def _chunk_values(d_chunk, rset, alpha, lcfg, need_l, use_exact):
    r = layered_resonator_values(d_chunk, rset)
    r2 = r * r
    rec = {"s2": float(r2.sum()), "r2": r2}
    if need_l:
        l_vals = _chunk_l_values(d_chunk, alpha, lcfg, use_exact)
        rec["s1"] = float((l_vals * r2).sum())
        i = int(np.argmax(l_vals))          # first maximum in chunk order
        rec["max_l"] = float(l_vals[i])
        rec["argmax_d"] = int(d_chunk[i])
    return rec


def _run_chunks(d_all: np.ndarray, cfg: ScanConfig, rset: ResonatorSet,
                lcfg: AfeConfig, need_l: bool, use_exact: bool) -> list[dict]:
    """Evaluate all chunks, in-process or on a worker pool; results come
    back indexed so the reduction order never depends on scheduling."""
    chunks = [(i // CHUNK_SIZE, d_all[i: i + CHUNK_SIZE], need_l)
              for i in range(0, len(d_all), CHUNK_SIZE)]
    results: list = [None] * len(chunks)
    if cfg.workers == 1 or len(chunks) == 1:
        for idx, d_chunk, nl in chunks:
            results[idx] = _chunk_values(d_chunk, rset, cfg.alpha, lcfg,
                                         nl, use_exact)
        return results
    done = 0
    try:
        with ProcessPoolExecutor(
                max_workers=cfg.workers, initializer=_init_worker,
                initargs=(rset, cfg.alpha, lcfg, use_exact)) as pool:
            for idx, rec in pool.map(_run_chunk, chunks, chunksize=1):
                results[idx] = rec
                done += 1
    except Exception as exc:
        err = NumericError(
            f"scan worker failed after {done}/{len(chunks)} chunks: {exc}")
        err.completed_chunks = [r for r in results if r is not None]
        raise err from exc
    return results


def compute_S2(cfg: ScanConfig, rset: ResonatorSet) -> float:
    """S2 = sum of R_d^2 over fundamental d with X < |d| <= 2X."""
    d_all = _enumerate_scan_d(cfg)
    recs = _run_chunks(d_all, cfg, rset, DEFAULT_AFE, need_l=False,
                       use_exact=False)
    return math.fsum(rec["s2"] for rec in recs)


def compute_S1(cfg: ScanConfig, rset: ResonatorSet,
               lcfg: AfeConfig = DEFAULT_AFE, use_exact: bool = False) -> float:
    """S1 = sum of L(1/2 + alpha, chi_d) R_d^2 over the same range.

    use_exact swaps the AFE for the Hurwitz-zeta oracle (verification
    mode, |d| capped by the L_exact guard).
    """
    d_all = _enumerate_scan_d(cfg)
    recs = _run_chunks(d_all, cfg, rset, lcfg, need_l=True,
                       use_exact=use_exact)
    return math.fsum(rec["s1"] for rec in recs)


def error_budget(cfg: ScanConfig, rset: ResonatorSet,
                 N: int | None = None) -> float:
    """Desk-scale evaluation of the scan's error-term envelope:

        X^(3/4+2e) N^(3e/2) |M| sum_f2  +  X^(3/4+a/2+2e) N^(3e/2) |M| sum_f2

    (the second term is the reflected-series variant, whose X exponent
    gains alpha/2).  Reported beside the main terms so it is visible
    when the error term dominates the pre-asymptotic regime.
    """
    n_val = resolve_N(cfg) if N is None else N
    e = cfg.eps
    common = float(n_val) ** (1.5 * e) * rset.size * rset.sum_f_sq
    x = float(cfg.X)
    return x ** (0.75 + 2 * e) * common \
        + x ** (0.75 + cfg.alpha / 2.0 + 2 * e) * common


ZETA2 = math.pi ** 2 / 6.0


def scan_max(cfg: ScanConfig, rset: ResonatorSet,
             lcfg: AfeConfig = DEFAULT_AFE, use_exact: bool = False) -> ScanReport:
    """Extreme-value scan over X < |d| <= 2X.

    exhaustive: L is evaluated for every enumerated d; the report's
    max_l is the true range maximum.  top_k: d are ranked by R_d^2
    (descending; ties to smaller |d|, then positive sign) and only the
    top K get an L evaluation; max_l is then a lower bound on the range
    maximum and a diagnostic says so.
    """
    t0 = time.perf_counter()
    d_all = _enumerate_scan_d(cfg)
    if len(d_all) == 0:
        raise DomainError(f"no fundamental discriminants in ({cfg.X}, {2 * cfg.X}]")
    diagnostics: list[str] = []
    exhaustive = cfg.strategy == "exhaustive" or cfg.K >= len(d_all)

    if exhaustive:
        recs = _run_chunks(d_all, cfg, rset, lcfg, need_l=True,
                           use_exact=use_exact)
        s2 = math.fsum(rec["s2"] for rec in recs)
        s1 = math.fsum(rec["s1"] for rec in recs)
        max_l = -math.inf
        argmax_d = 0
        for rec in recs:
            if rec["max_l"] > max_l:
                max_l = rec["max_l"]
                argmax_d = rec["argmax_d"]
    else:
        recs = _run_chunks(d_all, cfg, rset, lcfg, need_l=False,
                           use_exact=use_exact)
        s2 = math.fsum(rec["s2"] for rec in recs)
        r2_all = np.concatenate([rec["r2"] for rec in recs])
        order = np.lexsort((d_all < 0, np.abs(d_all), -r2_all))
        selected = np.sort(order[: cfg.K])        # evaluation in scan order
        d_sel = d_all[selected]
        r2_sel = r2_all[selected]
        sel_chunks = [(i // CHUNK_SIZE, d_sel[i: i + CHUNK_SIZE])
                      for i in range(0, len(d_sel), CHUNK_SIZE)]
        s1_parts = []
        max_l = -math.inf
        argmax_d = 0
        pos = 0
        for _, d_chunk in sel_chunks:
            l_vals = _chunk_l_values(d_chunk, cfg.alpha, lcfg, use_exact)
            s1_parts.append(float((l_vals * r2_sel[pos: pos + len(d_chunk)]).sum()))
            i = int(np.argmax(l_vals))
            if float(l_vals[i]) > max_l:
                max_l = float(l_vals[i])
                argmax_d = int(d_chunk[i])
            pos += len(d_chunk)
        s1 = math.fsum(s1_parts)
        diagnostics.append(
            f"top_k: L evaluated for {len(d_sel)} of {len(d_all)} "
            f"discriminants; max_l is a lower bound on the range maximum")

    if s2 <= 0:
        raise NumericError("S2 vanished: every resonator value is zero")
    ratio = s1 / s2

    if cfg.X >= THEOREM_X_FLOOR:
        baseline = theorem_lower_bound(cfg.X, cfg.A)
    else:
        baseline = None
        diagnostics.append(
            f"theorem baseline omitted: X={cfg.X} below floor {THEOREM_X_FLOOR}")

    n_val = resolve_N(cfg)
    budget = error_budget(cfg, rset, n_val)
    main_scale = (cfg.X / ZETA2) * rset.sum_f_sq
    if cfg.signs == "both" and main_scale > 0:
        diagnostics.append(
            f"S2 vs (X/zeta(2))*sum_f2: eta = {s2 / main_scale - 1.0:+.6f}")
    diagnostics.append(
        f"error budget / main-term scale: {budget / main_scale:.6g}")

    return ScanReport(
        x=cfg.X, n=n_val, sigma=0.5 + cfg.alpha,
        p_size=len(rset.f_by_prime), m_size=rset.size,
        s1=s1, s2=s2, ratio=ratio, max_l=max_l, argmax_d=argmax_d,
        theorem_baseline=baseline, error_budget=budget,
        runtime_seconds=time.perf_counter() - t0,
        diagnostics=diagnostics)
