"""
Property-verification suites.

Each suite checks one family of claims against an independent oracle
(exhaustive enumeration, a closed form, a trace identity) and returns a
``SuiteResult`` carrying the measured extremes. ``run_suites`` is what the
``verify`` command prints.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import ecckit, hashkit, qchannel, ratecore
from .bits import int_to_bits


@dataclass
class SuiteResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{verdict}] {self.name:<10} {parts} ({self.seconds:.2f}s)"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def suite_rates(step: float = 0.005) -> SuiteResult:
    """Optimiser vs ``1 - h(Q)`` and argmin vs ``Q**2`` on the QBER grid."""
    grid = ratecore.qber_grid(step)
    rate_err = 0.0
    arg_err = 0.0
    for q in grid:
        opt = ratecore.optimize_recycling(float(q))
        rate_err = max(rate_err, abs(opt.rate - (1.0 - ratecore.binary_entropy(q))))
        arg_err = max(arg_err, abs(opt.lambda4 - q * q))
    r0 = ratecore.min_recycling_rate(0.0)
    r_half = ratecore.min_recycling_rate(0.5)
    ok = rate_err <= 1e-6 and arg_err <= 1e-4 and r0 == 1.0 and r_half == 0.0
    return SuiteResult("rates", ok, {"max_rate_err": rate_err, "max_argmin_err": arg_err,
                                     "r(0)": r0, "r(0.5)": r_half})


def consumption_crossover() -> float:
    """QBER where the consumed-key rate with ``Qp = Q`` reaches 1, by
    bisection on the consumed-key rate itself."""
    lo, hi = 0.05, 0.2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ratecore.consumed_key_rate(mid, mid, True) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def suite_crossover() -> SuiteResult:
    x = consumption_crossover()
    return SuiteResult("crossover", 0.1095 < x < 0.1105, {"crossing_Q": x})


def suite_tangency(Qp: float = 0.07) -> SuiteResult:
    target = 1.0 - 2.0 * ratecore.binary_entropy(Qp)
    ours = ratecore.qkr_rate(Qp, Qp)
    bb84 = ratecore.bb84_rate(Qp)
    below = [q for q in ratecore.qber_grid() if q < Qp]
    margin = min(ratecore.qkr_rate(Qp, q) - ratecore.existing_qkr_rate(Qp, q) for q in below)
    ok = abs(ours - target) <= 1e-9 and abs(bb84 - target) <= 1e-9 and margin > 0.0
    return SuiteResult("tangency", ok, {"qkr_rate": ours, "bb84_rate": bb84,
                                        "closed_form": target, "min_advantage_below_Qp": margin})


def suite_mac_bound(sizes=(4, 16, 256)) -> SuiteResult:
    ok = True
    worst = 0.0
    for M in sizes:
        values = [ratecore.mac_key_leakage_bound(M, n) for n in range(M + 1)]
        ok &= values[0] == 0.0 and values[-1] == math.log2(M)
        ok &= all(b >= a for a, b in zip(values, values[1:]))
        ok &= max(values) <= math.log2(M)
        worst = max(worst, max(values) - math.log2(M))
    return SuiteResult("mac-bound", bool(ok), {"sizes": list(sizes), "max_excess": worst})


# ---------------------------------------------------------------------------
# Quantum layer
# ---------------------------------------------------------------------------

def suite_basis(trials: int = 1000, seed: int = 7) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = max(qchannel.basis_indistinguishability_residual(qchannel.random_measurement_operator(rng))
                for _ in range(trials))
    return SuiteResult("basis", worst < 1e-12, {"operators": trials, "max_residual": worst})


def suite_distance(trials: int = 100, seed: int = 11) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        p = rng.dirichlet(np.ones(4))
        q = rng.dirichlet(np.ones(4))
        p[-1] = 1.0 - p[:-1].sum()
        q[-1] = 1.0 - q[:-1].sum()
        worst = max(worst, abs(ratecore.trace_distance(np.diag(p), np.diag(q))
                               - ratecore.variational_distance(p, q)))
    return SuiteResult("distance", worst <= 1e-12, {"pairs": trials, "max_gap": worst})


# ---------------------------------------------------------------------------
# Hash families
# ---------------------------------------------------------------------------

def axu_max_probability(t: int = 4, blocks: int = 2) -> float:
    """Max over distinct block tuples and targets of ``Pr_u[h(m1) ^ h(m2) = tau]``,
    enumerating every key and every pair."""
    size = 1 << t
    msgs = list(itertools.product(range(size), repeat=blocks))
    table = np.array([[hashkit.poly_hash(u, m, t) for m in msgs] for u in range(size)], dtype=np.int64)
    diff = table[:, :, None] ^ table[:, None, :]
    best = 0
    off_diag = ~np.eye(len(msgs), dtype=bool)
    for tau in range(size):
        counts = (diff == tau).sum(axis=0)
        best = max(best, int(counts[off_diag].max()))
    return best / size


def axu_max_probability_by_difference(t: int = 4, blocks: int = 3) -> float:
    """Same quantity using linearity: the tag XOR of a pair depends only on
    the block-wise difference, so nonzero differences are enumerated."""
    size = 1 << t
    best = 0
    for d in itertools.product(range(size), repeat=blocks):
        if not any(d):
            continue
        counts = np.bincount([hashkit.poly_hash(u, d, t) for u in range(size)], minlength=size)
        best = max(best, int(counts.max()))
    return best / size


def mac_tag_max_probability(t: int = 4, max_blocks: int = 2) -> tuple[float, float]:
    """Padded-message version: every message whose padding fits in
    ``max_blocks`` blocks. Returns (max probability, epsilon)."""
    params = hashkit.MacParams(t, max_blocks)
    max_len = (max_blocks - 1) * t - 1
    msgs = [np.array(bits, dtype=np.uint8)
            for n in range(max_len + 1) for bits in itertools.product((0, 1), repeat=n)]
    keys = [int_to_bits(u, t) for u in range(1 << t)]
    tags = np.array([[int("".join(map(str, hashkit.mac_tag(k, m, params))), 2) for m in msgs] for k in keys])
    best = 0
    for i, j in itertools.combinations(range(len(msgs)), 2):
        counts = np.bincount(tags[:, i] ^ tags[:, j], minlength=1 << t)
        best = max(best, int(counts.max()))
    return best / (1 << t), params.epsilon


def asu_max_probability(t: int = 4) -> float:
    """``max Pr_{u,pad}[tag(m1) = t1 and tag(m2) = t2]`` over one-block
    messages ``m1 != m2`` and all tag pairs."""
    size = 1 << t
    best = 0
    for m1, m2 in itertools.permutations(range(size), 2):
        counts = np.zeros((size, size), dtype=np.int64)
        for u in range(size):
            h1 = hashkit.poly_hash(u, [m1], t)
            h2 = hashkit.poly_hash(u, [m2], t)
            for pad in range(size):
                counts[h1 ^ pad, h2 ^ pad] += 1
        best = max(best, int(counts.max()))
    return best / (size * size)


def toeplitz_max_collision(in_len: int = 4, out_len: int = 2) -> float:
    """Max over input pairs of the fraction of seeds that collide."""
    seed_len = hashkit.toeplitz_seed_length(in_len, out_len)
    inputs = [np.array(x, dtype=np.uint8) for x in itertools.product((0, 1), repeat=in_len)]
    seeds = [np.array(s, dtype=np.uint8) for s in itertools.product((0, 1), repeat=seed_len)]
    images = np.array([[hashkit.toeplitz_extract(s, x, out_len) for x in inputs] for s in seeds])
    best = 0
    for i, j in itertools.combinations(range(len(inputs)), 2):
        same = np.all(images[:, i] == images[:, j], axis=1).sum()
        best = max(best, int(same))
    return best / len(seeds)


def suite_axu2() -> SuiteResult:
    p2 = axu_max_probability(4, 2)
    p3 = axu_max_probability_by_difference(4, 3)
    p_mac, eps = mac_tag_max_probability(4, 2)
    ok = p2 == 2 / 16 and p3 <= 3 / 16 and p_mac <= eps
    return SuiteResult("axu2", ok, {"max_p(L=2)": p2, "bound(L=2)": 2 / 16, "max_p(L=3)": p3,
                                    "max_p(padded)": p_mac})


def suite_asu2() -> SuiteResult:
    p = asu_max_probability(4)
    bound = (1 / 16) / 16
    return SuiteResult("asu2", p <= bound, {"max_p": p, "bound": bound})


def suite_toeplitz() -> SuiteResult:
    worst = 0.0
    ok = True
    for in_len in range(1, 7):
        for out_len in range(1, min(3, in_len) + 1):
            p = toeplitz_max_collision(in_len, out_len)
            ok &= p <= 2.0 ** -out_len
            worst = max(worst, p * 2 ** out_len)
    p42 = toeplitz_max_collision(4, 2)
    return SuiteResult("toeplitz", bool(ok), {"max_p(4->2)": p42, "max_p_over_bound": worst})


# ---------------------------------------------------------------------------
# Codes
# ---------------------------------------------------------------------------

def hamming_single_flips() -> tuple[int, int]:
    """(cases, cases corrected with q=1 at the right position)."""
    code = ecckit.hamming_7_4()
    good = total = 0
    for m in itertools.product((0, 1), repeat=4):
        cw = code.encode(m)
        for i in range(7):
            w = cw.copy()
            w[i] ^= 1
            res = code.decode(w)
            total += 1
            good += int(np.array_equal(res.message, m) and res.corrected_errors == 1
                        and res.error_positions == (i,))
    return total, good


def hamming_double_flips() -> tuple[int, int]:
    """(cases, cases miscorrected to a different message with q=1)."""
    code = ecckit.hamming_7_4()
    bad = total = 0
    for m in itertools.product((0, 1), repeat=4):
        cw = code.encode(m)
        for i, j in itertools.combinations(range(7), 2):
            w = cw.copy()
            w[[i, j]] ^= 1
            res = code.decode(w)
            total += 1
            bad += int(res.corrected_errors == 1 and not np.array_equal(res.message, m))
    return total, bad


def code_within_radius(code: ecckit.LinearCode) -> tuple[int, int]:
    """Exhaustive over messages and error patterns of weight <= t."""
    good = total = 0
    for m in itertools.product((0, 1), repeat=code.k):
        cw = code.encode(m)
        for w in range(code.t + 1):
            for pos in itertools.combinations(range(code.n), w):
                word = cw.copy()
                word[list(pos)] ^= 1
                res = code.decode(word)
                total += 1
                good += int(np.array_equal(res.message, m) and res.corrected_errors == w
                            and res.error_positions == pos)
    return total, good


def suite_ecc() -> SuiteResult:
    n1, g1 = hamming_single_flips()
    n2, b2 = hamming_double_flips()
    bch = ecckit.bch_15_7()
    n3, g3 = code_within_radius(bch)
    ok = n1 == g1 == 112 and n2 == b2 == 336 and n3 == g3 and bch.d == 5
    return SuiteResult("ecc", ok, {"hamming_single": f"{g1}/{n1}", "hamming_double_miscorrected": f"{b2}/{n2}",
                                   "bch15_7_radius2": f"{g3}/{n3}", "bch_d": bch.d})


SUITES = {
    "rates": suite_rates,
    "crossover": suite_crossover,
    "tangency": suite_tangency,
    "mac-bound": suite_mac_bound,
    "basis": suite_basis,
    "distance": suite_distance,
    "axu2": suite_axu2,
    "asu2": suite_asu2,
    "toeplitz": suite_toeplitz,
    "ecc": suite_ecc,
}


def run_suites(names=None) -> list[SuiteResult]:
    names = list(SUITES) if not names else list(names)
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        start = time.perf_counter()
        res = SUITES[name]()
        res.seconds = time.perf_counter() - start
        results.append(res)
    return results
