"""
Information-theoretic and rate mathematics for key recycling.

Entropies, the eavesdropper's conditional states for a Bell-diagonal
attack, the minimisation that yields the optimal recycling rate of the
one-time-pad key, the leakage bound for a recycled MAC key, distance
measures, and the efficiency curves comparing key recycling against
classical one-time pad and BB84-style rates.

All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PROB_TOL = 1e-12
HERMITIAN_TOL = 1e-12
EIG_CLAMP = 1e-10
OPT_GRID = 10_000
OPT_TOL = 1e-9
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def check_distribution(p) -> np.ndarray:
    """Return ``p`` as a float array, raising ``ValueError`` unless it is a
    probability vector (entries in [0, 1], summing to 1 within 1e-12)."""
    arr = np.asarray(p, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty probability vector")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"probabilities must lie in [0, 1]: {arr}")
    if abs(arr.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"probabilities sum to {arr.sum()!r}, not 1")
    return arr


def check_hermitian(rho) -> np.ndarray:
    m = np.asarray(rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")
    return m


def check_density(rho) -> np.ndarray:
    m = check_hermitian(rho)
    if abs(np.trace(m).real - 1.0) > PROB_TOL:
        raise ValueError(f"density operator has trace {np.trace(m).real!r}")
    return m


def _check_qber(Q: float, *, upper: float = 0.5, name: str = "Q") -> float:
    Q = float(Q)
    if not (0.0 <= Q <= upper) or math.isnan(Q):
        raise ValueError(f"{name}={Q} outside [0, {upper}]")
    return Q


# ---------------------------------------------------------------------------
# Classical entropy
# ---------------------------------------------------------------------------

def _entropy_terms(p: np.ndarray) -> np.ndarray:
    # -p log2 p with 0 log 0 = 0, elementwise
    out = np.zeros_like(p, dtype=float)
    nz = p > 0
    out[nz] = -p[nz] * np.log2(p[nz])
    return out


def shannon_entropy(p) -> float:
    """Shannon entropy in bits of a probability vector."""
    arr = check_distribution(p)
    return float(_entropy_terms(arr).sum())


def binary_entropy(Q: float) -> float:
    """Entropy of a biased coin, ``h(Q)``."""
    Q = float(Q)
    if not (0.0 <= Q <= 1.0):
        raise ValueError(f"binary entropy needs Q in [0, 1], got {Q}")
    if Q in (0.0, 1.0):
        return 0.0
    return float(-Q * math.log2(Q) - (1.0 - Q) * math.log2(1.0 - Q))


def _h2_array(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return _entropy_terms(q) + _entropy_terms(1.0 - q)


# ---------------------------------------------------------------------------
# Bell-diagonal spectra and Eve's states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BellDiagonalSpectrum:
    """Weights of the four Bell states in the Alice-Bob state after a
    collective attack."""

    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float

    def __post_init__(self):
        check_distribution(self.as_array())

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3, self.lambda4], dtype=float)

    def is_feasible(self, Q: float, tol: float = PROB_TOL) -> bool:
        """True when both conjugate bases see error rate ``Q``."""
        return (abs(self.lambda3 + self.lambda4 - Q) <= tol
                and abs(self.lambda2 + self.lambda4 - Q) <= tol)

    @classmethod
    def from_qber(cls, Q: float, lambda4: float) -> "BellDiagonalSpectrum":
        """Member of the one-parameter family consistent with QBER ``Q`` in
        both bases, parametrised by ``lambda4``."""
        lo, hi = feasible_lambda4_interval(Q)
        if not (lo - PROB_TOL <= lambda4 <= hi + PROB_TOL):
            raise ValueError(f"lambda4={lambda4} infeasible for Q={Q}; allowed [{lo}, {hi}]")
        lambda4 = min(max(lambda4, lo), hi)
        side = Q - lambda4
        return cls(1.0 - 2.0 * Q + lambda4, side, side, lambda4)


def feasible_lambda4_interval(Q: float) -> tuple[float, float]:
    Q = _check_qber(Q)
    return max(0.0, 2.0 * Q - 1.0), Q


def eve_state(spec: BellDiagonalSpectrum, a: int) -> np.ndarray:
    """Eve's 4x4 density operator conditioned on Alice's Z-basis outcome ``a``.

    Block diagonal; the off-diagonal couplings are ``+sqrt(l1 l2)`` and
    ``+sqrt(l3 l4)`` for ``a = 0`` and carry a minus sign for ``a = 1``.
    """
    if a not in (0, 1):
        raise ValueError(f"Alice's outcome must be 0 or 1, got {a!r}")
    l1, l2, l3, l4 = spec.as_array()
    sign = 1.0 if a == 0 else -1.0
    c12 = sign * math.sqrt(l1 * l2)
    c34 = sign * math.sqrt(l3 * l4)
    return np.array([
        [l1, c12, 0.0, 0.0],
        [c12, l2, 0.0, 0.0],
        [0.0, 0.0, l3, c34],
        [0.0, 0.0, c34, l4],
    ], dtype=complex)


# ---------------------------------------------------------------------------
# Quantum entropy
# ---------------------------------------------------------------------------

def _is_block_diagonal_2x2(m: np.ndarray) -> bool:
    if m.shape != (4, 4):
        return False
    mask = np.ones((4, 4), dtype=bool)
    mask[:2, :2] = False
    mask[2:, 2:] = False
    return not np.any(np.abs(m[mask]) > HERMITIAN_TOL)


def _eig2x2(block: np.ndarray) -> np.ndarray:
    a = block[0, 0].real
    d = block[1, 1].real
    off = abs(block[0, 1])
    mean = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), off)
    return np.array([mean + rad, mean - rad])


def hermitian_eigenvalues(rho, analytic: bool = True) -> np.ndarray:
    """Eigenvalues of a small Hermitian matrix.

    With ``analytic=True`` a 2x2 matrix, or a 4x4 matrix made of two 2x2
    diagonal blocks, is solved in closed form; anything else goes to
    ``numpy.linalg.eigvalsh``.
    """
    m = check_hermitian(rho)
    if analytic and m.shape == (2, 2):
        return _eig2x2(m)
    if analytic and _is_block_diagonal_2x2(m):
        return np.concatenate([_eig2x2(m[:2, :2]), _eig2x2(m[2:, 2:])])
    return np.linalg.eigvalsh(m)


def von_neumann_entropy(rho, analytic: bool = True) -> float:
    """Von Neumann entropy in bits, ``-tr(rho log2 rho)``.

    Eigenvalues in ``[-1e-10, 0)`` are treated as 0; anything more negative
    means ``rho`` is not positive semidefinite and is rejected.
    """
    m = check_density(rho)
    eig = hermitian_eigenvalues(m, analytic=analytic)
    if eig.min() < -EIG_CLAMP:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {eig.min():.3e})")
    eig = np.clip(eig, 0.0, None)
    return float(_entropy_terms(eig).sum())


def s_a_given_e(spec: BellDiagonalSpectrum, analytic: bool = True) -> float:
    """Conditional entropy ``S(A|E) = S(E|A) + H(A) - S(E)`` with ``H(A) = 1``.

    ``S(E)`` is taken on the equal mixture of the two conditional states,
    which has unit trace.
    """
    sigma0 = eve_state(spec, 0)
    sigma1 = eve_state(spec, 1)
    s_e_given_a = 0.5 * von_neumann_entropy(sigma0, analytic) + 0.5 * von_neumann_entropy(sigma1, analytic)
    s_e = von_neumann_entropy(0.5 * (sigma0 + sigma1), analytic)
    return s_e_given_a + 1.0 - s_e


def _s_a_given_e_family(Q: float, lam4: np.ndarray) -> np.ndarray:
    # Vectorised S(A|E) along the feasible family. Each 2x2 block of the
    # conditional states is rank one with eigenvalue equal to its trace,
    # and the mixture is diag(l1..l4).
    lam4 = np.asarray(lam4, dtype=float)
    l1 = 1.0 - 2.0 * Q + lam4
    l23 = Q - lam4
    s_cond = _h2_array(np.full_like(lam4, Q))
    lam = np.stack([l1, l23, l23, lam4])
    s_mix = _entropy_terms(np.clip(lam, 0.0, None)).sum(axis=0)
    return s_cond + 1.0 - s_mix


# ---------------------------------------------------------------------------
# Optimal recycling rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecyclingOptimum:
    """Outcome of minimising ``S(A|E)`` over the attacks allowed at QBER ``Q``."""

    qber: float
    rate: float
    lambda4: float
    spectrum: BellDiagonalSpectrum


def _golden_section(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@lru_cache(maxsize=8192)
def optimize_recycling(Q: float) -> RecyclingOptimum:
    """Minimise ``S(A|E)`` over ``lambda4`` at QBER ``Q``.

    Dense grid of 10^4 points on the feasible interval, then golden-section
    refinement inside the bracketing grid cell (tolerance 1e-9 in lambda4).
    """
    Q = _check_qber(Q)
    lo, hi = feasible_lambda4_interval(Q)
    if hi - lo <= 0.0:
        spec = BellDiagonalSpectrum.from_qber(Q, lo)
        return RecyclingOptimum(Q, float(_s_a_given_e_family(Q, np.array([lo]))[0]), lo, spec)

    grid = np.linspace(lo, hi, OPT_GRID + 1)
    values = _s_a_given_e_family(Q, grid)
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, OPT_GRID)]

    def f(x):
        return float(_s_a_given_e_family(Q, np.array([x]))[0])

    x_ref = _golden_section(f, a, b, OPT_TOL)
    f_ref = f(x_ref)
    if values[i] <= f_ref:
        x_best, f_best = float(grid[i]), float(values[i])
    else:
        x_best, f_best = x_ref, f_ref
    rate = min(max(f_best, 0.0), 1.0)
    return RecyclingOptimum(Q, rate, x_best, BellDiagonalSpectrum.from_qber(Q, x_best))


def min_recycling_rate(Q: float) -> float:
    """Optimal recycling rate of the one-time-pad key at real QBER ``Q``.

    Raises ``RuntimeError`` if the numerical minimiser does not sit at
    ``lambda4 = Q**2``.
    """
    opt = optimize_recycling(float(Q))
    if abs(opt.lambda4 - opt.qber ** 2) > 1e-6:
        raise RuntimeError(
            f"minimiser lambda4={opt.lambda4!r} differs from Q^2={opt.qber ** 2!r}")
    return opt.rate


def recycling_rate_closed_form(Q: float) -> float:
    """``1 - h(Q)``: the value the minimisation reaches at ``lambda4 = Q**2``."""
    return 1.0 - binary_entropy(_check_qber(Q))


# ---------------------------------------------------------------------------
# Leakage bound for the recycled authentication key
# ---------------------------------------------------------------------------

def mac_key_leakage_bound(tag_space: int, rounds: int) -> float:
    """Upper bound in bits on what ``rounds`` authenticated messages, with
    their accept/reject responses, reveal about a reused MAC key whose tag
    space has ``tag_space`` values:

        log2 M - (1 - n/M) log2 (M - n)
    """
    M, n = int(tag_space), int(rounds)
    if M < 1:
        raise ValueError("tag space must be positive")
    if not (0 <= n <= M):
        raise ValueError(f"rounds={n} outside [0, {M}]")
    if n == M:
        return math.log2(M)
    if n == 0:
        return 0.0
    log_m = math.log2(M)
    log_rest = log_m + math.log1p(-n / M) / math.log(2.0)
    return log_m - (1.0 - n / M) * log_rest


# ---------------------------------------------------------------------------
# Key consumption and rates
# ---------------------------------------------------------------------------

class SingularConfigurationError(ValueError):
    """The predicted QBER leaves no room for message bits (``h(Qp) = 1``)."""


def code_rate(Qp: float) -> float:
    """Message bits per code bit of an ideal code for predicted QBER ``Qp``."""
    return 1.0 - binary_entropy(_check_qber(Qp, name="Qp"))


def _nonsingular_code_rate(Qp: float) -> float:
    rate = code_rate(Qp)
    if rate <= 0.0:
        raise SingularConfigurationError(f"h(Qp) = 1 at Qp={Qp}")
    return rate


def kv_length(n: int, Qp: float) -> int:
    """Length of the one-time-pad key, i.e. of the codeword, for ``n``
    message bits: ``ceil(n / (1 - h(Qp)))``."""
    if n < 0:
        raise ValueError("message length must be non-negative")
    return int(math.ceil(n / _nonsingular_code_rate(Qp) - 1e-9))


def consumed_key_rate(Qp: float, Q: float, accepted: bool = True) -> float:
    """Pre-shared key bits consumed per message bit.

    A rejected round, or a channel noisier than the prediction, is charged
    at QBER 0.5, where nothing of the pad is recycled.
    """
    rate = _nonsingular_code_rate(Qp)
    Q = _check_qber(Q)
    effective = Q if (accepted and Q <= Qp) else 0.5
    return (1.0 - min_recycling_rate(effective)) / rate


def qkr_rate(Qp: float, Q: float) -> float:
    """Net message bits per qubit when consumed key is paid back out of the
    message; may be negative."""
    return code_rate(Qp) - (1.0 - min_recycling_rate(_check_qber(Q)))


def bb84_rate(Q: float) -> float:
    return qkr_rate(Q, Q)


def existing_qkr_rate(Qp: float, Q: float) -> float:
    """Rate of a scheme that always consumes key as if the prediction held.

    Constant ``qkr_rate(Qp, Qp)`` for ``Q <= Qp``; ``nan`` marks protocol
    failure when the channel is noisier than predicted.
    """
    Q = _check_qber(Q)
    if Q > Qp:
        return math.nan
    return qkr_rate(Qp, Qp)


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    a, b = check_hermitian(rho), check_hermitian(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    check_density(a)
    check_density(b)
    eig = np.linalg.eigvalsh(a - b)
    return float(0.5 * np.abs(eig).sum())


def variational_distance(p, q) -> float:
    a, b = check_distribution(p), check_distribution(q)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(0.5 * np.abs(a - b).sum())


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateSample:
    realQ: float
    predictedQ: float
    value: float


def qber_grid(step: float = 0.005, upper: float = 0.5) -> np.ndarray:
    """Inclusive grid ``0, step, ..., upper`` computed from integer counts."""
    count = int(round(upper / step))
    return np.array([i * upper / count for i in range(count + 1)])


def recycling_curve(grid=None) -> list[RateSample]:
    grid = qber_grid() if grid is None else grid
    return [RateSample(float(q), float(q), min_recycling_rate(q)) for q in grid]


def consumption_curve(grid=None) -> list[dict]:
    """Key bits consumed per message bit with the prediction equal to the
    real QBER. The ``Q = 0.5`` point is singular and dropped."""
    grid = qber_grid() if grid is None else grid
    rows = []
    for q in grid:
        q = float(q)
        if q >= 0.5:
            continue
        rows.append({
            "Q": q,
            "classical_otp_noiseless": 1.0,
            "classical_otp_noisy": 1.0 / _nonsingular_code_rate(q),
            "qkr_consumed": consumed_key_rate(q, q, True),
        })
    return rows


def rate_curve(Qp: float = 0.07, grid=None) -> list[dict]:
    grid = qber_grid() if grid is None else grid
    return [{
        "Q": float(q),
        "qkr_rate_at_Qp": qkr_rate(Qp, q),
        "existing_qkr_at_Qp": existing_qkr_rate(Qp, q),
        "bb84_rate": bb84_rate(q),
    } for q in grid]


def entropy_root(target: float = 0.5) -> float:
    """QBER below 0.5 at which ``h(Q) = target``, by bisection."""
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
