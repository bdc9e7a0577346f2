"""Birkhoff sums S_mφ(x) = Σ_{k<m} φ(x + kα) and the weak-mixing criterion.

Sums are trigonometric polynomials whose coefficients are c_k times the
geometric kernel (e(mkα) − 1)/(e(kα) − 1). Kernels are formed in mpmath
from the signed residues of kα and mkα; grid work is numpy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp, mpc, mpf
from scipy.stats import norm

from .cohomology import ReducedRoof
from .diophantine import RotationNumber, norm_of_multiple, signed_residue
from .errors import InsufficientQuotients, PlanError, PrecisionExhausted
from .roof import FourierRoof, TrigPolynomial, TrigSample

logger = logging.getLogger(__name__)

DEFAULT_GRID = 1 << 12
MAX_GRID = 1 << 20
DEFAULT_DIRECT_HORIZON = 64
CRITERION_TOLERANCE = 5e-3
PASS_FLOOR = 0.05
REFUTE_CEILING = 0.02
LAMBDA_COUNT = 16
LAMBDA_MAX = 256.0
RANGE_THRESHOLD = 4.0
CLOSENESS_BOUND = 0.125
DEFAULT_VARIANCE_TARGET = 1.0
DEFAULT_VARIANCE_SLACK = 0.05
SUBGROUP_REMARK = ("eigenvalues of the flow form an additive subgroup of R; "
                   "only the listed λ were tested, nothing is extrapolated")

PASS = "PASS"
REFUTED = "REFUTED"
INCONCLUSIVE = "INCONCLUSIVE"


def circle_distance(y: np.ndarray) -> np.ndarray:
    """‖y‖ elementwise."""
    d = np.mod(y, 1.0)
    return np.minimum(d, 1.0 - d)


# ---------------------------------------------------------------------------
# Kernels and sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelValue:
    m: int
    k: int
    value: mpc
    norm_ratio: mpf             # ‖mkα‖/‖kα‖
    sandwich_ok: bool           # ½·ratio < |value| < 2·ratio


@lru_cache(maxsize=1 << 14)
def kernel(alpha: RotationNumber, m: int, k: int) -> KernelValue:
    """(e(mkα) − 1)/(e(kα) − 1) = e^{iπ(Y−X)}·sin(πY)/sin(πX), X ≡ kα, Y ≡ mkα."""
    X, ex = signed_residue(alpha, k)
    Y, _ = signed_residue(alpha, m * k)
    with alpha.workprec():
        if abs(X) <= ex:
            raise PrecisionExhausted(f"‖{k}α‖ not separated from 0", value=abs(X), error_bound=ex,
                                     precision_bits=alpha.precision_bits)
        value = mp.sinpi(Y) / mp.sinpi(X) * mp.expjpi(Y - X)
        ratio = abs(Y) / abs(X)
        ok = ratio / 2 < abs(value) < 2 * ratio
    if not ok:
        logger.warning(f"kernel m={m}, k={k} outside the distance sandwich")
    return KernelValue(m, k, value, ratio, ok)


def birkhoff_direct(phi: FourierRoof, alpha: RotationNumber, m: int, x,
                    horizon: int = DEFAULT_DIRECT_HORIZON):
    """Literal m-term sum of the roof truncated at horizon; x scalar or array."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    with alpha.workprec():
        a = alpha.value()
        shifts = np.array([float(mp.frac(k * a)) for k in range(m)])
    poly = phi.trig_polynomial(horizon)
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    points = np.mod(xs[:, None] + shifts[None, :], 1.0)
    values = poly.at_points(points).sum(axis=1) + m * float(phi.c0)
    return float(values[0]) if np.ndim(x) == 0 else values


def birkhoff_polynomial(phi: FourierRoof, alpha: RotationNumber, m: int,
                        horizon: Optional[int] = None) -> Tuple[TrigPolynomial, List[KernelValue]]:
    """S_mφ as constant m·c_0 plus 2·Re Σ c_k K_m(k) e(kx)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if horizon is None:
        horizon = max(phi.support or (0,)) if phi.is_finite else DEFAULT_DIRECT_HORIZON
    freqs = phi.nonzero_frequencies(horizon)
    kernels = [kernel(alpha, m, k) for k in freqs]
    with alpha.workprec():
        amps = [phi.coefficient(k) * kv.value for k, kv in zip(freqs, kernels)]
        constant = m * phi.c0
    return TrigPolynomial(freqs, amps, constant), kernels


def _fractional_shift(lam: float, m: int, c0: mpf, alpha: RotationNumber) -> mpf:
    """z = λ·m·c_0 mod 1 with enough bits to keep the fraction."""
    bits = max(alpha.precision_bits + 32, m.bit_length() + 96)
    with mp.workprec(bits):
        return mp.frac(mpf(lam) * m * c0)


@dataclass
class SumEvaluation:
    """S_mφ sampled on a grid (or at random dyadic points)."""

    m: int
    polynomial: TrigPolynomial
    sample: TrigSample
    norm: Optional[mpf] = None
    kernels_ok: bool = True
    lam: Optional[float] = None
    z: Optional[mpf] = None
    integral: Optional[float] = None
    integral_error: Optional[float] = None
    crossing: Optional[float] = None

    @property
    def values(self) -> np.ndarray:
        return float(self.polynomial.constant) + self.sample.values

    @property
    def R(self) -> float:
        osc = self.sample.values
        return float(osc.max() - osc.min()) if osc.size else 0.0

    @property
    def D(self) -> float:
        return float(self.polynomial.lipschitz())

    def at_lambda(self, lam: float, alpha: RotationNumber) -> "SumEvaluation":
        """Criterion integral ∫‖λS_mφ‖ and crossing measure μ{‖λS_mφ‖ >= 1/4}."""
        z = _fractional_shift(lam, self.m, self.polynomial.constant / self.m, alpha)
        dist = circle_distance(float(z) + lam * self.sample.values)
        if self.sample.method == "midpoint":
            lip = abs(lam) * self.D / self.sample.period
            err = lip / (4 * self.sample.size)
        else:
            err = 3 * float(np.std(dist)) / math.sqrt(max(self.sample.size, 1))
        return replace(self, lam=lam, z=z, integral=float(np.mean(dist)), integral_error=err,
                       crossing=float(np.mean(dist >= 0.25)))


def birkhoff_fourier(phi: FourierRoof, alpha: RotationNumber, m: int, grid: int = DEFAULT_GRID,
                     horizon: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> SumEvaluation:
    if grid < 1 or grid & (grid - 1):
        raise ValueError(f"grid must be a power of two, got {grid}")
    poly, kernels = birkhoff_polynomial(phi, alpha, m, horizon)
    norm_m, _ = norm_of_multiple(alpha, m)
    return SumEvaluation(m, poly, poly.sample(grid, rng), norm=norm_m,
                         kernels_ok=all(kv.sandwich_ok for kv in kernels))


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------

@dataclass
class PlanStep:
    n: int
    m: int
    norm: mpf
    index: Optional[int] = None                 # s(n) for single and return plans
    q: Optional[int] = None
    b: Optional[int] = None
    window: Optional[Tuple[int, int]] = None    # (l_n, u_n) continued-fraction indices
    terms: List[dict] = field(default_factory=list)
    norm_bound: Optional[mpf] = None            # b_n·‖q_{s(n)}α‖

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "norm": self.norm, "norm_bound": self.norm_bound, "index": self.index,
                "q": self.q, "b": self.b, "window": self.window, "terms": self.terms}


@dataclass
class BirkhoffPlan:
    lam: float
    kind: str                   # single_frequency | multi_frequency | return
    steps: List[PlanStep]
    truncated: bool = False
    notes: List[str] = field(default_factory=list)
    variance_target: Optional[float] = None
    slack: Optional[float] = None

    @property
    def ms(self) -> List[int]:
        return [s.m for s in self.steps]

    @property
    def norms_decreasing(self) -> bool:
        return all(b.norm < a.norm for a, b in zip(self.steps, self.steps[1:]))

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "kind": self.kind, "truncated": self.truncated,
                "variance_target": self.variance_target, "slack": self.slack,
                "norms_decreasing": self.norms_decreasing, "notes": self.notes,
                "steps": [s.to_dict() for s in self.steps]}


def _require_lambda(lam: float) -> None:
    if lam == 0:
        raise PlanError("λ = 0 is the trivial eigenvalue", hint="choose a nonzero λ")


def _multiplier(alpha: RotationNumber, n: int) -> Optional[Tuple[int, int]]:
    """(b, q_n) with b = ceil(q_{n+1}/(4q_n)), or None when q_{n+1} is out of reach."""
    try:
        q, q_next = alpha.q(n), alpha.q(n + 1)
    except InsufficientQuotients:
        return None
    return -(-q_next // (4 * q)), q


def _finish_plan(plan: BirkhoffPlan) -> BirkhoffPlan:
    if not plan.norms_decreasing:
        plan.notes.append("‖m_nα‖ is not strictly decreasing along the plan")
        logger.warning(f"{plan.kind} plan: ‖m_nα‖ not strictly decreasing")
    return plan


def make_single_frequency_plan(alpha: RotationNumber, subsequence: Sequence[int], lam: float,
                               count: Optional[int] = None) -> BirkhoffPlan:
    """m_n = ceil(q_{s(n)+1}/(4q_{s(n)}))·q_{s(n)} along the witnessed subsequence s."""
    _require_lambda(lam)
    if not subsequence:
        raise PlanError("no best-return subsequence enters M", hint="classify the pair first; "
                        "a single-frequency plan needs large ratios |c_q|/‖qα‖")
    steps, notes = [], []
    for s in subsequence:
        got = _multiplier(alpha, s)
        if got is None:
            notes.append(f"q_{s + 1} out of reach; index {s} skipped")
            continue
        b, q = got
        m = b * q
        norm_m, _ = norm_of_multiple(alpha, m)
        theta, _ = alpha.theta(s)
        steps.append(PlanStep(n=len(steps) + 1, m=m, norm=norm_m, index=s, q=q, b=b,
                              norm_bound=b * theta))
    if count is not None and len(steps) < count:
        raise PlanError(f"only {len(steps)} usable indices, {count} requested",
                        hint="raise the horizon or the precision")
    if not steps:
        raise PlanError("no usable index in the subsequence", hint="raise the precision")
    return _finish_plan(BirkhoffPlan(lam, "single_frequency", steps, notes=notes))


def make_return_plan(alpha: RotationNumber, lam: float, indices: Sequence[int]) -> BirkhoffPlan:
    """m_n = q_n, the rigidity times of the rotation."""
    _require_lambda(lam)
    steps = []
    for n in indices:
        q = alpha.q(n)
        norm_q, _ = norm_of_multiple(alpha, q)
        steps.append(PlanStep(n=len(steps) + 1, m=q, norm=norm_q, index=n, q=q, b=1))
    if not steps:
        raise PlanError("return plan needs at least one index", hint="pass indices such as 1..16")
    return _finish_plan(BirkhoffPlan(lam, "return", steps))


def _window_term(phi: FourierRoof, alpha: RotationNumber, n: int) -> Optional[dict]:
    got = _multiplier(alpha, n)
    if got is None:
        return None
    b, q = got
    kv = kernel(alpha, b * q, q)
    with alpha.workprec():
        amp = phi.coefficient(q) * kv.value
        d = 2 * abs(amp)
        phase = mp.arg(amp)
    return {"n": n, "q": q, "b": b, "d": d, "phase": phase}


def make_multi_frequency_plan(alpha: RotationNumber, reduced: ReducedRoof, lam: float,
                              variance_target: float = DEFAULT_VARIANCE_TARGET,
                              slack: float = DEFAULT_VARIANCE_SLACK, start: int = 1) -> BirkhoffPlan:
    """Greedy windows of consecutive best returns with Σ d_k² in the target band.

    d_k = 2|c_{q_k}|·|K_{b_k q_k}(q_k)| is the amplitude of S_{b_k q_k}
    restricted to the three modes 0, ±q_k. Windows never overlap; a window
    overshooting the band drops its first term and retries.
    """
    _require_lambda(lam)
    if reduced.stage != "best_returns":
        raise PlanError("multi-frequency plans need a best-returns reduction",
                        hint="run reduce_to_best_returns first")
    lo, hi = variance_target * (1 - slack), variance_target * (1 + slack)
    terms = []
    for q in reduced.kept:
        info = reduced.members.info(q)
        if q < 2 or info is None or info.n is None or info.n < start:
            continue
        term = _window_term(reduced.roof, alpha, info.n)
        if term is None:
            logger.warning(f"q_{info.n + 1} out of reach; best return {q} not usable")
            continue
        terms.append(term)
    if not terms:
        raise PlanError("no best return carries weight", hint="Σ r² must diverge along best returns")

    steps, notes, i, truncated = [], [], 0, False
    while i < len(terms):
        j, total = i, mpf(0)
        while j < len(terms) and total < lo:
            total += terms[j]["d"] ** 2
            j += 1
        if total < lo:
            truncated = True
            notes.append(f"variance target unreachable after index {terms[i]['n']}")
            break
        if total > hi:
            i += 1
            continue
        window = terms[i:j]
        m = sum(t["b"] * t["q"] for t in window)
        norm_m, _ = norm_of_multiple(alpha, m)
        steps.append(PlanStep(n=len(steps) + 1, m=m, norm=norm_m,
                              window=(window[0]["n"], window[-1]["n"]), terms=window))
        i = j
    if truncated:
        logger.warning(f"multi-frequency plan truncated with {len(steps)} windows")
    if not steps:
        raise PlanError("no window reaches the variance target",
                        hint="lower variance_target or raise the horizon")
    return _finish_plan(BirkhoffPlan(lam, "multi_frequency", steps, truncated=truncated,
                                     notes=notes, variance_target=variance_target, slack=slack))


# ---------------------------------------------------------------------------
# λ-representatives
# ---------------------------------------------------------------------------

@dataclass
class LambdaRepresentative:
    roof: FourierRoof
    lam: float
    dropped: List[int]
    kept_sum: mpf
    bound: mpf

    @property
    def certified(self) -> bool:
        return self.kept_sum < self.bound

    @property
    def kept(self) -> List[int]:
        return list(self.roof.support or ())

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "dropped": self.dropped, "kept": self.kept,
                "kept_sum": self.kept_sum, "bound": self.bound, "certified": self.certified}


def lambda_representative(phi: FourierRoof, lam: float, horizon: Optional[int] = None) -> LambdaRepresentative:
    """Drop the smallest frequencies until Σ_kept |m c_m| < 1/(16|λ|).

    The dropped part is a trigonometric polynomial of mean zero, hence a
    coboundary over any irrational rotation.
    """
    _require_lambda(lam)
    if horizon is None:
        horizon = max(phi.support or (0,)) if phi.is_finite else DEFAULT_DIRECT_HORIZON
    freqs = phi.nonzero_frequencies(horizon)
    bound = 1 / (16 * abs(mpf(lam)))
    tail = mpf(0) if phi.is_finite else phi.tail_bound(horizon, power=1)
    if tail >= bound:
        raise PlanError(f"tail Σ|m c_m| beyond {horizon} is {mp.nstr(tail, 4)} >= {mp.nstr(bound, 4)}",
                        hint="raise the horizon or lower λ")
    weights = [abs(m * phi.coefficient(m)) for m in freqs]
    suffix = [mpf(0)] * (len(freqs) + 1)
    for i in range(len(freqs) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + weights[i]
    cut = next(i for i in range(len(freqs) + 1) if suffix[i] + tail < bound)
    kept, dropped = freqs[cut:], freqs[:cut]
    roof = phi.restricted(kept, kind=f"{phi.kind}_lambda")
    logger.info(f"lambda_representative λ={lam}: dropped {len(dropped)}, kept {len(kept)}")
    return LambdaRepresentative(roof, lam, dropped, suffix[cut] + tail, bound)


# ---------------------------------------------------------------------------
# Criterion integrals
# ---------------------------------------------------------------------------

@dataclass
class CriterionPoint:
    n: int
    m: int
    norm: mpf
    lam: float
    integral: float
    error: float
    crossing: float
    z: mpf
    R: float
    D: float
    method: str
    grid: int
    resolved: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("n", "m", "norm", "lam", "integral", "error", "crossing",
                                             "z", "R", "D", "method", "grid", "resolved")}


def _evaluate_step(step: PlanStep, phi: FourierRoof, alpha: RotationNumber, lam: float, grid: int,
                   tolerance: float, rng: np.random.Generator, horizon: Optional[int]) -> SumEvaluation:
    poly, kernels = birkhoff_polynomial(phi, alpha, step.m, horizon)
    G = grid
    while True:
        ev = SumEvaluation(step.m, poly, poly.sample(G, rng), norm=step.norm,
                           kernels_ok=all(kv.sandwich_ok for kv in kernels)).at_lambda(lam, alpha)
        if ev.integral_error <= tolerance or G >= MAX_GRID or ev.sample.method != "midpoint":
            return ev
        G *= 2


def criterion_integral(plan: BirkhoffPlan, phi_lambda: FourierRoof, alpha: RotationNumber,
                       grid: int = DEFAULT_GRID, tolerance: float = CRITERION_TOLERANCE,
                       rng: Optional[np.random.Generator] = None,
                       horizon: Optional[int] = None, lam: Optional[float] = None) -> List[CriterionPoint]:
    """∫₀¹‖λ·S_{m_n}φ_λ(x)‖dx for every step; the grid doubles until the
    Lipschitz error bound meets the tolerance."""
    if not plan.steps:
        raise PlanError("empty plan", hint="build the plan with at least one step")
    lam = plan.lam if lam is None else lam
    rng = rng if rng is not None else np.random.default_rng(0)
    points = []
    for step in plan.steps:
        ev = _evaluate_step(step, phi_lambda, alpha, lam, grid, tolerance, rng, horizon)
        resolved = ev.integral_error <= tolerance
        if not resolved:
            logger.warning(f"criterion integral at m={step.m} error {ev.integral_error:.3g} above {tolerance}")
        points.append(CriterionPoint(step.n, step.m, step.norm, lam, ev.integral, ev.integral_error,
                                     ev.crossing, ev.z, ev.R, ev.D, ev.sample.method, ev.sample.size, resolved))
    return points


def phase_defect_integral(plan: BirkhoffPlan, phi_lambda: FourierRoof, alpha: RotationNumber,
                          grid: int = DEFAULT_GRID, rng: Optional[np.random.Generator] = None,
                          horizon: Optional[int] = None) -> List[dict]:
    """∫|e(λS_{m_n}φ) − 1|dx next to 4× and 2π× the criterion integral."""
    rng = rng if rng is not None else np.random.default_rng(0)
    rows = []
    for step in plan.steps:
        poly, _ = birkhoff_polynomial(phi_lambda, alpha, step.m, horizon)
        ev = SumEvaluation(step.m, poly, poly.sample(grid, rng)).at_lambda(plan.lam, alpha)
        y = float(ev.z) + plan.lam * ev.sample.values
        defect = float(np.mean(2 * np.abs(np.sin(np.pi * y))))
        rows.append({"n": step.n, "m": step.m, "defect": defect, "integral": ev.integral,
                     "lower": 4 * ev.integral, "upper": 2 * math.pi * ev.integral})
    return rows


def equivalent_distances_check(samples: int = 10_000, seed: int = 0, slack: float = 1e-12) -> dict:
    """4‖x‖ <= |e(x) − 1| <= 2π‖x‖ at seeded random x."""
    x = np.random.default_rng(seed).random(samples)
    d = circle_distance(x)
    e = 2 * np.abs(np.sin(np.pi * x))
    lower = int(np.sum(4 * d > e + slack))
    upper = int(np.sum(e > 2 * np.pi * d + slack))
    return {"samples": samples, "seed": seed, "lower_violations": lower, "upper_violations": upper,
            "holds": lower == 0 and upper == 0}


# ---------------------------------------------------------------------------
# Single-frequency estimates
# ---------------------------------------------------------------------------

def _multiples_of(phi: FourierRoof, q: int) -> FourierRoof:
    return phi.restricted([m for m in (phi.support or ()) if m % q == 0], kind=f"{phi.kind}_q{q}")


@dataclass
class RangeEstimate:
    n: int
    lam: float
    R: float
    D: float
    crossing: float
    above_threshold: bool
    R_lower: Optional[float]
    D_upper: Optional[float]
    intermediate: float
    measure_bound: Optional[float]

    @property
    def range_ok(self) -> Optional[bool]:
        return None if self.R_lower is None else self.R > self.R_lower

    @property
    def measure_ok(self) -> Optional[bool]:
        if self.measure_bound is None or not self.above_threshold:
            return None
        return self.crossing > self.measure_bound

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("n", "lam", "R", "D", "crossing", "above_threshold", "R_lower",
                                             "D_upper", "intermediate", "measure_bound")}
        out.update(range_ok=self.range_ok, measure_ok=self.measure_ok)
        return out


def measure_bound(K1: float, K2: float) -> float:
    """(1 − 4K1)/(8(1 + K2))."""
    return (1 - 4 * K1) / (8 * (1 + K2))


def range_derivative_measure(plan: BirkhoffPlan, n: int, phi_lambda: FourierRoof, alpha: RotationNumber,
                             lam: Optional[float] = None, K1: Optional[float] = None, K2: Optional[float] = None,
                             grid: int = DEFAULT_GRID, rng: Optional[np.random.Generator] = None) -> RangeEstimate:
    """R_n, D_n and μ{‖λS_{m_n}φ_n‖ >= 1/4} for φ_n the multiples of q_{s(n)}."""
    if plan.kind != "single_frequency":
        raise PlanError("range estimates need a single-frequency plan", hint="use make_single_frequency_plan")
    step = plan.steps[n - 1]
    lam = plan.lam if lam is None else lam
    phi_n = _multiples_of(phi_lambda, step.q)
    c_q = phi_lambda.coefficient(step.q)
    if c_q == 0:
        raise PlanError(f"c_{step.q} is not kept by φ_λ", hint="lower λ or use a later plan index")
    ev = birkhoff_fourier(phi_n, alpha, step.m, grid, rng=rng).at_lambda(lam, alpha)
    R, D = ev.R, ev.D
    ratio = kernel(alpha, step.m, step.q).norm_ratio
    R_lower = D_upper = bound = None
    if K1 is not None:
        R_lower = float(2 * ratio * abs(c_q) * (1 - 4 * K1))
    if K1 is not None and K2 is not None:
        D_upper = float(4 * step.q * ratio * abs(c_q) * (1 + K2))
        bound = measure_bound(K1, K2)
    above = abs(lam) * R > RANGE_THRESHOLD
    if not above:
        logger.info(f"|λ|R_{n} = {abs(lam) * R:.3g} below {RANGE_THRESHOLD}; measure bound not asserted")
    return RangeEstimate(n, lam, R, D, ev.crossing, above, R_lower, D_upper,
                         step.q * R / (4 * D) if D else 0.0, bound)


def birkhoff_closeness(plan: BirkhoffPlan, n: int, phi_lambda: FourierRoof, alpha: RotationNumber,
                       lam: Optional[float] = None, grid: int = DEFAULT_GRID,
                       rng: Optional[np.random.Generator] = None) -> dict:
    """sup|λS_{m_n}φ_λ − λS_{m_n}φ_n| on the grid against 1/8 and 2|λ|Σ|m c_m|."""
    step = plan.steps[n - 1]
    lam = plan.lam if lam is None else lam
    rest = [m for m in (phi_lambda.support or ()) if m % step.q]
    analytic = 2 * abs(lam) * float(mp.fsum(abs(m * phi_lambda.coefficient(m)) for m in rest))
    if not rest:
        measured = 0.0
    else:
        diff, _ = birkhoff_polynomial(phi_lambda.restricted(rest), alpha, step.m)
        measured = abs(lam) * float(np.max(np.abs(diff.sample(grid, rng).values)))
    return {"n": n, "m": step.m, "lam": lam, "measured": measured, "analytic": analytic,
            "within": measured < CLOSENESS_BOUND}


# ---------------------------------------------------------------------------
# Multi-frequency estimates
# ---------------------------------------------------------------------------

def delta_n(plan: BirkhoffPlan, phi2: FourierRoof, alpha: RotationNumber, grid: int = DEFAULT_GRID,
            rng: Optional[np.random.Generator] = None) -> List[dict]:
    """Δ_n = sup|S_{m_n}φ₂(x) − Σ_k S_{b_kq_k}φ_k(x + Σ_{j<k} b_jq_jα)|.

    By the cocycle identity the difference is Σ_k S_{b_kq_k}(φ₂ − φ_k) at
    the shifted points, a trigonometric polynomial in the frequencies of φ₂
    whose amplitudes are assembled here in mpmath.
    """
    if plan.kind != "multi_frequency":
        raise PlanError("Δ_n needs a multi-frequency plan", hint="use make_multi_frequency_plan")
    starts = [s.window[0] for s in plan.steps]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise PlanError("window starts must increase", hint="rebuild the plan")
    rng = rng if rng is not None else np.random.default_rng(0)
    freqs = list(phi2.support or ())
    rows = []
    for step in plan.steps:
        amps: Dict[int, mpc] = {f: mpc(0) for f in freqs}
        deltas = []
        offset = 0
        for term in step.terms:
            m_k = term["b"] * term["q"]
            local = mpf(0)
            for f in freqs:
                if f == term["q"]:
                    continue
                shift, _ = signed_residue(alpha, f * offset)
                with alpha.workprec():
                    contribution = phi2.coefficient(f) * kernel(alpha, m_k, f).value
                    amps[f] += contribution * mp.expjpi(2 * shift)
                    local += 2 * abs(contribution)
            deltas.append(local)
            offset += m_k
        live = [f for f in freqs if amps[f] != 0]
        poly = TrigPolynomial(live, [amps[f] for f in live])
        sample = poly.sample(grid, rng)
        measured = float(np.max(np.abs(sample.values))) if live else 0.0
        bound = mp.fsum(deltas)
        rows.append({"n": step.n, "m": step.m, "delta": measured, "delta_k": deltas,
                     "bound": bound, "within_bound": measured <= float(bound) * (1 + 1e-9) + 1e-15,
                     "method": sample.method})
    return rows


def _truncated_mean(mu: np.ndarray, sigma: float, c: float, d: float) -> np.ndarray:
    """E[W; c < W < d] for W ~ N(mu, sigma²)."""
    a, b = (c - mu) / sigma, (d - mu) / sigma
    return mu * (norm.cdf(b) - norm.cdf(a)) + sigma * (norm.pdf(a) - norm.pdf(b))


def gaussian_norm_expectation(z: float, v: float) -> float:
    """∫‖y‖ dN(z, v)(y)."""
    if v < 0:
        raise ValueError("variance must be nonnegative")
    z = float(z) % 1.0
    if v == 0:
        return min(z, 1 - z)
    sigma = math.sqrt(v)
    if sigma > 1:
        k = np.arange(1, 200, 2)
        return float(0.25 - np.sum(2 / (np.pi ** 2 * k ** 2) * np.cos(2 * np.pi * k * z)
                                   * np.exp(-2 * np.pi ** 2 * k ** 2 * v)))
    reach = int(math.ceil(10 * sigma)) + 1
    mu = z - np.arange(-reach, reach + 2, dtype=np.float64)
    return float(np.sum(_truncated_mean(mu, sigma, 0.0, 0.5) - _truncated_mean(mu, sigma, -0.5, 0.0)))


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

def lambda_grid(lam_min: float, lam_max: float = LAMBDA_MAX, count: int = LAMBDA_COUNT) -> List[float]:
    if lam_min <= 0 or lam_max < lam_min:
        raise ValueError(f"need 0 < lam_min <= lam_max, got {lam_min}, {lam_max}")
    return [float(v) for v in np.geomspace(lam_min, lam_max, count)]


def range_threshold_lambda(plan: BirkhoffPlan, phi: FourierRoof, alpha: RotationNumber, grid: int = DEFAULT_GRID,
                           rng: Optional[np.random.Generator] = None) -> Optional[float]:
    """Smallest λ with |λ|R_N > 4 on the last plan step; None when R_N = 0.

    R_N is the range of S_{m_N}φ_N, with φ_N the multiples of q_{s(N)} for
    single-frequency plans and all of φ otherwise.
    """
    if not plan.steps:
        return None
    step = plan.steps[-1]
    part = _multiples_of(phi, step.q) if plan.kind == "single_frequency" else phi
    R = birkhoff_fourier(part, alpha, step.m, grid, rng=rng).R
    if R <= 0:
        return None
    return float(np.nextafter(RANGE_THRESHOLD / R, np.inf))


@dataclass
class LambdaCertificate:
    lam: float
    status: str
    points: List[CriterionPoint]
    skipped: List[int]
    representative: Optional[LambdaRepresentative] = None
    gaussian: List[float] = field(default_factory=list)
    ks: List[float] = field(default_factory=list)

    @property
    def below_threshold(self) -> List[int]:
        """Plan indices n with |λ|R_n <= 4."""
        return [p.n for p in self.points if abs(self.lam) * p.R <= RANGE_THRESHOLD]

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "status": self.status, "skipped": self.skipped,
                "below_threshold": self.below_threshold,
                "points": [p.to_dict() for p in self.points],
                "representative": None if self.representative is None else self.representative.to_dict(),
                "gaussian": self.gaussian, "ks": self.ks}


@dataclass
class WeakMixingCertificate:
    status: str
    kind: str
    per_lambda: List[LambdaCertificate]
    notes: List[str] = field(default_factory=lambda: [SUBGROUP_REMARK])

    def to_dict(self) -> dict:
        return {"status": self.status, "kind": self.kind, "notes": self.notes,
                "per_lambda": [c.to_dict() for c in self.per_lambda]}

    def table(self) -> List[dict]:
        return [p.to_dict() for c in self.per_lambda for p in c.points]


def _usable_steps(plan: BirkhoffPlan, kept: Sequence[int]) -> Tuple[List[PlanStep], List[int]]:
    if plan.kind == "return":
        return list(plan.steps), []
    keep = set(kept)
    usable, skipped = [], []
    for step in plan.steps:
        qs = [step.q] if plan.kind == "single_frequency" else [t["q"] for t in step.terms]
        (usable if all(q in keep for q in qs) else skipped).append(step)
    return usable, [s.n for s in skipped]


def _status(values: Sequence[float], pass_floor: float, refute_ceiling: float) -> str:
    if not values:
        return INCONCLUSIVE
    if values[-1] < refute_ceiling:
        return REFUTED
    if min(values) >= pass_floor:
        return PASS
    return INCONCLUSIVE


def weak_mixing_certificate(plan: BirkhoffPlan, phi_reduced: FourierRoof, alpha: RotationNumber,
                            lambdas: Sequence[float], grid: int = DEFAULT_GRID,
                            tolerance: float = CRITERION_TOLERANCE, pass_floor: float = PASS_FLOOR,
                            refute_ceiling: float = REFUTE_CEILING, seed: int = 0,
                            horizon: Optional[int] = None) -> WeakMixingCertificate:
    """Criterion integrals for every λ; PASS when all λ pass, REFUTED when one
    λ has its last integral below refute_ceiling."""
    from .lacunary_clt import ks_against_normal  # lazy: lacunary_clt imports this module

    if any(lam == 0 for lam in lambdas):
        raise PlanError("λ = 0 is the trivial eigenvalue", hint="drop 0 from the λ grid")
    children = np.random.SeedSequence(seed).spawn(len(lambdas))
    results = []
    for lam, child in zip(lambdas, children):
        rng = np.random.default_rng(child)
        if plan.kind == "return":
            rep, phi_lam = None, phi_reduced
        else:
            rep = lambda_representative(phi_reduced, lam)
            phi_lam = rep.roof
        usable, skipped = _usable_steps(plan, phi_lam.support or ())
        sub = replace(plan, lam=lam, steps=usable)
        points = criterion_integral(sub, phi_lam, alpha, grid, tolerance, rng, horizon) if usable else []
        cert = LambdaCertificate(lam, _status([p.integral for p in points], pass_floor, refute_ceiling),
                                 points, skipped, rep)
        if plan.kind == "multi_frequency":
            for step in usable:
                poly, _ = birkhoff_polynomial(phi_lam, alpha, step.m, horizon)
                v = float(2 * mp.fsum(abs(a) ** 2 for a in poly.amplitudes)) * lam ** 2
                samples = lam * poly.sample(grid, rng).values
                cert.ks.append(ks_against_normal(samples, 0.0, v) if v > 0 else 1.0)
                z = _fractional_shift(lam, step.m, phi_lam.c0, alpha)
                cert.gaussian.append(gaussian_norm_expectation(float(z), v))
        results.append(cert)
        logger.info(f"certificate λ={lam:.4g}: {cert.status} ({len(points)} points, {len(skipped)} skipped)")

    statuses = [c.status for c in results]
    if REFUTED in statuses:
        overall = REFUTED
    elif statuses and all(s == PASS for s in statuses):
        overall = PASS
    else:
        overall = INCONCLUSIVE
    return WeakMixingCertificate(overall, plan.kind, results)
