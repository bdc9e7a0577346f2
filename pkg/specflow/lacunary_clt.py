"""Central limit behaviour of lacunary sums X(x) = Σ c_k cos(2πq_k x + r_k).

x is uniform on [0, 1). Under uniform x each term has variance c_k²/2, so
the limiting normal of a row is N(0, v) with v = ½Σc_k². Rows normalized
to Σc_k² = 2 therefore target N(0, 1).
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath import mp
from scipy.stats import kstest

from .birkhoff import BirkhoffPlan, kernel
from .cohomology import ReducedRoof
from .diophantine import RotationNumber, signed_residue
from .errors import PlanError
from .roof import FourierRoof, dyadic_phases, midpoint_grid

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000
MIN_SAMPLES = 1_000
KS_THRESHOLD = 0.05
CF_THRESHOLD = 0.02
LACUNARITY = 2.0
EXACT_ZERO_TERMS = 20
PRODUCT_TERMS = 16
MAX_QUADRATURE_GRID = 1 << 22
DEFAULT_T_GRID = tuple(np.round(np.linspace(-3.0, 3.0, 61), 10))
STATED_CONVENTION = "Σc² = 1 with limit N(0, 1); measured variance of the row is ½Σc²"


@dataclass
class LacunaryRow:
    frequencies: List[int]
    coefficients: np.ndarray
    phases: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        self.phases = np.asarray(self.phases, dtype=np.float64)
        if not len(self.frequencies) == len(self.coefficients) == len(self.phases):
            raise ValueError("row frequencies, coefficients and phases differ in length")
        if any(b <= a for a, b in zip(self.frequencies, self.frequencies[1:])):
            raise ValueError("row frequencies must increase")

    @property
    def u(self) -> int:
        return len(self.frequencies)

    @property
    def variance(self) -> float:
        return 0.5 * float(np.sum(self.coefficients ** 2))

    @property
    def lacunarity(self) -> float:
        """min q_{k+1}/q_k (inf for a single term)."""
        ratios = [b / a for a, b in zip(self.frequencies, self.frequencies[1:])]
        return min(ratios, default=math.inf)

    def evaluate(self, phases: np.ndarray) -> np.ndarray:
        """X at points given by frac(q_k x) (shape samples × u)."""
        if not self.u:
            return np.zeros(phases.shape[0])
        return np.cos(2 * np.pi * phases + self.phases[None, :]) @ self.coefficients

    def to_dict(self) -> dict:
        return {"u": self.u, "frequencies": [str(q) if q > 2 ** 53 else q for q in self.frequencies],
                "coefficients": self.coefficients.tolist(), "phases": self.phases.tolist(),
                "constant": self.constant}


@dataclass
class LacunaryArray:
    rows: List[LacunaryRow]
    target: Optional[float] = None          # Σc² per row
    tolerance: float = 0.05
    ratio: float = LACUNARITY

    def check(self) -> List[dict]:
        """Lacunarity, normalization and zero representation for every row."""
        out = []
        for n, row in enumerate(self.rows):
            total = 2 * row.variance
            zero = zero_representation_check(row.frequencies)
            out.append({
                "n": n, "u": row.u,
                "lacunary": row.lacunarity >= self.ratio,
                "normalized": None if self.target is None else abs(total - self.target) <= self.tolerance,
                "zero_representation": zero.passed,
                "max_coefficient": float(np.max(np.abs(row.coefficients))) if row.u else 0.0,
            })
        return out

    @property
    def maxima_decreasing(self) -> bool:
        maxima = [float(np.max(np.abs(r.coefficients))) for r in self.rows if r.u]
        return all(b <= a for a, b in zip(maxima, maxima[1:]))

    def to_dict(self) -> dict:
        return {"target": self.target, "tolerance": self.tolerance, "ratio": self.ratio,
                "rows": [r.to_dict() for r in self.rows]}


def dyadic_rows(sizes: Sequence[int], total_variance: float = 2.0, seed: Optional[int] = 0,
                ratio: int = int(LACUNARITY)) -> LacunaryArray:
    """Equal-coefficient rows with q_k = ratio^k, k < u, and Σc² = total_variance.

    Phases are uniform on [0, 2π) from the seed; seed=None gives zero phases.
    """
    rng = np.random.default_rng(seed) if seed is not None else None
    rows = []
    for u in sizes:
        if u < 1:
            raise ValueError(f"row size must be >= 1, got {u}")
        coeffs = np.full(u, math.sqrt(total_variance / u))
        phases = rng.uniform(0, 2 * np.pi, u) if rng is not None else np.zeros(u)
        rows.append(LacunaryRow([ratio ** k for k in range(u)], coeffs, phases))
    return LacunaryArray(rows, target=total_variance, tolerance=1e-9, ratio=float(ratio))


# ---------------------------------------------------------------------------
# Sampling and distances
# ---------------------------------------------------------------------------

@dataclass
class EmpiricalDistribution:
    samples: np.ndarray
    seed: Optional[int]
    n: int = 0

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def variance(self) -> float:
        return float(np.var(self.samples))

    def to_dict(self) -> dict:
        return {"n": self.n, "size": self.size, "seed": self.seed, "mean": self.mean, "variance": self.variance}


def sample_row(arr: LacunaryArray, n: int, samples: int = DEFAULT_SAMPLES,
               seed: Union[int, np.random.SeedSequence, None] = 0) -> EmpiricalDistribution:
    """X_n at uniformly random dyadic points; deterministic under seed."""
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    row = arr.rows[n]
    rng = np.random.default_rng(seed)
    _, phases = dyadic_phases(row.frequencies, samples, rng)
    return EmpiricalDistribution(row.evaluate(phases), seed if isinstance(seed, int) else None, n)


def ks_against_normal(dist: Union[EmpiricalDistribution, np.ndarray], mean: float, variance: float) -> float:
    """Two-sided sup distance between the empirical CDF and N(mean, variance)."""
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    samples = dist.samples if isinstance(dist, EmpiricalDistribution) else np.asarray(dist)
    return float(kstest(samples, "norm", args=(mean, math.sqrt(variance))).statistic)


@dataclass
class CharacteristicTable:
    t: np.ndarray
    values: np.ndarray
    target: np.ndarray
    method: str

    @property
    def sup_distance(self) -> float:
        return float(np.max(np.abs(self.values - self.target))) if len(self.t) else 0.0

    def to_dict(self) -> dict:
        return {"t": self.t.tolist(), "re": self.values.real.tolist(), "im": self.values.imag.tolist(),
                "target": self.target.tolist(), "sup_distance": self.sup_distance, "method": self.method}


def _row_on_grid(row: LacunaryRow, G: int) -> np.ndarray:
    odd = 2 * np.arange(G, dtype=np.int64) + 1
    values = np.zeros(G)
    for q, c, r in zip(row.frequencies, row.coefficients, row.phases):
        idx = ((q % (2 * G)) * odd) % (2 * G)
        values += c * np.cos(np.pi * idx / G + r)
    return values


def characteristic_function(arr: LacunaryArray, n: int, t_grid: Sequence[float] = DEFAULT_T_GRID,
                            variance: Optional[float] = None, samples: int = DEFAULT_SAMPLES,
                            seed: Union[int, np.random.SeedSequence, None] = 0) -> CharacteristicTable:
    """φ_n(t) = ∫ exp(itX_n(x))dx against exp(−t²v/2).

    Midpoint quadrature with G >= 8·max q·(1 + |t|Σ|c|) points when that
    fits, Monte Carlo over dyadic points otherwise.
    """
    row = arr.rows[n]
    t = np.asarray(t_grid, dtype=np.float64)
    v = row.variance if variance is None else variance
    target = np.exp(-t ** 2 * v / 2)
    if not row.u:
        return CharacteristicTable(t, np.ones(len(t), dtype=np.complex128), target, "exact")
    spread = 1 + float(np.max(np.abs(t), initial=0.0)) * float(np.sum(np.abs(row.coefficients)))
    need = 8 * max(row.frequencies) * spread
    if need <= MAX_QUADRATURE_GRID:
        G = 1 << max(10, math.ceil(math.log2(need)))
        x_values = _row_on_grid(row, G)
        method = "midpoint"
    else:
        x_values = sample_row(arr, n, samples, seed).samples
        method = "dyadic_monte_carlo"
    values = np.array([np.mean(np.exp(1j * tt * x_values)) for tt in t])
    values[t == 0] = 1.0
    return CharacteristicTable(t, values, target, method)


# ---------------------------------------------------------------------------
# Arithmetic identities
# ---------------------------------------------------------------------------

@dataclass
class ZeroRepresentation:
    passed: Optional[bool]
    method: str
    witness: Optional[List[int]] = None

    def to_dict(self) -> dict:
        return {"passed": self.passed, "method": self.method, "witness": self.witness}


def _signed_sums(freqs: Sequence[int]) -> Dict[int, Tuple[int, ...]]:
    """sum -> a sign vector reaching it, preferring nonzero vectors."""
    table: Dict[int, Tuple[int, ...]] = {}
    for signs in itertools.product((-1, 0, 1), repeat=len(freqs)):
        s = sum(b * q for b, q in zip(signs, freqs))
        if s not in table or not any(table[s]):
            table[s] = signs
    return table


def zero_representation_check(frequencies: Sequence[int]) -> ZeroRepresentation:
    """Whether Σ b_k q_k = 0 has a solution with b ∈ {−1, 0, 1}^u, b ≠ 0."""
    freqs = [int(q) for q in frequencies]
    if any(b <= a for a, b in zip(freqs, freqs[1:])):
        raise ValueError("frequencies must increase")
    running = 0
    dominant = True
    for q in freqs:
        if q <= running:
            dominant = False
            break
        running += q
    if dominant:
        return ZeroRepresentation(True, "dominance")
    if len(freqs) > EXACT_ZERO_TERMS:
        logger.warning(f"zero representation undetermined for {len(freqs)} non-dominant frequencies")
        return ZeroRepresentation(None, "undetermined")
    half = len(freqs) // 2
    left, right = freqs[:half], freqs[half:]
    table = _signed_sums(left)
    for signs in itertools.product((-1, 0, 1), repeat=len(right)):
        s = sum(b * q for b, q in zip(signs, right))
        mate = table.get(-s)
        if mate is not None and (any(mate) or any(signs)):
            return ZeroRepresentation(False, "meet_in_the_middle", list(mate) + list(signs))
    return ZeroRepresentation(True, "meet_in_the_middle")


def _half_products(row: LacunaryRow, idx: Sequence[int], t: float) -> Dict[int, complex]:
    weights: Dict[int, complex] = defaultdict(complex)
    for signs in itertools.product((-1, 0, 1), repeat=len(idx)):
        w = 1 + 0j
        s = 0
        for b, k in zip(signs, idx):
            if b:
                w *= 0.5j * t * row.coefficients[k] * np.exp(1j * b * row.phases[k])
                s += b * row.frequencies[k]
        weights[s] += w
    return weights


def cosine_product_integral(arr: Union[LacunaryArray, LacunaryRow], n: int, t: float,
                            method: str = "expansion", max_terms: int = PRODUCT_TERMS) -> complex:
    """∫₀¹ Π_k (1 + itc_k cos(2πq_k x + r_k)) dx for row n.

    The expansion keeps the sign vectors with Σ b_k q_k = 0 (meet in the
    middle); the quadrature is exact on a midpoint grid finer than Σq_k.
    Lacunary rows give 1; other rows may not.
    """
    row = arr if isinstance(arr, LacunaryRow) else arr.rows[n]
    if row.u > max_terms:
        raise ValueError(f"row has {row.u} terms, bound is {max_terms}")
    if method == "quadrature":
        G = 1 << max(4, math.ceil(math.log2(sum(row.frequencies) + 1)) + 1)
        if G > MAX_QUADRATURE_GRID:
            raise ValueError(f"quadrature grid {G} too large; use the expansion")
        x = midpoint_grid(G)
        prod = np.ones(G, dtype=np.complex128)
        for q, c, r in zip(row.frequencies, row.coefficients, row.phases):
            prod *= 1 + 1j * t * c * np.cos(2 * np.pi * q * x + r)
        return complex(np.mean(prod))
    if method != "expansion":
        raise ValueError(f"unknown method {method!r}")
    half = row.u // 2
    left = _half_products(row, range(half), t)
    right = _half_products(row, range(half, row.u), t)
    return complex(sum(w * right.get(-s, 0) for s, w in left.items()))


def row_diagnostics(row: LacunaryRow, t: float = 1.0) -> dict:
    c = row.coefficients
    return {
        "u": row.u,
        "max_coefficient": float(np.max(np.abs(c))) if row.u else 0.0,
        "sum_squares": float(np.sum(c ** 2)),
        "sum_fourth": float(np.sum(c ** 4)),
        "lacunarity": row.lacunarity,
        "product_bound": float(np.prod(np.sqrt(1 + t ** 2 * c ** 2))),
        "zero_representation": zero_representation_check(row.frequencies).passed,
    }


# ---------------------------------------------------------------------------
# From Birkhoff plans to rows
# ---------------------------------------------------------------------------

def birkhoff_to_lacunary(reduced: Union[ReducedRoof, FourierRoof], alpha: RotationNumber,
                         plan: BirkhoffPlan) -> LacunaryArray:
    """Row n = the window terms d_k cos(2πq_k x + r_k) of S_{m_n}φ₂.

    r_k is the argument of c_{q_k}·K_{b_kq_k}(q_k)·e(q_k·Σ_{j<k} b_jq_jα);
    the constant m_n·c_0 is kept on the row for the z_n bookkeeping.
    """
    if plan.kind != "multi_frequency":
        raise PlanError("rows come from multi-frequency plans", hint="use make_multi_frequency_plan")
    windows = [s.window for s in plan.steps]
    if any(b[0] <= a[1] for a, b in zip(windows, windows[1:])):
        raise PlanError("plan windows overlap", hint="rebuild the plan")
    phi = reduced.roof if isinstance(reduced, ReducedRoof) else reduced
    rows = []
    for step in plan.steps:
        freqs, coeffs, phases = [], [], []
        offset = 0
        for term in step.terms:
            q, m_k = term["q"], term["b"] * term["q"]
            shift, _ = signed_residue(alpha, q * offset)
            with alpha.workprec():
                amp = phi.coefficient(q) * kernel(alpha, m_k, q).value * mp.expjpi(2 * shift)
                coeffs.append(float(2 * abs(amp)))
                phases.append(float(mp.arg(amp)) % (2 * math.pi))
            freqs.append(q)
            offset += m_k
        rows.append(LacunaryRow(freqs, np.array(coeffs), np.array(phases),
                                constant=float(step.m * phi.c0)))
    target = plan.variance_target
    tolerance = target * plan.slack if target is not None and plan.slack is not None else 0.05
    return LacunaryArray(rows, target=target, tolerance=tolerance)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

@dataclass
class RowSummary:
    n: int
    u: int
    ks: float
    cf_distance: float
    variance: float
    expected_variance: float
    method: str
    checks: dict = field(default_factory=dict)

    @property
    def normal_within(self) -> bool:
        return self.ks <= KS_THRESHOLD and self.cf_distance <= CF_THRESHOLD

    def to_dict(self) -> dict:
        return {"n": self.n, "u": self.u, "ks": self.ks, "cf_distance": self.cf_distance,
                "variance": self.variance, "expected_variance": self.expected_variance,
                "method": self.method, "normal_within": self.normal_within, **self.checks}


def distribution_table(arr: LacunaryArray, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                       t_grid: Sequence[float] = DEFAULT_T_GRID) -> List[RowSummary]:
    """KS distance and characteristic-function distance for every row."""
    children = np.random.SeedSequence(seed).spawn(len(arr.rows))
    checks = arr.check()
    out = []
    for n, (row, child) in enumerate(zip(arr.rows, children)):
        dist = sample_row(arr, n, samples, child)
        v = row.variance
        ks = ks_against_normal(dist, 0.0, v) if v > 0 else 1.0
        cf = characteristic_function(arr, n, t_grid, v, samples, child)
        out.append(RowSummary(n, row.u, ks, cf.sup_distance, dist.variance, v, cf.method, checks[n]))
        logger.info(f"row {n} (u={row.u}): KS {ks:.4f}, cf {cf.sup_distance:.4f}")
    return out
