"""Roof functions given by Fourier coefficients.

A roof is φ(x) = Σ c_m e(mx) with e(x) = exp(2πix), stored through its
coefficients for m >= 0 (c_{-m} = conj(c_m)). Families: dyadic, prime,
exponential decay, finite tables, constants and resonant roofs built on a
rotation number. Also here: the sampling core for real trigonometric
polynomials used by the Birkhoff and lacunary modules, positivity and
smoothness certificates, and the [H1]-[H3] coefficient checks.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath import mp, mpc, mpf
from sympy import isprime, primerange

from .errors import InvalidRoof, NonHermitianCoefficients

logger = logging.getLogger(__name__)

Number = Union[mpf, mpc]

DEFAULT_SUPPORT_HORIZON = 1 << 20
DEFAULT_INNER_MULTIPLE = 64
POSITIVITY_GRID = 1 << 14
IMAG_TOLERANCE = 1e-12
H1_TOLERANCE = 1e-8
H2_THRESHOLD = 0.25
H3_GROWTH = 1.5
H2_MIN_HORIZON = 4          # below this the second half holds too few frequencies
# Largest number of sample points materialized at once by dyadic_phases.
PHASE_CHUNK_CELLS = 1 << 21


# ---------------------------------------------------------------------------
# Sampling of real trigonometric polynomials
# ---------------------------------------------------------------------------

def midpoint_grid(G: int) -> np.ndarray:
    """x_j = (2j+1)/(2G), j = 0..G-1."""
    return (2 * np.arange(G, dtype=np.float64) + 1) / (2 * G)


def dyadic_phases(frequencies: Sequence[int], samples: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """frac(q·x) for x uniform on the dyadic lattice of step 2^-(B+53).

    B is the bit length of the largest frequency. x is drawn bit by bit,
    frac(2^j x) is read off the bit stream and frac(q x) is assembled from
    the binary digits of q, so arbitrarily large q are sampled without
    aliasing. Returns (x as float, phases of shape samples × len(frequencies)).
    """
    freqs = [int(q) for q in frequencies]
    if any(q < 0 for q in freqs):
        raise ValueError("dyadic_phases expects nonnegative frequencies")
    width = max([q.bit_length() for q in freqs] + [1])
    qbits = np.zeros((width, len(freqs)), dtype=np.float64)
    for k, q in enumerate(freqs):
        j = 0
        while q:
            if q & 1:
                qbits[j, k] = 1.0
            q >>= 1
            j += 1
    weights = np.ldexp(1.0, -np.arange(1, 54))
    chunk = max(256, PHASE_CHUNK_CELLS // width)
    xs, phases = [], []
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        bits = rng.integers(0, 2, size=(n, width + 53), dtype=np.uint8)
        shifted = np.zeros((n, width), dtype=np.float64)
        for i in range(53):
            shifted += bits[:, i:i + width] * weights[i]
        xs.append(shifted[:, 0])
        phases.append(np.mod(shifted @ qbits, 1.0))
        done += n
    return np.concatenate(xs), np.concatenate(phases, axis=0)


@dataclass
class TrigSample:
    """Oscillatory part of a trigonometric polynomial at sample points.

    values = scale · osc, the full function is constant + values. `x` is
    in the reduced variable y = period·x (the polynomial is 1/period
    periodic).
    """

    x: np.ndarray
    osc: np.ndarray
    scale: mpf
    constant: mpf
    method: str
    period: int

    @property
    def values(self) -> np.ndarray:
        return float(self.scale) * self.osc

    @property
    def size(self) -> int:
        return len(self.osc)


@dataclass
class TrigPolynomial:
    """constant + 2·Re Σ_k a_k e(f_k x) with distinct integers f_k > 0."""

    frequencies: List[int]
    amplitudes: List[mpc]
    constant: mpf = mpf(0)

    def __post_init__(self):
        if len(self.frequencies) != len(self.amplitudes):
            raise ValueError("frequencies and amplitudes differ in length")
        if any(f <= 0 for f in self.frequencies):
            raise ValueError("TrigPolynomial frequencies must be positive")

    @property
    def scale(self) -> mpf:
        return max([abs(a) for a in self.amplitudes] + [mpf(0)])

    @property
    def period(self) -> int:
        if not self.frequencies:
            return 1
        return reduce(math.gcd, self.frequencies)

    def sup_bound(self) -> mpf:
        return 2 * mp.fsum(abs(a) for a in self.amplitudes)

    def lipschitz(self) -> mpf:
        """Bound on sup |d/dx| of the oscillatory part."""
        return 4 * mp.pi * mp.fsum(f * abs(a) for f, a in zip(self.frequencies, self.amplitudes))

    def derivative(self) -> "TrigPolynomial":
        return TrigPolynomial(
            list(self.frequencies),
            [2j * mp.pi * f * a for f, a in zip(self.frequencies, self.amplitudes)],
        )

    def _normalized(self, scale: mpf) -> np.ndarray:
        if scale == 0:
            return np.zeros(len(self.amplitudes), dtype=np.complex128)
        return np.array([complex(a / scale) for a in self.amplitudes], dtype=np.complex128)

    def grid_feasible(self, G: int) -> bool:
        if not self.frequencies:
            return True
        return max(self.frequencies) // self.period <= G // 4

    def on_grid(self, G: int) -> TrigSample:
        """Exact-phase evaluation on the midpoint grid of one period."""
        d = self.period
        scale = self.scale
        amps = self._normalized(scale)
        roots = np.exp(2j * np.pi * np.arange(2 * G) / (2 * G))
        odd = 2 * np.arange(G, dtype=np.int64) + 1
        acc = np.zeros(G, dtype=np.complex128)
        for f, a in zip(self.frequencies, amps):
            if a == 0:
                continue
            r = (f // d) % (2 * G)
            acc += a * roots[(r * odd) % (2 * G)]
        return TrigSample(midpoint_grid(G), 2 * acc.real, scale, mpf(self.constant), "midpoint", d)

    def at_random_points(self, samples: int, rng: np.random.Generator) -> TrigSample:
        d = self.period
        scale = self.scale
        amps = self._normalized(scale)
        x, phases = dyadic_phases([f // d for f in self.frequencies], samples, rng)
        osc = 2 * (np.exp(2j * np.pi * phases) @ amps).real if len(amps) else np.zeros(samples)
        return TrigSample(x, osc, scale, mpf(self.constant), "dyadic_monte_carlo", d)

    def sample(self, G: int, rng: Optional[np.random.Generator] = None) -> TrigSample:
        """Midpoint grid when it resolves every frequency, random dyadic points otherwise."""
        if self.grid_feasible(G):
            return self.on_grid(G)
        if rng is None:
            rng = np.random.default_rng(0)
        logger.info(f"frequencies up to {max(self.frequencies)} exceed grid {G}; sampling {G} random points")
        return self.at_random_points(G, rng)

    def at_points(self, x: np.ndarray) -> np.ndarray:
        """Oscillatory part at arbitrary float points (no phase reduction)."""
        x = np.asarray(x, dtype=np.float64)
        acc = np.zeros(x.shape, dtype=np.complex128)
        for f, a in zip(self.frequencies, self.amplitudes):
            acc += complex(a) * np.exp(2j * np.pi * np.mod(f * x, 1.0))
        return 2 * acc.real


# ---------------------------------------------------------------------------
# Coefficient envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    """|c_m| <= scale·exp(-rate·m) (geometric) or scale·m^-rate (power)."""

    kind: str
    scale: float
    rate: float

    def moment_tail(self, horizon: int, power: int = 0, squared: bool = False) -> mpf:
        """Upper bound for Σ_{m > horizon} m^power |c_m|^(1 or 2)."""
        s = 2 if squared else 1
        H = max(horizon, 1)
        if self.kind == "geometric":
            rho = (mpf(H + 2) / (H + 1)) ** power * mp.exp(-s * self.rate)
            if rho >= 1:
                return mp.inf
            first = mpf(self.scale) ** s * mpf(H + 1) ** power * mp.exp(-s * self.rate * (H + 1))
            return first / (1 - rho)
        if self.kind == "power":
            expo = s * self.rate - power
            if expo <= 1:
                return mp.inf
            return mpf(self.scale) ** s * mpf(H) ** (1 - expo) / (expo - 1)
        raise ValueError(f"unknown envelope kind {self.kind!r}")


# ---------------------------------------------------------------------------
# FourierRoof
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierRoof:
    """Roof function given by c_m for m >= 0.

    `support` lists the nonzero frequencies m >= 1 of finite roofs;
    `frequency_filter` marks the admissible frequencies of sparse infinite
    families; `envelope` bounds the coefficient tail. `series_prefix` marks a
    finite support that stands for the first terms of an infinite family.
    """

    kind: str
    coefficient_rule: Callable[[int], Number]
    support_horizon: int = DEFAULT_SUPPORT_HORIZON
    support: Optional[Tuple[int, ...]] = None
    envelope: Optional[Envelope] = None
    frequency_filter: Optional[Callable[[int], bool]] = None
    params: Dict[str, object] = field(default_factory=dict)
    series_prefix: bool = False

    def coefficient(self, m: int) -> mpc:
        k = abs(m)
        if k > self.support_horizon:
            return mpc(0)
        if self.frequency_filter is not None and k != 0 and not self.frequency_filter(k):
            return mpc(0)
        c = mpc(self.coefficient_rule(k))
        return c.conjugate() if m < 0 else c

    @property
    def c0(self) -> mpf:
        return mpf(self.coefficient(0).real)

    @property
    def is_finite(self) -> bool:
        return self.support is not None

    @property
    def is_constant(self) -> bool:
        return self.support is not None and not self.support

    def nonzero_frequencies(self, horizon: int) -> List[int]:
        """Frequencies 1 <= m <= horizon with c_m != 0 (ascending)."""
        limit = min(horizon, self.support_horizon)
        if self.support is not None:
            candidates: Iterable[int] = sorted(m for m in self.support if m <= limit)
        elif self.kind == "prime":
            candidates = [1] + list(primerange(2, limit + 1))
        else:
            candidates = range(1, limit + 1)
        return [m for m in candidates if self.coefficient(m) != 0]

    def coefficient_table(self, horizon: int) -> Dict[int, mpc]:
        return {m: self.coefficient(m) for m in self.nonzero_frequencies(horizon)}

    def tail_bound(self, horizon: int, power: int = 0, squared: bool = False) -> mpf:
        """Bound for Σ_{m > horizon} m^power |c_m|^(1 or 2), one side only."""
        if self.support is not None or horizon >= self.support_horizon:
            extra = [m for m in (self.support or ()) if horizon < m <= self.support_horizon]
            s = 2 if squared else 1
            return mp.fsum(mpf(m) ** power * abs(self.coefficient(m)) ** s for m in extra)
        if self.envelope is None:
            return mp.inf
        return self.envelope.moment_tail(horizon, power, squared)

    def trig_polynomial(self, horizon: int) -> TrigPolynomial:
        freqs = self.nonzero_frequencies(horizon)
        return TrigPolynomial(freqs, [self.coefficient(m) for m in freqs], self.c0)

    def restricted(self, frequencies: Iterable[int], kind: Optional[str] = None) -> "FourierRoof":
        """Finite roof keeping c_0 and the listed frequencies."""
        kept = tuple(sorted({abs(m) for m in frequencies if m != 0 and self.coefficient(m) != 0}))
        table = {0: self.coefficient(0), **{m: self.coefficient(m) for m in kept}}
        return FourierRoof(
            kind=kind or f"{self.kind}_restricted",
            coefficient_rule=lambda k: table.get(k, mpc(0)),
            support_horizon=max(kept, default=0),
            support=kept,
            params={"parent": self.kind, "frequencies": list(kept)},
        )

    def truncate(self, horizon: int) -> "FourierRoof":
        return self.restricted(self.nonzero_frequencies(horizon), kind=f"{self.kind}_truncated")

    def to_config(self) -> dict:
        return {"kind": self.kind, **self.params}


def evaluate(phi: FourierRoof, x, horizon: int) -> mpf:
    """Σ_{|m| <= horizon} c_m e(mx); raises NonHermitianCoefficients when the
    imaginary residue is not negligible."""
    x = mpf(x)
    total = mpc(phi.coefficient(0))
    weight = abs(total)
    for m in phi.nonzero_frequencies(horizon):
        e = mp.expjpi(2 * m * x)
        cp, cm = phi.coefficient(m), phi.coefficient(-m)
        total += cp * e + cm * e.conjugate()
        weight += abs(cp) + abs(cm)
    if abs(total.imag) > IMAG_TOLERANCE * max(1, weight):
        raise NonHermitianCoefficients(f"imaginary residue {mp.nstr(total.imag, 5)} at x={mp.nstr(x, 8)}")
    return total.real


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass
class PositivityCertificate:
    grid_min: float
    tail_bound: mpf
    lipschitz_slack: float
    grid_lower_bound: float
    triangle_lower_bound: float
    grid: int
    horizon: int

    @property
    def lower_bound(self) -> float:
        return max(self.grid_lower_bound, self.triangle_lower_bound)

    @property
    def holds(self) -> bool:
        return self.lower_bound > 0


def positivity_certificate(phi: FourierRoof, horizon: int = 64, grid: int = POSITIVITY_GRID) -> PositivityCertificate:
    """Lower bound for min φ: grid minimum minus truncation tail and a
    Lipschitz slack per cell, or c_0 - 2Σ|c_m| when that is better."""
    poly = phi.trig_polynomial(horizon)
    tail = 2 * phi.tail_bound(horizon)
    values = float(poly.constant) + poly.at_points(midpoint_grid(grid))
    grid_min = float(values.min())
    slack = float(poly.lipschitz()) / (2 * grid)
    grid_lb = grid_min - float(tail) - slack if tail != mp.inf else -math.inf
    triangle = float(poly.constant - poly.sup_bound() - tail) if tail != mp.inf else -math.inf
    cert = PositivityCertificate(grid_min, tail, slack, grid_lb, triangle, grid, horizon)
    logger.debug(f"positivity {phi.kind}: grid min {grid_min:.6g}, lower bound {cert.lower_bound:.6g}")
    return cert


@dataclass
class C3Proxy:
    partial_sum: mpf
    block_increments: List[mpf]
    tail_bound: mpf
    horizon: int

    @property
    def holds(self) -> bool:
        if self.tail_bound != mp.inf:
            return True
        inc = [x for x in self.block_increments]
        if len(inc) < 3:
            return False
        last = inc[-3:]
        return all(b <= 0.75 * a or b == 0 for a, b in zip(last, last[1:]))


def c3_proxy(phi: FourierRoof, horizon: int = 256) -> C3Proxy:
    """Partial sums of Σ|m|³|c_m| over dyadic blocks, with the analytic tail
    bound when the family has one."""
    table = phi.coefficient_table(horizon)
    increments = []
    lo, hi = 0, 1
    while lo < horizon:
        hi = min(hi, horizon)
        increments.append(2 * mp.fsum(mpf(m) ** 3 * abs(c) for m, c in table.items() if lo < m <= hi))
        lo, hi = hi, 2 * hi
    total = mp.fsum(increments)
    return C3Proxy(total, increments, 2 * phi.tail_bound(horizon, power=3), horizon)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def _check_positive(phi: FourierRoof, horizon: int = 64) -> FourierRoof:
    if phi.c0 <= 0:
        raise InvalidRoof(f"{phi.kind} roof needs c_0 > 0, got {phi.c0}")
    cert = positivity_certificate(phi, horizon)
    if not cert.holds:
        raise InvalidRoof(f"{phi.kind} roof is not certifiably positive (lower bound {cert.lower_bound:.3g})")
    return phi


def make_dyadic_roof(support_horizon: int = DEFAULT_SUPPORT_HORIZON) -> FourierRoof:
    """c_m = 2^-|m|; φ(x) = (1 - r²)/(1 - 2r cos 2πx + r²) with r = 1/2."""
    return FourierRoof(
        kind="dyadic",
        coefficient_rule=lambda k: mp.ldexp(1, -k),
        support_horizon=support_horizon,
        envelope=Envelope("geometric", 1.0, math.log(2)),
    )


def dyadic_closed_form(x) -> mpf:
    r = mpf(1) / 2
    return (1 - r * r) / (1 - 2 * r * mp.cospi(2 * mpf(x)) + r * r)


def make_prime_roof(exponent: float = 5.0, scale: float = 1.0, unit: float = 1 / 32, c0: float = 1.0,
                    support_horizon: int = DEFAULT_SUPPORT_HORIZON) -> FourierRoof:
    """c_p = scale·p^-exponent on primes, c_{±1} = unit, c_0 = c0."""
    if exponent <= 4:
        raise InvalidRoof(f"prime roof needs exponent > 4 for Σ p³|c_p| < ∞, got {exponent}")
    if unit <= 0:
        raise InvalidRoof("prime roof needs a nonzero unit coefficient")

    def rule(k: int) -> mpf:
        if k == 0:
            return mpf(c0)
        if k == 1:
            return mpf(unit)
        return mpf(scale) * mpf(k) ** (-exponent)

    phi = FourierRoof(
        kind="prime",
        coefficient_rule=rule,
        support_horizon=support_horizon,
        envelope=Envelope("power", max(scale, unit), exponent),
        frequency_filter=lambda k: k == 1 or isprime(k),
        params={"exponent": exponent, "scale": scale, "unit": unit, "c0": c0},
    )
    return _check_positive(phi)


def make_expdecay_roof(C1: float, C2: float, k1: float, k2: float, parity_split: bool = False,
                       check_regularity: bool = True,
                       support_horizon: int = DEFAULT_SUPPORT_HORIZON) -> FourierRoof:
    """C1·e^{-k1|m|} <= |c_m| <= C2·e^{-k2|m|}.

    By default c_m = C1·e^{-k1|m|}. With parity_split, even frequencies sit
    on the upper envelope and odd ones on the lower. check_regularity=False
    skips the 1 <= k1/k2 < 2 requirement (used to build counterexamples).
    """
    if not 0 < C1 <= C2:
        raise InvalidRoof(f"need 0 < C1 <= C2, got C1={C1}, C2={C2}")
    if not 0 < k2 <= k1:
        raise InvalidRoof(f"need 0 < k2 <= k1, got k1={k1}, k2={k2}")
    if check_regularity and not k1 < 2 * k2:
        raise InvalidRoof(f"need k1 < 2·k2, got k1={k1}, k2={k2}")

    def rule(k: int) -> mpf:
        if parity_split and k % 2 == 0:
            return mpf(C2) * mp.exp(-k2 * k)
        return mpf(C1) * mp.exp(-k1 * k)

    phi = FourierRoof(
        kind="expdecay",
        coefficient_rule=rule,
        support_horizon=support_horizon,
        envelope=Envelope("geometric", C2 if parity_split else C1, k2 if parity_split else k1),
        params={"C1": C1, "C2": C2, "k1": k1, "k2": k2, "parity_split": parity_split,
                "check_regularity": check_regularity},
    )
    return _check_positive(phi)


def make_table_roof(entries, validate: bool = True) -> FourierRoof:
    """Finite roof from [m, re, im] triples or a {m: complex} mapping.

    Missing negative frequencies are mirrored; a pair given on both sides
    must be conjugate.
    """
    if isinstance(entries, dict):
        items = [(int(m), complex(v)) for m, v in entries.items()]
    else:
        items = []
        for row in entries:
            if len(row) not in (2, 3):
                raise InvalidRoof(f"table rows are [m, re] or [m, re, im], got {row!r}")
            m, re = int(row[0]), float(row[1])
            im = float(row[2]) if len(row) == 3 else 0.0
            items.append((m, complex(re, im)))
    table: Dict[int, mpc] = {}
    given: Dict[int, complex] = dict(items)
    for m, v in items:
        if m == 0 and v.imag != 0:
            raise NonHermitianCoefficients(f"c_0 must be real, got {v}")
        if -m in given and m != 0 and given[-m] != v.conjugate():
            raise NonHermitianCoefficients(f"c_{-m} != conj(c_{m})")
        k = abs(m)
        table[k] = mpc(v.conjugate()) if m < 0 else mpc(v)
    if 0 not in table:
        raise InvalidRoof("table roof needs c_0")
    support = tuple(sorted(m for m, v in table.items() if m != 0 and v != 0))
    phi = FourierRoof(
        kind="table",
        coefficient_rule=lambda k: table.get(k, mpc(0)),
        support_horizon=max(support, default=0),
        support=support,
        params={"entries": [[m, float(table[m].real), float(table[m].imag)] for m in sorted(table)]},
    )
    return _check_positive(phi, horizon=max(support, default=1)) if validate else phi


def make_constant_roof(c0: float = 1.0) -> FourierRoof:
    if c0 <= 0:
        raise InvalidRoof(f"constant roof needs c_0 > 0, got {c0}")
    return FourierRoof(
        kind="constant",
        coefficient_rule=lambda k: mpf(c0) if k == 0 else mpf(0),
        support_horizon=0,
        support=(),
        params={"c0": c0},
    )


def make_resonant_roof(alpha, amplitude: float = 1.0, exponent: float = 0.5,
                       indices: Sequence[int] = (1, 2, 3, 4, 5, 6), c0: float = 1.0,
                       unit: float = 1 / 32) -> FourierRoof:
    """c_0 = c0 and c_{±q_n} = amplitude·(n+1)^-exponent·‖q_nα‖ for n in indices.

    The ratios |c_{q_n}|/‖q_nα‖ are prescribed: exponent 0 keeps them
    constant, 0 < exponent <= 1/2 makes them decay with Σ r² divergent.
    c_{±1} = unit unless 1 is one of the q_n. The result is the finite
    prefix of an infinite family and is flagged as such.
    """
    indices = sorted(set(int(n) for n in indices))
    if not indices or indices[0] < 0:
        raise InvalidRoof("resonant roof indices must be >= 0")
    table: Dict[int, mpf] = {0: mpf(c0)}
    with alpha.workprec():
        for n in indices:
            q = alpha.q(n)
            if q in table:
                raise InvalidRoof(f"q_{n} = {q} repeats an earlier frequency")
            theta, _ = alpha.theta(n)
            table[q] = mpf(amplitude) * mpf(n + 1) ** (-exponent) * theta
        if 1 not in table and unit:
            table[1] = mpf(unit)
    support = tuple(sorted(k for k in table if k))
    phi = FourierRoof(
        kind="resonant",
        coefficient_rule=lambda k: table.get(k, mpf(0)),
        support_horizon=max(support),
        support=support,
        params={"amplitude": amplitude, "exponent": exponent, "indices": indices, "c0": c0, "unit": unit},
        series_prefix=True,
    )
    if c0 <= 2 * mp.fsum(table[k] for k in support):
        raise InvalidRoof("resonant roof is not positive; lower the amplitude")
    return phi


ROOF_BUILDERS = {
    "dyadic": make_dyadic_roof,
    "prime": make_prime_roof,
    "expdecay": make_expdecay_roof,
    "table": make_table_roof,
    "constant": make_constant_roof,
    "resonant": make_resonant_roof,
}


# ---------------------------------------------------------------------------
# Hypothesis checks
# ---------------------------------------------------------------------------

@dataclass
class HypothesisCheck:
    """One of [H1]-[H3] at a finite horizon; verdict is pass | fail | undecided."""

    name: str
    verdict: str
    horizon: int
    constant: Optional[float] = None
    m0: Optional[int] = None
    witness: Optional[int] = None
    partial_sum: Optional[float] = None
    reason: str = ""
    table: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.name, "verdict": self.verdict, "horizon": self.horizon,
            "constant": self.constant, "m0": self.m0, "witness": self.witness,
            "partial_sum": self.partial_sum, "reason": self.reason, "table": self.table,
        }


@dataclass
class HypothesisReport:
    h1: HypothesisCheck
    h2: HypothesisCheck
    h3: HypothesisCheck
    horizon: int

    @property
    def all_pass(self) -> bool:
        return self.h1.passed and self.h2.passed and self.h3.passed

    @property
    def K1(self) -> Optional[float]:
        return self.h2.constant

    @property
    def K2(self) -> Optional[float]:
        return self.h3.constant

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "h1": self.h1.to_dict(), "h2": self.h2.to_dict(), "h3": self.h3.to_dict(),
                "K1": self.K1, "K2": self.K2, "all_pass": self.all_pass}


def _multiples(phi: FourierRoof, horizon: int, inner: int) -> Tuple[Dict[int, mpf], Dict[int, List[Tuple[int, mpf]]]]:
    """|c_m| for m <= horizon and the nonzero |c_{lm}|, 2 <= l <= inner."""
    table = {m: abs(c) for m, c in phi.coefficient_table(inner * horizon).items()}
    outer = {m: table.get(m, mpf(0)) for m in range(1, horizon + 1)}
    multiples = {
        m: [(l, table[l * m]) for l in range(2, inner + 1) if l * m in table]
        for m in range(1, horizon + 1)
    }
    return outer, multiples


def _zero_witness(outer, multiples) -> Optional[int]:
    for m in sorted(outer):
        if outer[m] == 0 and multiples[m]:
            return m
    return None


def check_H1(phi: FourierRoof, horizon: int, tolerance: float = H1_TOLERANCE,
             inner: int = DEFAULT_INNER_MULTIPLE) -> HypothesisCheck:
    """C_m = Σ_{l>=2} |c_{lm}|²/|c_m|² and convergence of Σ C_m."""
    if horizon < 2:
        raise ValueError(f"horizon must be >= 2, got {horizon}")
    outer, multiples = _multiples(phi, horizon, inner)
    witness = _zero_witness(outer, multiples)
    if witness is not None:
        return HypothesisCheck("H1", "fail", horizon, witness=witness,
                               reason=f"c_{witness} = 0 while a multiple is nonzero")
    rows, total, late = [], mpf(0), mpf(0)
    for m in range(1, horizon + 1):
        if outer[m] == 0:
            continue
        C = mp.fsum(v ** 2 for _, v in multiples[m]) / outer[m] ** 2
        total += C
        if 2 * m > horizon:
            late += C
        rows.append({"m": m, "C_m": float(C)})
    verdict = "pass" if late < tolerance else "undecided"
    return HypothesisCheck("H1", verdict, horizon, constant=float(total), partial_sum=float(total),
                           reason=f"second-half increment {mp.nstr(late, 3)}", table=rows)


def _ratios(outer, multiples, weighted: bool) -> List[Tuple[int, mpf]]:
    out = []
    for m in sorted(outer):
        if outer[m] == 0:
            continue
        s = mp.fsum((l if weighted else 1) * v for l, v in multiples[m])
        out.append((m, s / outer[m]))
    return out


def _first_h2_failure(ratios: List[Tuple[int, mpf]], horizon: int, threshold: float) -> Optional[Tuple[int, int, int]]:
    """(h, witness, late) for the smallest h in [H2_MIN_HORIZON, horizon] where
    m0 lies beyond h/2 and two violations sit in [h/2, h]; None if no h fails.

    Ratios at m do not depend on the horizon, so a failure at h is a failure
    at every larger horizon.
    """
    violations = [m for m, r in ratios if r >= threshold]
    for h in range(H2_MIN_HORIZON, horizon + 1):
        seen = [m for m in violations if m <= h]
        if not seen or 2 * (seen[-1] + 1) <= h:
            continue
        late = [m for m in seen if 2 * m >= h]
        if len(late) >= 2:
            return h, seen[-1], len(late)
    return None


def check_H2(phi: FourierRoof, horizon: int, threshold: float = H2_THRESHOLD,
             inner: int = DEFAULT_INNER_MULTIPLE) -> HypothesisCheck:
    """Σ_{l>=2}|c_{lm}| < K1|c_m| for m >= m0 with a single K1 < 1/4."""
    if horizon < 2:
        raise ValueError(f"horizon must be >= 2, got {horizon}")
    outer, multiples = _multiples(phi, horizon, inner)
    witness = _zero_witness(outer, multiples)
    if witness is not None:
        return HypothesisCheck("H2", "fail", horizon, witness=witness,
                               reason=f"c_{witness} = 0 while a multiple is nonzero")
    ratios = _ratios(outer, multiples, weighted=False)
    rows = [{"m": m, "ratio": float(r)} for m, r in ratios]
    violations = [m for m, r in ratios if r >= threshold]
    m0 = violations[-1] + 1 if violations else 1
    K1 = max([r for m, r in ratios if m >= m0], default=mpf(0))
    failure = _first_h2_failure(ratios, horizon, threshold)
    if failure is not None:
        h, witness, late = failure
        return HypothesisCheck("H2", "fail", horizon, constant=float(K1), m0=m0, witness=witness,
                               reason=f"{late} violations in [{h}/2, {h}]", table=rows)
    if 2 * m0 <= horizon:
        verdict, reason = "pass", f"ratios below {threshold} from m0={m0}"
    else:
        verdict, reason = "undecided", f"m0={m0} beyond half the horizon"
    return HypothesisCheck("H2", verdict, horizon, constant=float(K1), m0=m0, reason=reason, table=rows)


def _first_h3_failure(ratios: List[Tuple[int, mpf]], horizon: int, growth: float) -> Optional[Tuple[int, int]]:
    """(h, witness) for the smallest h <= horizon whose second-half maximum is
    at least growth times the first-half maximum; None if no h fails."""
    by_m = dict(ratios)
    first_max = mpf(0)
    for h in range(2, horizon + 1):
        first_max = max(first_max, by_m.get(h // 2, mpf(0)))
        second = [(by_m[m], m) for m in range(h // 2 + 1, h + 1) if m in by_m]
        if not second:
            continue
        value, m = max(second)
        if value > 0 and value >= growth * first_max:
            return h, m
    return None


def check_H3(phi: FourierRoof, horizon: int, growth: float = H3_GROWTH,
             inner: int = DEFAULT_INNER_MULTIPLE) -> HypothesisCheck:
    """Σ_{l>=2}|l·c_{lm}| < K2|c_m| for all m with some K2 > 0."""
    if horizon < 2:
        raise ValueError(f"horizon must be >= 2, got {horizon}")
    outer, multiples = _multiples(phi, horizon, inner)
    witness = _zero_witness(outer, multiples)
    if witness is not None:
        return HypothesisCheck("H3", "fail", horizon, witness=witness,
                               reason=f"c_{witness} = 0 while a multiple is nonzero")
    ratios = _ratios(outer, multiples, weighted=True)
    rows = [{"m": m, "ratio": float(r)} for m, r in ratios]
    K2 = max((r for _, r in ratios), default=mpf(0))
    failure = _first_h3_failure(ratios, horizon, growth)
    if failure is not None:
        h, witness = failure
        return HypothesisCheck("H3", "fail", horizon, constant=float(K2), m0=1, witness=witness,
                               reason=f"weighted ratio growing at horizon {h}", table=rows)
    return HypothesisCheck("H3", "pass", horizon, constant=float(K2), m0=1,
                           reason=f"weighted ratios bounded by {mp.nstr(K2, 6)}", table=rows)


def check_hypotheses(phi: FourierRoof, horizon: int, inner: int = DEFAULT_INNER_MULTIPLE) -> HypothesisReport:
    report = HypothesisReport(
        h1=check_H1(phi, horizon, inner=inner),
        h2=check_H2(phi, horizon, inner=inner),
        h3=check_H3(phi, horizon, inner=inner),
        horizon=horizon,
    )
    logger.info(f"hypotheses for {phi.kind} at {horizon}: "
                f"H1 {report.h1.verdict}, H2 {report.h2.verdict}, H3 {report.h3.verdict}")
    return report
