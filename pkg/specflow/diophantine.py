"""Continued-fraction arithmetic for rotation numbers.

The partial quotients are the source of truth for α. Every real quantity
derived from α (qualities of returns, ‖mα‖, signed residues of mα) is
computed with mpmath at the precision carried by the RotationNumber and
comes with an error bound; comparisons that the bound cannot separate raise
PrecisionExhausted instead of guessing.

α is always taken modulo 1 (a_0 is ignored).
"""

from __future__ import annotations

import logging
import math
import threading
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp, mpf
from sympy import integer_nthroot

from .errors import InsufficientQuotients, InvalidQuotients, PrecisionExhausted

logger = logging.getLogger(__name__)

DEFAULT_PRECISION_BITS = 256
MIN_PRECISION_BITS = 64
# Largest partial quotient materialized as an exact integer. Larger terms
# only enter through their mpf approximation (tail of a complete quotient).
MAX_TERM_BITS = 1 << 16
MAX_PRECISION_BITS = MAX_TERM_BITS - 64
GUARD_BITS = 32
DEFAULT_SCAN_LIMIT = 100_000
MAX_STRUCTURED_CANDIDATES = 1_000_000


# ---------------------------------------------------------------------------
# Quotient streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthRule:
    """Rule producing a_k from k and the exact denominator q_{k-1}.

    `bits` estimates the bit length of a_k without building it, `approx`
    returns an mpf approximation (at the caller's precision) for terms too
    large to materialize.
    """

    name: str
    term: Callable[[int, int], int]
    bits: Callable[[int, int], int]
    approx: Optional[Callable[[int, int], mpf]] = None
    params: Dict[str, object] = field(default_factory=dict)

    def approximate(self, k: int, q_prev: int) -> mpf:
        if self.approx is not None:
            return self.approx(k, q_prev)
        return mpf(self.term(k, q_prev))

    def to_config(self) -> dict:
        return {"rule": self.name, **self.params}


def two_pow_q_rule() -> GrowthRule:
    """a_{n+1} = 2^(q_n)."""
    return GrowthRule(
        name="two_pow_q",
        term=lambda k, q: 1 << q,
        bits=lambda k, q: q + 1,
        approx=lambda k, q: mp.ldexp(1, q),
    )


def power_rule(exponent: int = 2) -> GrowthRule:
    """a_{n+1} = q_n^exponent + 1."""
    if exponent < 1:
        raise InvalidQuotients(f"power rule exponent must be >= 1, got {exponent}")
    return GrowthRule(
        name="power",
        term=lambda k, q: q ** exponent + 1,
        bits=lambda k, q: exponent * q.bit_length() + 1,
        approx=lambda k, q: mpf(q) ** exponent + 1,
        params={"exponent": exponent},
    )


def euler_rule() -> GrowthRule:
    """Quotient pattern 1, 2, 1, 1, 4, 1, 1, 6, ... of e - 2."""
    def term(k: int, q: int) -> int:
        return 2 * (k + 1) // 3 if k % 3 == 2 else 1

    return GrowthRule(name="euler", term=term, bits=lambda k, q: (2 * k + 2).bit_length())


GROWTH_RULES: Dict[str, Callable[..., GrowthRule]] = {
    "two_pow_q": two_pow_q_rule,
    "power": power_rule,
    "euler": euler_rule,
}


def rule_from_callable(func: Callable[[int], int], name: str = "custom") -> GrowthRule:
    """Wrap a plain q_n -> a_{n+1} function."""
    return GrowthRule(
        name=name,
        term=lambda k, q: func(q),
        bits=lambda k, q: int(func(q)).bit_length(),
    )


@dataclass(frozen=True)
class PartialQuotients:
    """a_0; a_1, a_2, ... as an explicit prefix followed by an optional
    periodic block or growth rule.

    A stream with neither period nor rule is a finite prefix of an
    irrational number: asking for terms past its end raises
    InsufficientQuotients.
    """

    prefix: Tuple[int, ...]
    period: Tuple[int, ...] = ()
    rule: Optional[GrowthRule] = None

    def __post_init__(self):
        if not self.prefix:
            raise InvalidQuotients("partial quotients need at least a_0")
        if self.period and self.rule is not None:
            raise InvalidQuotients("a stream has either a period or a growth rule, not both")
        if self.prefix[0] < 0:
            raise InvalidQuotients(f"a_0 must be >= 0, got {self.prefix[0]}")
        for k, a in enumerate(self.prefix[1:], start=1):
            if a < 1:
                raise InvalidQuotients(f"a_{k} = {a} < 1")
        for a in self.period:
            if a < 1:
                raise InvalidQuotients(f"periodic quotient {a} < 1")

    @property
    def is_finite(self) -> bool:
        return not self.period and self.rule is None

    def term_bits(self, k: int, q_prev: int) -> Optional[int]:
        """Bit length of a_k, or None when the stream has ended."""
        if k < len(self.prefix):
            return int(self.prefix[k]).bit_length()
        if self.period:
            return int(self.period[(k - len(self.prefix)) % len(self.period)]).bit_length()
        if self.rule is not None:
            return self.rule.bits(k, q_prev)
        return None

    def term(self, k: int, q_prev: int) -> int:
        """Exact a_k; q_prev is q_{k-1} (only growth rules use it)."""
        if k < len(self.prefix):
            return self.prefix[k]
        if self.period:
            return self.period[(k - len(self.prefix)) % len(self.period)]
        if self.rule is None:
            raise InsufficientQuotients(f"quotient stream ends after {len(self.prefix)} terms")
        bits = self.rule.bits(k, q_prev)
        if bits > MAX_TERM_BITS:
            raise InsufficientQuotients(
                f"a_{k} from rule {self.rule.name} has ~{bits} bits (limit {MAX_TERM_BITS})"
            )
        a = self.rule.term(k, q_prev)
        if a < 1:
            raise InvalidQuotients(f"rule {self.rule.name} produced a_{k} = {a} < 1")
        return a

    def approximate(self, k: int, q_prev: int) -> mpf:
        """a_k as an mpf, available even when the exact term is too large."""
        bits = self.term_bits(k, q_prev)
        if bits is None:
            raise InsufficientQuotients(f"quotient stream ends after {len(self.prefix)} terms")
        if bits <= MAX_TERM_BITS or self.rule is None:
            return mpf(self.term(k, q_prev))
        return self.rule.approximate(k, q_prev)

    def to_config(self) -> dict:
        if self.rule is not None:
            return {"kind": "rule", "seed": list(self.prefix), **self.rule.to_config()}
        if self.period:
            return {"kind": "periodic", "prefix": list(self.prefix), "period": list(self.period)}
        return {"kind": "quotients", "terms": list(self.prefix)}


# ---------------------------------------------------------------------------
# Rotation numbers and convergents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Convergent:
    """p_n/q_n with theta_n = |q_n α - p_n| and its absolute error bound."""

    n: int
    p: int
    q: int
    theta: mpf
    error: mpf

    @property
    def sign(self) -> int:
        """Sign of q_n α - p_n."""
        return 1 if self.n % 2 == 0 else -1


class RotationNumber:
    """α mod 1 given by its partial quotients and a working precision.

    Exact p_n, q_n are extended on demand under a lock, so concurrent
    readers never observe a half-written cache entry.
    """

    def __init__(self, quotients: PartialQuotients, precision_bits: int = DEFAULT_PRECISION_BITS, label: str = ""):
        if not MIN_PRECISION_BITS <= precision_bits <= MAX_PRECISION_BITS:
            raise InvalidQuotients(
                f"precision_bits must lie in [{MIN_PRECISION_BITS}, {MAX_PRECISION_BITS}], got {precision_bits}"
            )
        self.quotients = quotients
        self.precision_bits = precision_bits
        self.label = label or quotients.to_config().get("rule", quotients.to_config()["kind"])
        self._a: List[int] = [0]          # a_0 dropped
        self._p: List[int] = [0]          # p_0 for α mod 1
        self._q: List[int] = [1]
        self._theta: Dict[int, Tuple[mpf, mpf]] = {}
        self._value: Optional[mpf] = None
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"RotationNumber({self.label!r}, precision_bits={self.precision_bits})"

    def workprec(self):
        """mpmath context at this number's working precision."""
        return mp.workprec(self.precision_bits + GUARD_BITS)

    def with_precision(self, precision_bits: int) -> "RotationNumber":
        return RotationNumber(self.quotients, precision_bits, self.label)

    # -- exact denominators ------------------------------------------------

    def ensure(self, count: int) -> None:
        """Make q_0 .. q_{count-1} available."""
        with self._lock:
            while len(self._q) < count:
                k = len(self._q)
                a = self.quotients.term(k, self._q[-1])
                q_prev2 = self._q[-2] if k >= 2 else 0
                p_prev2 = self._p[-2] if k >= 2 else 1
                self._a.append(a)
                self._q.append(a * self._q[-1] + q_prev2)
                self._p.append(a * self._p[-1] + p_prev2)

    def available(self, limit: int) -> int:
        """Number of exact denominators obtainable, capped at limit."""
        try:
            self.ensure(limit)
        except InsufficientQuotients:
            pass
        return min(len(self._q), limit)

    def q(self, n: int) -> int:
        self.ensure(n + 1)
        return self._q[n]

    def p(self, n: int) -> int:
        self.ensure(n + 1)
        return self._p[n]

    def a(self, k: int) -> int:
        self.ensure(k + 1)
        return self._a[k]

    def next_term_bits(self, n: int) -> Optional[int]:
        """Bit length of a_{n+1} (exact or estimated)."""
        self.ensure(n + 1)
        return self.quotients.term_bits(n + 1, self._q[n])

    def next_q_exceeds(self, n: int, value: int) -> bool:
        """True when q_{n+1} > value, without building q_{n+1} if it is huge."""
        try:
            return self.q(n + 1) > value
        except InsufficientQuotients:
            bits = self.next_term_bits(n)
            if bits is None:
                raise
            # q_{n+1} >= a_{n+1} q_n >= 2^(bits-1) q_n
            return (bits - 1) + self._q[n].bit_length() - 1 > value.bit_length()

    # -- real values ---------------------------------------------------------

    def _term_approx(self, k: int) -> Optional[mpf]:
        if k < len(self._a):
            return mpf(self._a[k])
        try:
            self.ensure(k)
        except InsufficientQuotients:
            return None
        bits = self.quotients.term_bits(k, self._q[k - 1])
        if bits is None:
            return None
        return self.quotients.approximate(k, self._q[k - 1])

    def complete_quotient(self, k: int) -> mpf:
        """ξ_k = [a_k; a_{k+1}, ...] to relative precision 2^-(precision_bits+16)."""
        target = mpf(2) ** (self.precision_bits + 16)
        with self.workprec():
            p_prev, p_prev2 = mpf(1), mpf(0)
            q_prev, q_prev2 = mpf(0), mpf(1)
            j = 0
            while True:
                t = self._term_approx(k + j)
                if t is None:
                    raise InsufficientQuotients(
                        f"quotient stream too short to fix ξ_{k} at {self.precision_bits} bits"
                    )
                p_cur = t * p_prev + p_prev2
                q_cur = t * q_prev + q_prev2
                if p_cur * q_cur > target:
                    return p_cur / q_cur
                p_prev, p_prev2 = p_cur, p_prev
                q_prev, q_prev2 = q_cur, q_prev
                j += 1

    def value(self) -> mpf:
        """α mod 1 at working precision."""
        if self._value is None:
            with self.workprec():
                self._value = 1 / self.complete_quotient(1)
        return self._value

    def theta(self, n: int) -> Tuple[mpf, mpf]:
        """(|q_n α - p_n|, absolute error bound)."""
        cached = self._theta.get(n)
        if cached is not None:
            return cached
        self.ensure(n + 1)
        with self.workprec():
            xi = self.complete_quotient(n + 1)
            q_prev = self._q[n - 1] if n >= 1 else 0
            theta = 1 / (self._q[n] * xi + q_prev)
            error = theta * mp.ldexp(1, 4 - self.precision_bits)
        with self._lock:
            self._theta[n] = (theta, error)
        return theta, error


def convergents(alpha: RotationNumber, N: int) -> List[Convergent]:
    """The first N convergents p_n/q_n (n = 0 .. N-1) with their qualities."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    alpha.ensure(N)
    out = []
    for n in range(N):
        theta, error = alpha.theta(n)
        out.append(Convergent(n=n, p=alpha.p(n), q=alpha.q(n), theta=theta, error=error))
    return out


def convergent_table(alpha: RotationNumber, N: int) -> List[dict]:
    """Convergents with the checks 1/(q_n + q_{n+1}) < theta_n <= 1/q_{n+1}.

    Stops early when q_{n+1} cannot be materialized.
    """
    count = min(N, alpha.available(N + 1) - 1)
    rows = []
    if count < 1:
        return rows
    for c in convergents(alpha, count):
        q_next = alpha.q(c.n + 1)
        with alpha.workprec():
            lower = 1 / (mpf(c.q) + q_next)
            upper = 1 / mpf(q_next)
            lower_ok = _compare(lower, c.theta, c.error, f"theta_{c.n} lower bound", alpha)
            upper_ok = c.theta - c.error <= upper
        rows.append({"n": c.n, "a": alpha.a(c.n) if c.n else 0, "p": c.p, "q": c.q,
                     "theta": c.theta, "error": c.error, "lower_ok": lower_ok, "upper_ok": upper_ok})
    return rows


# ---------------------------------------------------------------------------
# Distances to the nearest integer
# ---------------------------------------------------------------------------

def circle_norm(x, alpha: Optional[RotationNumber] = None) -> mpf:
    """‖x‖ = distance from x to the nearest integer, at alpha's working
    precision when given and at the ambient precision otherwise."""
    with alpha.workprec() if alpha is not None else nullcontext():
        x = mpf(x)
        return abs(x - mp.nint(x))


def ostrowski_digits(alpha: RotationNumber, m: int) -> List[Tuple[int, int]]:
    """Greedy expansion m = Σ b_k q_k as [(k, b_k), ...] with b_k > 0."""
    if m < 0:
        raise ValueError("ostrowski_digits expects m >= 0")
    n = 0
    while True:
        try:
            q_next = alpha.q(n + 1)
        except InsufficientQuotients:
            if alpha.next_q_exceeds(n, m):
                break
            raise
        if q_next > m:
            break
        n += 1
    digits = []
    rest = m
    for k in range(n, -1, -1):
        qk = alpha.q(k)
        b, rest = divmod(rest, qk)
        if b:
            digits.append((k, b))
        if rest == 0:
            break
    return digits


def signed_residue(alpha: RotationNumber, m: int) -> Tuple[mpf, mpf]:
    """A representative D of mα mod 1 and an absolute error bound.

    D = Σ b_k (q_k α - p_k) over the Ostrowski digits of |m|, so small
    residues are formed from small theta_k without cancellation.
    """
    if m == 0:
        return mpf(0), mpf(0)
    sign = 1 if m > 0 else -1
    digits = ostrowski_digits(alpha, abs(m))
    with alpha.workprec():
        total = mpf(0)
        error = mpf(0)
        for k, b in digits:
            theta, err = alpha.theta(k)
            term = b * theta
            total += term if k % 2 == 0 else -term
            error += b * err + term * mp.ldexp(1, -alpha.precision_bits)
        total -= mp.nint(total)
        return sign * total, error


def norm_of_multiple(alpha: RotationNumber, m: int) -> Tuple[mpf, mpf]:
    """(‖mα‖, absolute error bound); raises PrecisionExhausted when the
    bound does not separate the value from zero."""
    if m == 0:
        raise ValueError("norm_of_multiple needs m != 0")
    residue, error = signed_residue(alpha, m)
    with alpha.workprec():
        value = abs(residue)
        if value <= error:
            raise PrecisionExhausted(
                f"‖{m}α‖ not separated from 0 at {alpha.precision_bits} bits",
                value=value, error_bound=error, precision_bits=alpha.precision_bits,
            )
    return value, error


def _compare(lhs: mpf, rhs, error: mpf, what: str, alpha: RotationNumber) -> bool:
    """lhs < rhs, certified by the error bound on lhs."""
    with alpha.workprec():
        gap = lhs - rhs
        if abs(gap) <= error:
            raise PrecisionExhausted(
                f"cannot decide {what} at {alpha.precision_bits} bits",
                value=lhs, error_bound=error, precision_bits=alpha.precision_bits,
            )
        return gap < 0


# ---------------------------------------------------------------------------
# Good returns and the class M
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoodReturn:
    """q with ‖qα‖ < 1/(2q), factored as l·q_n."""

    q: int
    norm: mpf
    error: mpf
    n: Optional[int]
    l: Optional[int]
    factorization_holds: bool


def _screen(alpha: RotationNumber, limit: int, bound: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Integers 1..limit whose float64 ‖qα‖ may fall below bound(q).

    The float error of frac(q·α) is below q·2^-52; the margin q·2^-50
    keeps every true member in the candidate set.
    """
    if limit < 1:
        return np.empty(0, dtype=np.int64)
    alpha_f = float(alpha.value())
    qs = np.arange(1, limit + 1, dtype=np.float64)
    prod = qs * alpha_f
    norms = np.abs(prod - np.rint(prod))
    margin = qs * 2.0 ** -50 + 2.0 ** -60
    mask = norms < bound(qs) + margin
    return np.nonzero(mask)[0].astype(np.int64) + 1


def _factor(alpha: RotationNumber, q: int) -> Tuple[Optional[int], Optional[int], bool]:
    """Largest n with q = l·q_n and l² q_n < q_{n+1}; falls back to any divisor."""
    fallback: Tuple[Optional[int], Optional[int], bool] = (None, None, False)
    n = 0
    while alpha.q(n) <= q:
        qn = alpha.q(n)
        if q % qn == 0:
            l = q // qn
            try:
                ok = alpha.next_q_exceeds(n, l * l * qn)
            except InsufficientQuotients:
                ok = False
            if ok:
                fallback = (n, l, True)
            elif not fallback[2]:
                fallback = (n, l, False)
        try:
            alpha.q(n + 1)
        except InsufficientQuotients:
            break
        n += 1
    return fallback


def _good_return_multiplier(qn: int, q_next: int) -> int:
    # l² q_n < q_{n+1}
    return math.isqrt(q_next // qn) + 1


def _class_m_multiplier(qn: int, q_next: int) -> int:
    # 2 l³ q_n² θ_n <= 1 and θ_n > 1/(q_n + q_{n+1})
    root, _ = integer_nthroot((q_next + qn) // (2 * qn * qn), 3)
    return int(root) + 1


def _structured_candidates(alpha: RotationNumber, low: int, high: int,
                           multiplier: Callable[[int, int], int] = _good_return_multiplier) -> List[int]:
    """Multiples l·q_n in (low, high] with l below multiplier(q_n, q_{n+1})."""
    out = set()
    n = 0
    while True:
        try:
            qn = alpha.q(n)
        except InsufficientQuotients:
            break
        if qn > high:
            break
        try:
            l_max = multiplier(qn, alpha.q(n + 1))
        except InsufficientQuotients:
            l_max = high // qn
        l_lo = max(1, low // qn + 1)
        l_hi = min(l_max, high // qn)
        if l_hi - l_lo + 1 > MAX_STRUCTURED_CANDIDATES:
            raise InsufficientQuotients(
                f"too many structured candidates for q_{n}={qn} up to {high}; lower the horizon"
            )
        out.update(l * qn for l in range(l_lo, l_hi + 1))
        n += 1
    return sorted(out)


def good_returns(alpha: RotationNumber, Q: int, scan_limit: int = DEFAULT_SCAN_LIMIT,
                 multiplier: Callable[[int, int], int] = _good_return_multiplier) -> List[GoodReturn]:
    """All 1 <= q <= Q with ‖qα‖ < 1/(2q), each factored as l·q_n.

    q <= scan_limit is scanned exhaustively; above it only the multiples
    allowed by the factorization are examined.
    """
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    dense = min(Q, scan_limit)
    candidates = [int(q) for q in _screen(alpha, dense, lambda qs: 0.5 / qs)]
    if Q > scan_limit:
        candidates += _structured_candidates(alpha, scan_limit, Q, multiplier)

    found = []
    for q in candidates:
        value, error = norm_of_multiple(alpha, q)
        with alpha.workprec():
            if not _compare(value, mpf(1) / (2 * q), error, f"‖{q}α‖ < 1/(2·{q})", alpha):
                continue
        n, l, holds = _factor(alpha, q)
        if not holds:
            logger.warning(f"good return {q} does not factor as l·q_n with l² q_n < q_(n+1)")
        found.append(GoodReturn(q=q, norm=value, error=error, n=n, l=l, factorization_holds=holds))
    logger.info(f"good_returns: {len(found)} of {Q} (exhaustive up to {dense})")
    return found


@dataclass(frozen=True)
class MemberInfo:
    """One element of the class M with its factorization."""

    m: int
    kind: str                   # zero | best_return | multiple
    n: Optional[int] = None
    l: Optional[int] = None
    norm: Optional[mpf] = None
    reduction_ok: bool = True   # l q_n < q_{n+1}/2 (and q_{n+1} > q_n² for best returns)


@dataclass
class FrequencyClassM:
    """M = {m >= 0 : 2m²‖mα‖ <= 1} up to a finite horizon."""

    horizon: int
    scan_limit: int
    members: List[MemberInfo]
    _lookup: Dict[int, MemberInfo] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self._lookup = {info.m: info for info in self.members}

    @property
    def frequencies(self) -> List[int]:
        return [info.m for info in self.members]

    def __contains__(self, m: int) -> bool:
        return abs(m) in self._lookup

    def info(self, m: int) -> Optional[MemberInfo]:
        return self._lookup.get(abs(m))

    def best_returns(self) -> List[MemberInfo]:
        return [info for info in self.members if info.kind == "best_return"]


def class_M(alpha: RotationNumber, horizon: int, scan_limit: int = DEFAULT_SCAN_LIMIT) -> FrequencyClassM:
    """Members of M up to horizon, annotated with their factorization."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    members = [MemberInfo(m=0, kind="zero")]
    for gr in good_returns(alpha, horizon, scan_limit, _class_m_multiplier):
        m = gr.q
        with alpha.workprec():
            lhs = 2 * m * m * gr.norm
            if not _compare(lhs, 1, 2 * m * m * gr.error, f"2·{m}²‖{m}α‖ <= 1", alpha):
                continue
        if gr.n is None:
            members.append(MemberInfo(m=m, kind="multiple", norm=gr.norm, reduction_ok=False))
            continue
        kind = "best_return" if gr.l == 1 else "multiple"
        qn = alpha.q(gr.n)
        try:
            ok = alpha.next_q_exceeds(gr.n, 2 * m)
            if kind == "best_return":
                ok = ok and alpha.next_q_exceeds(gr.n, qn * qn)
        except InsufficientQuotients:
            ok = False
        if not ok:
            logger.warning(f"M member {m} = {gr.l}·q_{gr.n} violates the first-reduction bounds")
        members.append(MemberInfo(m=m, kind=kind, n=gr.n, l=gr.l, norm=gr.norm, reduction_ok=ok))
    logger.info(f"class_M: {len(members)} members up to {horizon}")
    return FrequencyClassM(horizon=horizon, scan_limit=scan_limit, members=members)


# ---------------------------------------------------------------------------
# Constructors and arithmetic profiles
# ---------------------------------------------------------------------------

def make_alpha(quotients: Sequence[int] = (), period: Sequence[int] = (), precision_bits: int = DEFAULT_PRECISION_BITS) -> RotationNumber:
    """α from an explicit prefix and an optional periodic tail."""
    return RotationNumber(PartialQuotients(tuple(quotients) or (0,), tuple(period)), precision_bits)


def golden_alpha(precision_bits: int = DEFAULT_PRECISION_BITS) -> RotationNumber:
    """[0; 1, 1, 1, ...] = (√5 - 1)/2."""
    return RotationNumber(PartialQuotients((0,), (1,)), precision_bits, label="golden")


def make_liouville_alpha(rule, seed: Sequence[int] = (0, 1), precision_bits: int = DEFAULT_PRECISION_BITS) -> RotationNumber:
    """α whose quotients after `seed` follow a_{n+1} = rule(q_n).

    `rule` is a GrowthRule or a plain callable q -> a.
    """
    if not isinstance(rule, GrowthRule):
        rule = rule_from_callable(rule)
    alpha = RotationNumber(PartialQuotients(tuple(seed), rule=rule), precision_bits, label=rule.name)
    # evaluate the first rule-generated term so a bad rule fails here
    try:
        alpha.ensure(len(seed) + 1)
    except InsufficientQuotients:
        pass
    return alpha


def best_return_check(alpha: RotationNumber, N: int, scan_limit: int = DEFAULT_SCAN_LIMIT) -> List[dict]:
    """Check ‖q_n α‖ < ‖qα‖ for every q < q_{n+1}, q != q_n."""
    rows = []
    count = alpha.available(N + 1)
    for n in range(1, count - 1):
        qn, q_next = alpha.q(n), alpha.q(n + 1)
        if q_next > scan_limit:
            break
        own, own_err = norm_of_multiple(alpha, qn)
        own_f = float(own)
        rivals = [int(q) for q in _screen(alpha, q_next - 1, lambda qs: np.full_like(qs, own_f))
                  if int(q) != qn]
        holds = True
        for q in rivals:
            value, error = norm_of_multiple(alpha, q)
            if not _compare(own, value, own_err + error, f"‖{qn}α‖ < ‖{q}α‖", alpha):
                holds = False
                logger.warning(f"q={q} returns better than q_{n}={qn}")
        rows.append({"n": n, "q": qn, "q_next": q_next, "rivals_checked": len(rivals), "holds": holds})
    return rows


def exponential_approximation_profile(alpha: RotationNumber, N: int) -> List[dict]:
    """log2 of 2^{q_n}|α - p_n/q_n| and of 2^{q_n} q_n |α - p_n/q_n| per n.

    The first stays bounded below on the conjugacy side of the dyadic
    roof; the second tends to 0 along a subsequence on the weak-mixing side.
    """
    rows = []
    count = alpha.available(N)
    for n in range(count):
        try:
            theta, _ = alpha.theta(n)
        except InsufficientQuotients:
            break
        qn = alpha.q(n)
        with alpha.workprec():
            log2_theta = mp.log(theta, 2)
            log2_q = mp.log(qn, 2)
            upper = qn + log2_theta
            lower = upper - log2_q
        rows.append({"n": n, "q": qn, "log2_gap": float(lower), "log2_scaled_gap": float(upper)})
    return rows


def profile_trend(rows: List[dict], window: int = 3) -> str:
    """Label the profile: to_zero, bounded, mixed or short.

    to_zero: log2(2^{q_n}·theta_n) falls strictly over the last rows and ends
    negative. bounded: log2(2^{q_n}·theta_n/q_n) sets no new low over the last
    rows.
    """
    if len(rows) < window:
        return "short"
    tail = [r["log2_scaled_gap"] for r in rows[-window:]]
    if all(b < a for a, b in zip(tail, tail[1:])) and tail[-1] < 0:
        return "to_zero"
    gaps = [r["log2_gap"] for r in rows]
    if len(gaps) > window and min(gaps[-window:]) > min(gaps[:-window]):
        return "bounded"
    return "mixed"
