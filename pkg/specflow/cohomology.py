"""Additive cohomological equation ψ(x + α) − ψ(x) = φ(x) − c_0.

Formal transfer coefficients ψ_m = c_m/(e(mα) − 1), the L² test on their
partial sums, the two coboundary reductions (to frequencies in M, then to
best returns) and the finite-horizon dichotomy classifier.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from mpmath import mp, mpc, mpf

from .diophantine import FrequencyClassM, RotationNumber, class_M, norm_of_multiple, signed_residue
from .errors import PrecisionExhausted, ReductionRefused
from .roof import FourierRoof, HypothesisReport, TrigPolynomial, c3_proxy, check_hypotheses, midpoint_grid

logger = logging.getLogger(__name__)

DEFAULT_DENSE_HORIZON = 1024
DEFAULT_HYPOTHESIS_HORIZON = 64
L2_TOLERANCE = 1e-6
DIVERGENCE_RATIO = 0.5
RATIO_FLOOR = 1e-3
HYSTERESIS = 0.25
TREND_WINDOW = 3
RESIDUAL_OVERSHOOT = 4          # ξ is evaluated this many times past the ψ truncation

DISCRETE = "DiscreteL2Conjugate"
WM_SINGLE = "WeakMixingSingleFrequency"
WM_MULTI = "WeakMixingMultiFrequency"
UNDECIDED = "Undecided"


# ---------------------------------------------------------------------------
# Transfer coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferEntry:
    m: int
    c: mpc
    norm: mpf
    norm_error: mpf
    psi: mpc
    sandwich_ok: bool

    @property
    def ratio(self) -> mpf:
        """|c_m|/‖mα‖."""
        return abs(self.c) / self.norm


@dataclass
class TransferCoefficients:
    """ψ_m for the evaluated frequencies and the partial sums Σ_{0<|m|<=H}|ψ_m|²
    at dyadic checkpoints H."""

    horizon: int
    dense_horizon: int
    entries: List[TransferEntry]
    checkpoints: List[Tuple[int, mpf]]
    tail_bound: mpf
    complete: bool

    @property
    def partial_l2(self) -> mpf:
        return self.checkpoints[-1][1] if self.checkpoints else mpf(0)

    def psi(self, m: int) -> mpc:
        for e in self.entries:
            if e.m == abs(m):
                return e.psi if m > 0 else e.psi.conjugate()
        return mpc(0)

    def increments(self) -> List[mpf]:
        values = [v for _, v in self.checkpoints]
        return [b - a for a, b in zip(values, values[1:])]


def _dyadic_checkpoints(horizon: int) -> List[int]:
    out, h = [], 1
    while h < horizon:
        out.append(h)
        h *= 2
    out.append(horizon)
    return out


def transfer_entry(phi: FourierRoof, alpha: RotationNumber, m: int) -> TransferEntry:
    with alpha.workprec():
        c = phi.coefficient(m)
        X, err = signed_residue(alpha, m)
        norm = abs(X)
        if norm <= err:
            raise PrecisionExhausted(f"‖{m}α‖ not separated from 0", value=norm, error_bound=err,
                                     precision_bits=alpha.precision_bits)
        psi = c / (mp.expjpi(2 * X) - 1)
        slack = 1 + mp.ldexp(1, 8 - alpha.precision_bits)
        ok = abs(c) / (2 * mp.pi * norm) <= abs(psi) * slack and abs(psi) <= slack * abs(c) / (4 * norm)
    if not ok:
        logger.warning(f"transfer coefficient at m={m} violates the distance sandwich")
    return TransferEntry(m=m, c=c, norm=norm, norm_error=err, psi=psi, sandwich_ok=ok)


def _evaluated_frequencies(phi: FourierRoof, horizon: int, dense_horizon: int,
                           members: Optional[FrequencyClassM]) -> List[int]:
    if phi.is_finite:
        return phi.nonzero_frequencies(horizon)
    freqs = phi.nonzero_frequencies(min(horizon, dense_horizon))
    if horizon > dense_horizon and members is not None:
        freqs += [m for m in members.frequencies
                  if dense_horizon < m <= horizon and phi.coefficient(m) != 0]
    return sorted(set(freqs))


def formal_transfer(phi: FourierRoof, alpha: RotationNumber, horizon: int,
                    dense_horizon: int = DEFAULT_DENSE_HORIZON,
                    members: Optional[FrequencyClassM] = None) -> TransferCoefficients:
    """ψ_m for 0 < m <= horizon: every nonzero c_m up to dense_horizon, then
    only members of M. The non-M remainder above dense_horizon is bounded
    by Σ m⁴|c_m|²/4 and reported as tail_bound."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if members is None and horizon > dense_horizon and not phi.is_finite:
        members = class_M(alpha, horizon)
    freqs = _evaluated_frequencies(phi, horizon, dense_horizon, members)
    entries = [transfer_entry(phi, alpha, m) for m in freqs]

    checkpoints = []
    with alpha.workprec():
        running, i = mpf(0), 0
        for h in _dyadic_checkpoints(horizon):
            while i < len(entries) and entries[i].m <= h:
                running += 2 * abs(entries[i].psi) ** 2
                i += 1
            checkpoints.append((h, running))
        if phi.is_finite or horizon <= dense_horizon:
            tail = mpf(0)
        else:
            tail = 2 * phi.tail_bound(dense_horizon, power=4, squared=True) / 4
    complete = phi.is_finite and not phi.series_prefix and max(phi.support or (0,)) <= horizon
    logger.info(f"formal_transfer: {len(entries)} coefficients up to {horizon}, "
                f"partial L2 {mp.nstr(checkpoints[-1][1], 6)}")
    return TransferCoefficients(horizon, dense_horizon, entries, checkpoints, tail, complete)


def transfer_table(phi: FourierRoof, alpha: RotationNumber, horizon: int,
                   dense_horizon: int = DEFAULT_DENSE_HORIZON) -> List[dict]:
    """Rows (m, c_m, ‖mα‖, r_m, ψ_m, |ψ_m|) for export."""
    t = formal_transfer(phi, alpha, horizon, dense_horizon)
    return [
        {"m": e.m, "c_re": e.c.real, "c_im": e.c.imag, "norm": e.norm,
         "ratio": e.ratio, "psi_re": e.psi.real, "psi_im": e.psi.imag, "psi_abs": abs(e.psi),
         "sandwich_ok": e.sandwich_ok}
        for e in t.entries
    ]


# ---------------------------------------------------------------------------
# L² test
# ---------------------------------------------------------------------------

@dataclass
class L2Test:
    status: str                     # converged | diverging | undecided
    bound: Optional[mpf] = None
    rate: Optional[float] = None
    increments: List[mpf] = field(default_factory=list)
    reason: str = ""


def l2_conjugacy_test(t: TransferCoefficients, tolerance: float = L2_TOLERANCE,
                      divergence_ratio: float = DIVERGENCE_RATIO,
                      trend_window: int = TREND_WINDOW) -> L2Test:
    """Classify the checkpoint increments of Σ|ψ_m|².

    converged: last increment below tolerance and the trailing increments
    nonincreasing. diverging: the last two increments at or above
    tolerance sit no more than a factor divergence_ratio apart and the
    last one lies in the trailing half of the checkpoints.
    """
    if len(t.checkpoints) < 2:
        raise ValueError("l2_conjugacy_test needs at least two checkpoints")
    inc = t.increments()
    if t.complete:
        return L2Test("converged", bound=t.partial_l2, increments=inc, reason="finite support")

    spikes = [(j, v) for j, v in enumerate(inc) if v >= tolerance]
    if len(spikes) >= 2:
        (j_prev, prev), (j_last, last) = spikes[-2], spikes[-1]
        rate = float(last / prev)
        if 2 * (j_last + 1) >= len(t.checkpoints) and rate >= divergence_ratio:
            return L2Test("diverging", rate=rate, increments=inc,
                          reason=f"increment {mp.nstr(last, 4)} at checkpoint {t.checkpoints[j_last + 1][0]}")

    trailing = inc[-trend_window:]
    if inc[-1] < tolerance and all(b <= a for a, b in zip(trailing, trailing[1:])):
        extra = inc[-1]
        if len(trailing) >= 2 and trailing[-2] > 0 and trailing[-1] < trailing[-2]:
            q = trailing[-1] / trailing[-2]
            extra = trailing[-1] * q / (1 - q)
        return L2Test("converged", bound=t.partial_l2 + extra + t.tail_bound, increments=inc,
                      reason="increments below tolerance and nonincreasing")
    return L2Test("undecided", increments=inc, reason="no stable trend at this horizon")


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------

@dataclass
class ReducedRoof:
    """φ split as kept part + coboundary part ξ."""

    stage: str                      # M | best_returns
    roof: FourierRoof
    source: FourierRoof
    kept: List[int]
    discarded: List[int]
    discarded_l2_bound: mpf
    members: FrequencyClassM
    horizon: int
    K3: Optional[mpf] = None
    notes: List[str] = field(default_factory=list)

    @property
    def c0(self) -> mpf:
        return self.roof.c0

    def to_dict(self) -> dict:
        return {
            "stage": self.stage, "kept": self.kept, "discarded_count": len(self.discarded),
            "discarded_l2_bound": self.discarded_l2_bound, "K3": self.K3, "c0": self.c0,
            "horizon": self.horizon, "notes": self.notes,
        }


def reduce_to_M(phi: FourierRoof, alpha: RotationNumber, horizon: int,
                dense_horizon: int = DEFAULT_DENSE_HORIZON,
                members: Optional[FrequencyClassM] = None) -> ReducedRoof:
    """Keep c_0 and the frequencies in M; the rest is a coboundary whose
    transfer coefficients obey |ψ_m| <= m²|c_m|/2."""
    proxy = c3_proxy(phi)
    if not proxy.holds:
        raise ReductionRefused(f"{phi.kind} roof fails the C³ coefficient proxy")
    members = members or class_M(alpha, horizon)
    in_M = set(members.frequencies)
    kept = [m for m in members.frequencies if m > 0 and phi.coefficient(m) != 0]
    explicit = phi.nonzero_frequencies(horizon if phi.is_finite else min(horizon, dense_horizon))
    discarded = [m for m in explicit if m not in in_M]
    with mp.workprec(alpha.precision_bits):
        bound = 2 * mp.fsum((mpf(m) ** 2 * abs(phi.coefficient(m)) / 2) ** 2 for m in discarded)
        if not phi.is_finite and horizon > dense_horizon:
            bound += 2 * phi.tail_bound(dense_horizon, power=4, squared=True) / 4
    reduced = ReducedRoof(
        stage="M", roof=phi.restricted(kept, kind=f"{phi.kind}_M"), source=phi,
        kept=kept, discarded=discarded, discarded_l2_bound=bound, members=members, horizon=horizon,
    )
    if phi.is_finite and max(phi.support or (0,)) > horizon:
        reduced.notes.append(f"frequencies above {horizon} were truncated")
    logger.info(f"reduce_to_M: kept {len(kept)}, discarded {len(discarded)}, ξ bound {mp.nstr(bound, 4)}")
    return reduced


def _ratio(phi: FourierRoof, alpha: RotationNumber, m: int) -> mpf:
    c = phi.coefficient(m)
    if c == 0:
        return mpf(0)
    norm, _ = norm_of_multiple(alpha, m)
    return abs(c) / norm


def reduce_to_best_returns(r: ReducedRoof, alpha: RotationNumber,
                           hypotheses: Optional[HypothesisReport] = None) -> ReducedRoof:
    """Move the multiples l·q_n (l >= 2) into a coboundary; keep 0 and best returns."""
    if r.stage != "M":
        raise ValueError("reduce_to_best_returns expects a stage-M reduction")
    phi = r.roof
    infos = [r.members.info(m) for m in r.kept]
    best = [i for i in infos if i is not None and i.kind == "best_return"]
    multiples = [i for i in infos if i is not None and i.kind != "best_return"]
    best_q = {i.m for i in best}

    C: Dict[int, mpf] = {}
    with alpha.workprec():
        for info in multiples:
            base = alpha.q(info.n) if info.n is not None else None
            if base is None or base not in best_q or phi.coefficient(base) == 0:
                raise ReductionRefused(f"[H1] fails along best returns: multiple {info.m} has no kept base")
            C[base] = C.get(base, mpf(0)) + abs(phi.coefficient(info.m)) ** 2 / abs(phi.coefficient(base)) ** 2

        ratios = [(i.m, _ratio(phi, alpha, i.m)) for i in sorted(best + multiples, key=lambda i: i.m)]
        tail = [v for m, v in ratios if m in best_q and m >= 2]
        if len(tail) >= 2 and tail[-1] > tail[-2] and tail[-1] == max(tail):
            raise ReductionRefused("sup |c_m|/‖mα‖ is still growing at the horizon; use the single-frequency branch")
        K3 = max([v for _, v in ratios], default=mpf(0))
        bound = mp.fsum(C.values()) * K3 ** 2 / 16

    kept = sorted(best_q)
    reduced = ReducedRoof(
        stage="best_returns", roof=phi.restricted(kept, kind=f"{r.source.kind}_best_returns"), source=r.source,
        kept=kept, discarded=sorted(i.m for i in multiples), discarded_l2_bound=bound,
        members=r.members, horizon=r.horizon, K3=K3, notes=list(r.notes),
    )
    if hypotheses is not None:
        reduced.notes.append(f"global [H1] verdict: {hypotheses.h1.verdict}")
    logger.info(f"reduce_to_best_returns: kept {kept}, K3 {mp.nstr(K3, 5)}, bound {mp.nstr(bound, 4)}")
    return reduced


@dataclass
class CohomologyResidual:
    max_residual: float
    tail_bound: mpf
    numerical_floor: float
    frequencies: int

    @property
    def within_bound(self) -> bool:
        return self.max_residual <= float(self.tail_bound) + self.numerical_floor


def verify_cohomology_residual(phi: FourierRoof, reduced: ReducedRoof, alpha: RotationNumber,
                               grid: int = 1024, horizon: Optional[int] = None,
                               overshoot: int = RESIDUAL_OVERSHOOT) -> CohomologyResidual:
    """max_x |ψ(x+α) − ψ(x) − ξ(x)| with ψ truncated at horizon.

    ξ = φ − φ_kept is taken from the roof itself up to overshoot·horizon, so
    the residual sees the truncation tail and any frequency the reduction
    failed to account for. Its sup is at most 2Σ_{m>horizon}|c_m|.
    """
    horizon = min(horizon or reduced.horizon, max(reduced.discarded, default=1))
    kept = set(reduced.kept)
    freqs = [m for m in reduced.discarded if m <= horizon]
    xi_freqs = [m for m in phi.nonzero_frequencies(overshoot * horizon) if m not in kept]
    with alpha.workprec():
        psis = [transfer_entry(phi, alpha, m).psi for m in freqs]
        xi_coeffs = [phi.coefficient(m) for m in xi_freqs]
        tail = 2 * phi.tail_bound(horizon)
        shift = float(alpha.value())
    psi_poly = TrigPolynomial(freqs, psis)
    xi_poly = TrigPolynomial(xi_freqs, xi_coeffs)
    x = midpoint_grid(grid)
    residual = psi_poly.at_points(x + shift) - psi_poly.at_points(x) - xi_poly.at_points(x)
    floor = 1e-9 * (1 + float(psi_poly.sup_bound()))
    value = float(np.max(np.abs(residual))) if len(xi_freqs) else 0.0
    logger.debug(f"cohomology residual {value:.3g} over {len(xi_freqs)} frequencies, tail {mp.nstr(tail, 4)}")
    return CohomologyResidual(value, tail, floor, len(freqs))


# ---------------------------------------------------------------------------
# Classifier
# ---------------------------------------------------------------------------

@dataclass
class DichotomyVerdict:
    outcome: str
    reason: str
    horizon: int
    ratio_table: List[dict] = field(default_factory=list)
    limsup: Optional[mpf] = None
    partial_l2: Optional[mpf] = None
    l2: Optional[L2Test] = None
    subsequence: List[int] = field(default_factory=list)
    hypotheses: Optional[HypothesisReport] = None
    annotations: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome, "reason": self.reason, "horizon": self.horizon,
            "ratio_table": self.ratio_table, "limsup": self.limsup, "partial_l2": self.partial_l2,
            "l2": None if self.l2 is None else {"status": self.l2.status, "bound": self.l2.bound,
                                               "rate": self.l2.rate, "reason": self.l2.reason},
            "subsequence": self.subsequence,
            "hypotheses": None if self.hypotheses is None else self.hypotheses.to_dict(),
            "annotations": self.annotations,
        }


@dataclass
class Thresholds:
    ratio_floor: float = RATIO_FLOOR
    hysteresis: float = HYSTERESIS
    trend_window: int = TREND_WINDOW
    l2_tolerance: float = L2_TOLERANCE
    divergence_ratio: float = DIVERGENCE_RATIO


def _annotate(hyp: Optional[HypothesisReport]) -> List[str]:
    if hyp is None:
        return []
    notes = [f"H1 {hyp.h1.verdict}", f"H2 {hyp.h2.verdict}", f"H3 {hyp.h3.verdict}"]
    if hyp.h1.passed:
        notes.append("[H1] holds with finite Σ C_m; when 0 < C < ∞, [H2] and [H3] are not needed")
    return notes


def classify(phi: FourierRoof, alpha: RotationNumber, horizon: int,
             thresholds: Optional[Thresholds] = None,
             hypotheses: Optional[HypothesisReport] = None,
             dense_horizon: int = DEFAULT_DENSE_HORIZON) -> DichotomyVerdict:
    """Finite-horizon outcome of the dichotomy: L² conjugate to the
    suspension, weak mixing by a single or by many frequencies, or undecided."""
    th = thresholds or Thresholds()
    if phi.is_constant:
        return DichotomyVerdict(DISCRETE, "constant roof (already a suspension)", horizon,
                                partial_l2=mpf(0), annotations=["constant"])
    if hypotheses is None:
        hypotheses = check_hypotheses(phi, min(horizon, DEFAULT_HYPOTHESIS_HORIZON)) if horizon >= 2 else None
    notes = _annotate(hypotheses)
    if phi.is_finite and not phi.series_prefix:
        return DichotomyVerdict(DISCRETE, "trigonometric polynomial", horizon,
                                hypotheses=hypotheses, annotations=notes + ["finite support"])

    members = class_M(alpha, horizon)
    transfer = formal_transfer(phi, alpha, horizon, dense_horizon, members)
    l2 = l2_conjugacy_test(transfer, th.l2_tolerance, th.divergence_ratio, th.trend_window)

    rows, tail = [], []
    with alpha.workprec():
        for info in members.members:
            if info.m == 0:
                continue
            r = _ratio(phi, alpha, info.m)
            rows.append({"m": info.m, "kind": info.kind, "n": info.n, "l": info.l,
                         "c_abs": abs(phi.coefficient(info.m)), "norm": info.norm, "ratio": r})
            if info.kind == "best_return" and info.m >= 2:
                tail.append((info.n, info.m, r))

    hi = th.ratio_floor * (1 + th.hysteresis)
    lo = th.ratio_floor * (1 - th.hysteresis)
    window = [r for _, _, r in tail[-th.trend_window:]]
    decaying = len(tail) >= th.trend_window and all(b < a for a, b in zip(window, window[1:]))
    low = bool(tail) and tail[-1][2] <= lo
    limsup = max(window, default=mpf(0))

    if len(tail) >= 2 and tail[-1][2] >= hi and tail[-2][2] >= hi and not decaying:
        outcome, reason = WM_SINGLE, "ratios along best returns stay above the floor"
        subsequence = [n for n, _, r in tail if r >= hi]
    elif l2.status == "diverging" and (decaying or low):
        outcome, reason = WM_MULTI, "ratios decay while Σ|ψ_m|² diverges"
        subsequence = [n for n, _, _ in tail]
    elif l2.status == "converged" and (len(tail) < 2 or decaying or low):
        outcome, reason = DISCRETE, "Σ|ψ_m|² converges"
        subsequence = []
    else:
        outcome, reason = UNDECIDED, f"L2 {l2.status}, {len(tail)} best returns in M"
        subsequence = [n for n, _, _ in tail]
    if outcome == UNDECIDED:
        logger.warning(f"classify undecided at horizon {horizon}: {reason}")
    logger.info(f"classify {phi.kind} over {alpha.label}: {outcome}")
    return DichotomyVerdict(outcome, reason, horizon, ratio_table=rows, limsup=limsup,
                            partial_l2=transfer.partial_l2, l2=l2, subsequence=subsequence,
                            hypotheses=hypotheses, annotations=notes)
