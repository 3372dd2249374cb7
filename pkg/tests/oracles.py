"""Independent reference implementations used as test oracles.

They are written directly from the definitions, favouring obviousness over speed.
"""
from __future__ import annotations

import math
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from coevolve.objectives import CorrectnessScore, DesignCandidate, PpaMetrics, SynthesisFailed


def make(cid, c=1.0, ppa=(1.0, 1.0, 1.0), total=100):
    """Evaluated candidate with correctness ``c`` (a float or ``(passed, total)``) and PPA tuple or None for failure."""
    if isinstance(c, tuple):
        score = CorrectnessScore(*c)
    else:
        score = CorrectnessScore(round(c * total), total)
    metrics = SynthesisFailed("fixture") if ppa is None else PpaMetrics(*ppa)
    return DesignCandidate(str(cid), f"// {cid}").with_evaluation(score, metrics)


def vector(candidate):
    """Minimization vector with failed synthesis mapped to +inf on all PPA axes."""
    inc = 1 - candidate.correctness.value
    if isinstance(candidate.ppa, SynthesisFailed):
        return (inc, math.inf, math.inf, math.inf)
    return (inc, candidate.ppa.area, candidate.ppa.delay, candidate.ppa.power)


def brute_dominates(a, b) -> bool:
    va, vb = vector(a), vector(b)
    return all(x <= y for x, y in zip(va, vb)) and any(x < y for x, y in zip(va, vb))


def peel_off(pool):
    """Repeatedly strip the subset dominated by nobody still remaining."""
    remaining = list(pool)
    levels = []
    while remaining:
        front = [p for p in remaining if not any(brute_dominates(q, p) for q in remaining if q is not p)]
        levels.append(front)
        remaining = [p for p in remaining if all(p is not f for f in front)]
    return levels


def allocation_oracle(L, N):
    weights = [Fraction(1, k + 1) for k in range(1, L + 1)]
    total = sum(weights)
    slots = []
    for w in weights:
        share = Fraction(w * N) / total
        exact = Decimal(share.numerator) / Decimal(share.denominator)
        slots.append(int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP)))
    i = 0
    while sum(slots) < N:
        slots[i % L] += 1
        i += 1
    i = L - 1
    while sum(slots) > N:
        if slots[i % L] > 0:
            slots[i % L] -= 1
        i -= 1
    return slots


def correctness_key(c):
    return -c.correctness.value


def reference_select(levels, slots, N, key=correctness_key):
    """Step-by-step cascade: a level takes min(its size, its slots + carried surplus)."""
    chosen = []
    carry = 0
    ranked = [sorted(level, key=key) for level in levels]
    for level, s in zip(ranked, slots):
        take = min(len(level), s + carry)
        carry = s + carry - take
        chosen.extend(level[:take])
    for level in ranked:
        for c in level:
            if len(chosen) >= N:
                break
            if all(c is not x for x in chosen):
                chosen.append(c)
    return chosen[:N]


def gate_oracle(t, G, lo=0.25, hi=1.0, alpha=2.0):
    return lo + (hi - lo) * (t / G) ** alpha


def pareto_better(child, parent):
    """Child PPA weakly better everywhere, strictly somewhere; None = failed synthesis."""
    if child is None:
        return False
    if parent is None:
        return True
    return all(x <= y for x, y in zip(child, parent)) and any(x < y for x, y in zip(child, parent))


def reward_oracle(category, c_child, m_child, c_parent, m_parent):
    improved = pareto_better(m_child, m_parent)
    if category == "correctness":
        return int(c_child > c_parent)
    if category == "ppa":
        return int(improved and c_child >= c_parent)
    if category == "joint":
        return int(c_child > c_parent and improved)
    raise ValueError(category)


def pass_at_k_oracle(n, f, k):
    """1 - P(all k draws fail) computed as a product of fractions."""
    if n - f < k:
        return 1.0
    p_fail = Fraction(1)
    for i in range(k):
        p_fail *= Fraction(n - f - i, n - i)
    return float(1 - p_fail)
