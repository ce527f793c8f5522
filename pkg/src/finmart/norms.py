"""Norms and quasinorms of adapted functions and difference sequences.

Everything is computed exactly on finite weighted value multisets; the
weak-L1 supremum in particular is attained at a breakpoint of the
distribution function and found by a descending sweep, never by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .space import AdaptedFunction, AdaptedSequence, FiltrationError, Martingale, conditional_expectation, differences

__all__ = [
    "WeightedValueMultiset",
    "NormValue",
    "to_multiset",
    "lp_norm",
    "weak_l1_norm",
    "diagonal_multiset",
    "conditional_square_function",
    "p_variation",
]


@dataclass(frozen=True)
class WeightedValueMultiset:
    """Finite multiset of (value, weight) pairs; total weight is arbitrary."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        wts = np.asarray(self.weights, dtype=np.float64)
        if vals.shape != wts.shape or vals.ndim != 1:
            raise FiltrationError("values and weights must be 1-d and aligned")
        if not np.all(np.isfinite(vals)):
            raise FiltrationError("multiset values must be finite")
        if np.any(wts <= 0) or not np.all(np.isfinite(wts)):
            raise FiltrationError("multiset weights must be finite and positive")
        vals.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "weights", wts)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class NormValue:
    """Nonnegative number tagged with the functional that produced it."""

    value: float
    kind: str

    def __post_init__(self):
        if self.value < 0:
            raise FiltrationError("norms are nonnegative")

    def __float__(self) -> float:
        return self.value


def to_multiset(g: AdaptedFunction) -> WeightedValueMultiset:
    """One (value, atom measure) pair per atom of g's level."""
    return WeightedValueMultiset(g.values.copy(), g.tree.measure(g.level).copy())


def diagonal_multiset(terms: Sequence[AdaptedFunction] | AdaptedSequence) -> WeightedValueMultiset:
    """Disjoint union of the terms' multisets; weights are not renormalized."""
    if isinstance(terms, AdaptedSequence):
        terms = terms.terms
    if len(terms) == 0:
        raise FiltrationError("empty sequence")
    parts = [to_multiset(t) for t in terms]
    return WeightedValueMultiset(
        np.concatenate([p.values for p in parts]),
        np.concatenate([p.weights for p in parts]),
    )


def lp_norm(m: WeightedValueMultiset, p: float) -> NormValue:
    """(sum w |v|^p)^(1/p); p = inf gives max |v|."""
    if p == math.inf:
        return NormValue(float(np.max(np.abs(m.values))), "linf")
    if p < 1:
        raise FiltrationError("p must be >= 1")
    a = np.abs(m.values)
    if p == 1.0:
        val = float(np.dot(m.weights, a))
    elif p == 2.0:
        val = math.sqrt(float(np.dot(m.weights, a * a)))
    else:
        val = float(np.dot(m.weights, a ** p)) ** (1.0 / p)
    return NormValue(val, f"l{p:g}")


def weak_l1_norm(m: WeightedValueMultiset) -> NormValue:
    """sup over lambda > 0 of lambda * weight{|v| > lambda}, computed exactly.

    lambda * W(lambda) increases on each interval between consecutive
    distinct |values|, so the supremum equals max over distinct v > 0 of
    v * weight{|values| >= v}; a single descending sorted sweep finds it.
    """
    a = np.abs(m.values)
    order = np.argsort(-a, kind="stable")
    a = a[order]
    w = m.weights[order]
    cum = np.cumsum(w)  # cum[i] = weight{|values| >= a[i]} once ties collapse
    best = 0.0
    n = len(a)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and a[j + 1] == a[i]:
            j += 1
        if a[i] <= 0:
            break
        best = max(best, float(a[i]) * float(cum[j]))
        i = j + 1
    return NormValue(best, "weak")


def _difference_terms(f_or_diffs) -> tuple[AdaptedFunction, ...]:
    if isinstance(f_or_diffs, Martingale):
        return differences(f_or_diffs)
    if isinstance(f_or_diffs, AdaptedSequence):
        terms = f_or_diffs.terms
    else:
        terms = tuple(f_or_diffs)
    if not terms:
        raise FiltrationError("empty difference sequence")
    for k, d in enumerate(terms, start=1):
        if d.level != k:
            raise FiltrationError(f"difference {k} must live at level {k}")
    return terms


def conditional_square_function(f_or_diffs, first_term_mode: str = "paper") -> AdaptedFunction:
    """s = (sum_k E_{k-1}|d_k|^2)^(1/2), pointwise.

    first_term_mode picks the k = 1 projection: "paper" keeps |d_1|^2 as is
    (E_1 of a level-1 function), "trivial" averages it globally.  The output
    lives at level N-1, the coarsest level at which every term is measurable
    (level 1, resp. 0, when N = 1).
    """
    if first_term_mode not in ("paper", "trivial"):
        raise FiltrationError(f"unknown first_term_mode {first_term_mode!r}")
    terms = _difference_terms(f_or_diffs)
    tree = terms[0].tree
    n = len(terms)
    first_level = 1 if first_term_mode == "paper" else 0
    out_level = max(first_level, n - 1)
    d1 = terms[0]
    sq1 = AdaptedFunction(tree, 1, d1.values * d1.values)
    if first_term_mode == "trivial":
        sq1 = conditional_expectation(sq1, 0)
    acc = sq1.refine(out_level)
    for k in range(2, n + 1):
        dk = terms[k - 1]
        ek = conditional_expectation(AdaptedFunction(tree, k, dk.values * dk.values), k - 1)
        acc = acc + ek.refine(out_level)
    return AdaptedFunction(tree, out_level, np.sqrt(acc))


def p_variation(f_or_diffs, p: float) -> AdaptedFunction:
    """(sum_k |d_k|^p)^(1/p) pointwise on the leaves; p = 1 is sum |d_k|."""
    if p < 1:
        raise FiltrationError("p must be >= 1")
    terms = _difference_terms(f_or_diffs)
    tree = terms[0].tree
    acc = np.zeros(tree.size(tree.depth))
    for d in terms:
        acc = acc + np.abs(d.on_leaves()) ** p
    return AdaptedFunction(tree, tree.depth, acc ** (1.0 / p))
