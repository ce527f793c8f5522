"""Martingale decompositions: two-sided jump split, threshold triple,
positive-part reduction, the uncentered variant, and the regular-filtration
variant.

Sign conventions at the k = 1 boundary follow f_0^* = 0: the whole first
difference is routed to the h (resp. beta/gamma) side, the starting value
f_0 stays with g (resp. beta).  The defining indicator comparisons are kept
verbatim: strict < selects the g-side, >= the h-side; <= lambda selects the
beta-side, > lambda the alpha-side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import (
    AdaptedFunction,
    FiltrationError,
    Martingale,
    conditional_expectation,
    differences,
    martingale_from_differences,
    martingale_from_terminal,
    maximal,
)

__all__ = [
    "MartingalePair",
    "GundyTriple",
    "NonMartingalePair",
    "davis",
    "gundy",
    "krickeberg",
    "corollary_c_split",
    "regular_davis",
]


@dataclass(frozen=True)
class MartingalePair:
    """f = g + h as martingales: dg_k + dh_k = df_k and g_0 + h_0 = f_0."""

    g: Martingale
    h: Martingale
    kind: str


@dataclass(frozen=True)
class GundyTriple:
    """f = alpha + beta + gamma at threshold lam."""

    alpha: Martingale
    beta: Martingale
    gamma: Martingale
    lam: float


@dataclass(frozen=True)
class NonMartingalePair:
    """Uncentered split of the differences; supports are disjoint pointwise."""

    g_diffs: tuple[AdaptedFunction, ...]
    h_diffs: tuple[AdaptedFunction, ...]


def _maximal_pair(f: Martingale, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(f_{k-1}^*, f_k^*) on the level-k atoms, with f_0^* = 0."""
    cur = maximal(f, k).values
    if k == 1:
        prev = np.zeros_like(cur)
    else:
        prev = maximal(f, k - 1).refine(k)
    return prev, cur


def _centered(tree, k: int, raw: np.ndarray) -> AdaptedFunction:
    term = AdaptedFunction(tree, k, raw)
    mean = conditional_expectation(term, k - 1)
    return AdaptedFunction(tree, k, raw - mean.refine(k))


def davis(f: Martingale) -> MartingalePair:
    """Split df_k over {f_k^* < 2 f_{k-1}^*} vs its complement, recentered.

    With f_0^* = 0 the k = 1 jump set is the whole space, so dh_1 = df_1 and
    dg_1 = 0; f_0 is carried by g.
    """
    df = differences(f)
    dgs, dhs = [], []
    for k in range(1, f.depth + 1):
        prev, cur = _maximal_pair(f, k)
        chi_g = cur < 2.0 * prev
        dg = _centered(f.tree, k, np.where(chi_g, df[k - 1].values, 0.0))
        dgs.append(dg)
        dhs.append(AdaptedFunction(f.tree, k, df[k - 1].values - dg.values))
    g = martingale_from_differences(f.tree, f.f0, dgs)
    h = martingale_from_differences(f.tree, 0.0, dhs)
    return MartingalePair(g, h, "davis")


def gundy(f: Martingale, lam: float) -> GundyTriple:
    """Threshold decomposition f = alpha + beta + gamma at lam > 0.

    d alpha_k = df_k on {f_{k-1}^* > lambda} (predictable, so already
    centered), d beta_k comes from {f_k^* <= lambda}, d gamma_k from the
    crossing set {f_{k-1}^* <= lambda < f_k^*}; the latter two are
    recentered.  Since f_0^* = 0, d alpha_1 = 0 always.
    """
    if lam <= 0:
        raise FiltrationError("threshold must be positive")
    df = differences(f)
    das, dbs, dgs = [], [], []
    for k in range(1, f.depth + 1):
        prev, cur = _maximal_pair(f, k)
        chi_a = prev > lam
        chi_b = cur <= lam
        chi_c = (prev <= lam) & (lam < cur)
        dfv = df[k - 1].values
        das.append(AdaptedFunction(f.tree, k, np.where(chi_a, dfv, 0.0)))
        dbs.append(_centered(f.tree, k, np.where(chi_b, dfv, 0.0)))
        dgs.append(_centered(f.tree, k, np.where(chi_c, dfv, 0.0)))
    alpha = martingale_from_differences(f.tree, 0.0, das)
    beta = martingale_from_differences(f.tree, f.f0, dbs)
    gamma = martingale_from_differences(f.tree, 0.0, dgs)
    return GundyTriple(alpha, beta, gamma, float(lam))


def krickeberg(f: Martingale) -> tuple[Martingale, Martingale]:
    """Positive and negative parts: martingales closed from max(+-f_N, 0).

    The difference of the parts reproduces f and the parts' L1 norms add up
    to the L1 norm of f_N exactly.
    """
    x = f.terminal.values
    pos = martingale_from_terminal(AdaptedFunction(f.tree, f.depth, np.maximum(x, 0.0)))
    neg = martingale_from_terminal(AdaptedFunction(f.tree, f.depth, np.maximum(-x, 0.0)))
    return pos, neg


def corollary_c_split(f: Martingale) -> NonMartingalePair:
    """Uncentered jump split: dg_k = df_k on {f_k^* < 2 f_{k-1}^*}, dh_k the rest."""
    df = differences(f)
    dgs, dhs = [], []
    for k in range(1, f.depth + 1):
        prev, cur = _maximal_pair(f, k)
        chi_g = cur < 2.0 * prev
        dfv = df[k - 1].values
        dgs.append(AdaptedFunction(f.tree, k, np.where(chi_g, dfv, 0.0)))
        dhs.append(AdaptedFunction(f.tree, k, np.where(chi_g, 0.0, dfv)))
    return NonMartingalePair(tuple(dgs), tuple(dhs))


def regular_davis(f: Martingale, k_reg: float) -> MartingalePair:
    """Value-threshold variant for nonnegative f: split on {f_k <= k f_{k-1}}.

    On a filtration whose regularity constant is at most k_reg the h-side
    indicator is empty for every k >= 2, so h degenerates to its first
    difference.  The k = 1 boundary mirrors davis: dh_1 = df_1, dg_1 = 0.
    Negative martingales are rejected; split them first (krickeberg) and
    decompose each part.
    """
    if not f.is_nonnegative():
        raise FiltrationError(
            "regular_davis needs a nonnegative martingale; "
            "apply krickeberg and decompose each part"
        )
    if k_reg < 1:
        raise FiltrationError("regularity parameter must be >= 1")
    df = differences(f)
    dgs, dhs = [], []
    for k in range(1, f.depth + 1):
        if k == 1:
            chi_g = np.zeros(f.tree.size(1), dtype=bool)
        else:
            prev = f.at(k - 1).refine(k)
            chi_g = f.at(k).values <= k_reg * prev
        dg = _centered(f.tree, k, np.where(chi_g, df[k - 1].values, 0.0))
        dgs.append(dg)
        dhs.append(AdaptedFunction(f.tree, k, df[k - 1].values - dg.values))
    g = martingale_from_differences(f.tree, f.f0, dgs)
    h = martingale_from_differences(f.tree, 0.0, dhs)
    return MartingalePair(g, h, "regular-davis")
