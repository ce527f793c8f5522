"""Executable checks for every inequality, proof step and counterexample.

Two kinds of caps appear.  Paper-constant caps (24, 8, 8, the sqrt(2)
geometric bound, 4*lambda, the factor 2 step count, 8 and 4+4p, Doob's 1)
are hard assertions: they come with explicit constants and must hold on
every instance.  Everything stated with an unspecified constant gets a
calibrated cap instead: the frozen corpus maximum, recorded together with
its maximizing witness, never an invented universal constant.

Proof traces follow the source inequalities line by line.  Inside a trace
the first difference is the first function itself (no level-0 subtraction)
and the k = 1 terms of the threshold split vanish; this is the only reading
under which the explicit constants above are theorems, and it differs from
the artifact-wide convention df_1 = f_1 - E f_1 used by the decomposition
operations.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .decomp import MartingalePair, corollary_c_split, davis, gundy, krickeberg, regular_davis
from .norms import (
    WeightedValueMultiset,
    conditional_square_function,
    diagonal_multiset,
    lp_norm,
    p_variation,
    to_multiset,
    weak_l1_norm,
)
from .space import (
    AdaptedFunction,
    CorpusSpec,
    FiltrationError,
    Martingale,
    conditional_on_leaves,
    differences,
    generate,
    maximal,
    regularity_constant,
)

__all__ = [
    "RatioReport",
    "TwoSidedReport",
    "TraceEntry",
    "ProofTrace",
    "CounterexampleReport",
    "CwikelReport",
    "SuiteRow",
    "SuiteSummary",
    "SuiteResult",
    "PAPER_SLACK_REL",
    "martingale_l1",
    "dyadic_lambda_grid",
    "check_theorem_a",
    "check_theorem_b",
    "check_corollary_c",
    "check_burkholder_p",
    "check_bminus_upper",
    "check_gundy_properties",
    "check_davis_properties",
    "check_dual_doob",
    "check_khintchine_rosenthal",
    "proof_trace_theorem_a",
    "proof_trace_theorem_b",
    "counterexample_report",
    "cwikel_report",
    "harmonic_number",
    "run_suite",
    "ACCEPTANCE_CORPUS",
    "DOUBLING_CORPUS_SHALLOW",
    "DOUBLING_CORPUS_DEEP",
    "DEFAULT_CHECKS",
    "calibrate",
]

PAPER_SLACK_REL = 1e-9
EXACT_SLACK_REL = 1e-12

STEP3_CONSTANT = math.sqrt(2.0) / (math.sqrt(2.0) - 1.0)  # = 2 + sqrt(2)


# ---------------------------------------------------------------------------
# report containers


@dataclass(frozen=True)
class RatioReport:
    """One checked inequality: lhs <= cap * rhs, with its witness."""

    check: str
    lhs: float
    rhs: float
    ratio: float
    witness: dict
    cap: float | None = None
    cap_kind: str | None = None  # "paper-constant" | "calibrated" | None

    def __post_init__(self):
        if self.cap is not None and self.cap_kind is None:
            raise FiltrationError("cap needs a provenance kind")

    @property
    def degenerate(self) -> bool:
        return self.rhs == 0.0

    @property
    def passed(self) -> bool | None:
        if self.cap is None:
            return None
        slack = PAPER_SLACK_REL if self.cap_kind == "paper-constant" else PAPER_SLACK_REL
        return self.ratio <= self.cap + slack * (1.0 + abs(self.cap))


@dataclass(frozen=True)
class TwoSidedReport:
    """Both directions of an equivalence: lhs/rhs and rhs/lhs."""

    low: RatioReport
    high: RatioReport


@dataclass(frozen=True)
class TraceEntry:
    name: str
    value: float
    bound: float | None = None
    bound_kind: str | None = None
    slack: float = 0.0

    @property
    def passed(self) -> bool | None:
        if self.bound is None:
            return None
        return self.value <= self.bound + self.slack


@dataclass(frozen=True)
class ProofTrace:
    """Named quantities of one proof run at a fixed threshold."""

    kind: str
    lam: float
    f_l1: float
    entries: tuple[TraceEntry, ...]

    def entry(self, name: str) -> TraceEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def all_paper_pass(self) -> bool:
        return all(e.passed for e in self.entries if e.bound_kind == "paper-constant")


def martingale_l1(f: Martingale) -> float:
    """The artifact's ||f||_1, i.e. the L1 norm of the terminal function."""
    return lp_norm(to_multiset(f.terminal), 1).value


def _ratio(lhs: float, rhs: float) -> float:
    return lhs / rhs if rhs > 0 else 0.0


def dyadic_lambda_grid(f: Martingale) -> list[float]:
    """Powers of two spanning the positive breakpoints of f_N^*."""
    star = maximal(f, f.depth).values
    pos = star[star > 0]
    if pos.size == 0:
        return []
    lo = math.floor(math.log2(float(pos.min())))
    hi = math.ceil(math.log2(float(star.max())))
    return [2.0 ** j for j in range(lo, hi + 1)]


# ---------------------------------------------------------------------------
# statement-level checks (artifact conventions, calibrated caps)


def _weak(m: WeightedValueMultiset) -> float:
    return weak_l1_norm(m).value


def _theorem_a_lhs(f: Martingale) -> float:
    pair = davis(f)
    cond = _weak(to_multiset(conditional_square_function(pair.g)))
    diag = _weak(to_multiset(p_variation(pair.h, 1)))
    return cond + diag


def check_theorem_a(
    f: Martingale, cap: float | None = None, via_krickeberg: bool = False
) -> RatioReport:
    """Weak-type split bound: csf of the g-part plus 1-variation of the h-part."""
    if via_krickeberg:
        lhs = sum(_theorem_a_lhs(part) for part in krickeberg(f))
    else:
        lhs = _theorem_a_lhs(f)
    rhs = martingale_l1(f)
    return RatioReport(
        "theorem_a", lhs, rhs, _ratio(lhs, rhs),
        {"via_krickeberg": via_krickeberg},
        cap, "calibrated" if cap is not None else None,
    )


def _theorem_b_lhs(f: Martingale, decomposition: str, k_reg: float) -> float:
    if decomposition == "davis":
        pair = davis(f)
    elif decomposition == "regular":
        pair = regular_davis(f, k_reg)
    else:
        raise FiltrationError(f"unknown decomposition {decomposition!r}")
    cond = _weak(to_multiset(conditional_square_function(pair.g)))
    diag = _weak(diagonal_multiset(differences(pair.h)))
    return cond + diag


def check_theorem_b(
    f: Martingale, decomposition: str = "davis", cap: float | None = None
) -> RatioReport:
    """Conditional term plus disjoint-sum diagonal term against k * ||f||_1.

    The regular variant needs a nonnegative martingale; signed input is
    split into its positive parts first and the two contributions added.
    """
    k_reg = regularity_constant(f.tree)
    if decomposition == "regular" and not f.is_nonnegative():
        lhs = sum(_theorem_b_lhs(p, "regular", k_reg) for p in krickeberg(f))
    else:
        lhs = _theorem_b_lhs(f, decomposition, k_reg)
    rhs = k_reg * martingale_l1(f)
    return RatioReport(
        "theorem_b", lhs, rhs, _ratio(lhs, rhs),
        {"decomposition": decomposition, "regularity": k_reg},
        cap, "calibrated" if cap is not None else None,
    )


def check_corollary_c(f: Martingale, cap: float | None = None) -> RatioReport:
    """Same two terms for the uncentered split; no regularity enters."""
    split = corollary_c_split(f)
    cond = _weak(to_multiset(conditional_square_function(split.g_diffs)))
    diag = _weak(diagonal_multiset(split.h_diffs))
    lhs = cond + diag
    rhs = martingale_l1(f)
    return RatioReport(
        "corollary_c", lhs, rhs, _ratio(lhs, rhs), {},
        cap, "calibrated" if cap is not None else None,
    )


def check_burkholder_p(
    f: Martingale, p: float, caps: tuple[float, float] | None = None
) -> TwoSidedReport:
    """Two-sided p-norm equivalence against csf + p-variation, p >= 2."""
    if p < 2:
        raise FiltrationError("for p < 2 use check_bminus_upper with a decomposition")
    lhs = lp_norm(to_multiset(f.terminal), p).value
    rhs = (
        lp_norm(to_multiset(conditional_square_function(f)), p).value
        + lp_norm(to_multiset(p_variation(f, p)), p).value
    )
    cap_lo, cap_hi = caps if caps is not None else (None, None)
    kind = "calibrated" if caps is not None else None
    return TwoSidedReport(
        RatioReport(f"burkholder_p{p:g}_low", lhs, rhs, _ratio(lhs, rhs), {"p": p}, cap_lo, kind),
        RatioReport(f"burkholder_p{p:g}_high", rhs, lhs, _ratio(rhs, lhs), {"p": p}, cap_hi, kind),
    )


def _as_pair(f: Martingale, pair) -> tuple[Martingale, Martingale]:
    if isinstance(pair, MartingalePair):
        g, h = pair.g, pair.h
    else:
        g, h = pair
    df = differences(f)
    dg = differences(g)
    dh = differences(h)
    scale = 1.0 + max(float(np.max(np.abs(d.values))) for d in df)
    for k in range(f.depth):
        if np.max(np.abs(dg[k].values + dh[k].values - df[k].values)) > 1e-9 * scale:
            raise FiltrationError("pair does not decompose f")
    return g, h


def check_bminus_upper(f: Martingale, p: float, pair) -> RatioReport:
    """Value of the decomposition bracket for one pair, over ||f_N||_p.

    Any concrete pair upper-bounds the infimum over decompositions.
    """
    if not 1.0 < p <= 2.0:
        raise FiltrationError("p must lie in (1, 2]")
    g, h = _as_pair(f, pair)
    lhs = (
        lp_norm(to_multiset(conditional_square_function(g)), p).value
        + lp_norm(to_multiset(p_variation(h, p)), p).value
    )
    rhs = lp_norm(to_multiset(f.terminal), p).value
    return RatioReport("bminus_upper", lhs, rhs, _ratio(lhs, rhs), {"p": p})


def check_gundy_properties(
    f: Martingale, lam: float, caps: dict | None = None
) -> list[RatioReport]:
    """The three properties of the threshold triple at one lambda.

    (i) carries the exact constant 1 via Doob's maximal inequality; the
    quantitative content of (ii-a), (ii-b) and (iii) is calibrated.
    """
    caps = caps or {}
    triple = gundy(f, lam)
    w = f.tree.leaf_weights
    rhs = martingale_l1(f)
    alpha_abs = np.zeros(f.tree.size(f.depth))
    for d in differences(triple.alpha):
        alpha_abs += np.abs(d.on_leaves())
    lhs_i = lam * float(w[alpha_abs > 0].sum())
    beta_term = to_multiset(triple.beta.terminal)
    lhs_iia = lp_norm(beta_term, 1).value
    lhs_iib = lp_norm(beta_term, 2).value ** 2 / lam
    lhs_iii = sum(lp_norm(to_multiset(d), 1).value for d in differences(triple.gamma))
    witness = {"lam": lam}

    def _rep(name: str, lhs: float, cap, kind):
        return RatioReport(name, lhs, rhs, _ratio(lhs, rhs), witness, cap, kind)

    return [
        _rep("gundy_i", lhs_i, 1.0, "paper-constant"),
        _rep("gundy_ii_a", lhs_iia, caps.get("gundy_ii_a"), "calibrated" if "gundy_ii_a" in caps else None),
        _rep("gundy_ii_b", lhs_iib, caps.get("gundy_ii_b"), "calibrated" if "gundy_ii_b" in caps else None),
        _rep("gundy_iii", lhs_iii, caps.get("gundy_iii"), "calibrated" if "gundy_iii" in caps else None),
    ]


def check_davis_properties(f: Martingale, p: float) -> list[RatioReport]:
    """Pointwise 8-bound on the g-differences and the (4+4p) h-sum bound."""
    if p not in (1, 2, 3):
        raise FiltrationError("p must be one of 1, 2, 3")
    pair = davis(f)
    dg = differences(pair.g)
    worst = 0.0
    for k in range(2, f.depth + 1):
        prev_star = maximal(f, k - 1).refine(k)
        num = np.abs(dg[k - 1].values)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(num == 0.0, 0.0, num / prev_star)
        worst = max(worst, float(np.max(r)) if r.size else 0.0)
    rep_a = RatioReport(
        "davis_a", worst, 1.0, worst, {}, 8.0, "paper-constant"
    )
    lhs = lp_norm(to_multiset(p_variation(pair.h, 1)), p).value
    rhs = lp_norm(to_multiset(maximal(f, f.depth)), p).value
    rep_b = RatioReport(
        f"davis_b_p{p:g}", lhs, rhs, _ratio(lhs, rhs), {"p": p}, 4.0 + 4.0 * p, "paper-constant"
    )
    return [rep_a, rep_b]


def check_dual_doob(
    phis: Sequence[AdaptedFunction], p: float, cap: float | None = None
) -> RatioReport:
    """||sum E_{m-1} phi_m||_p against ||sum phi_m||_p for nonnegative phi_m."""
    if not phis:
        raise FiltrationError("empty sequence")
    tree = phis[0].tree
    num = np.zeros(tree.size(tree.depth))
    den = np.zeros(tree.size(tree.depth))
    for m, phi in enumerate(phis, start=1):
        if phi.level != m:
            raise FiltrationError(f"term {m} must live at level {m}")
        if np.any(phi.values < 0):
            raise FiltrationError("terms must be nonnegative")
        leaf = phi.on_leaves()
        den += leaf
        num += conditional_on_leaves(tree, leaf, m - 1)
    lhs = lp_norm(WeightedValueMultiset(num, tree.leaf_weights.copy()), p).value
    rhs = lp_norm(WeightedValueMultiset(den, tree.leaf_weights.copy()), p).value
    if p == 1:
        cap, kind = 1.0, "paper-constant"
    else:
        kind = "calibrated" if cap is not None else None
    return RatioReport(
        f"dual_doob_p{p:g}", lhs, rhs, _ratio(lhs, rhs), {"p": p}, cap, kind
    )


def check_khintchine_rosenthal(arg, p: float) -> RatioReport:
    """Sign-sum p-norm against the sequence-space side.

    A flat array of coefficients is read as lambda_k for the sign martingale
    (ratio against (sum lambda_k^2)^(1/2)); a list of (values, probs) pairs
    builds the product filtration of independent mean-zero summands and
    compares against the two-term side.
    """
    from .space import rademacher_martingale

    first = arg[0]
    if np.isscalar(first) or (isinstance(first, np.ndarray) and first.ndim == 0):
        lambdas = np.asarray(arg, dtype=np.float64)
        f = rademacher_martingale(lambdas)
        lhs = lp_norm(to_multiset(f.terminal), p).value
        rhs = float(np.sqrt(np.sum(lambdas ** 2)))
        return RatioReport("khintchine", lhs, rhs, _ratio(lhs, rhs), {"p": p})
    f, per_term = _product_martingale(arg)
    lhs = lp_norm(to_multiset(f.terminal), p).value
    l2 = math.sqrt(sum(m2 for m2, _ in per_term(2.0)))
    lp_term = sum(mp for mp, _ in per_term(p)) ** (1.0 / p)
    rhs = l2 + lp_term
    return RatioReport("rosenthal", lhs, rhs, _ratio(lhs, rhs), {"p": p})


def _product_martingale(variables):
    """Martingale of partial sums of independent mean-zero steps.

    Each variable is (values, probs); level k refines every atom into the
    k-th variable's outcomes, so the steps are genuinely independent.
    """
    from .space import FiltrationTree, martingale_from_terminal

    parents = []
    weights = np.array([1.0])
    sums = np.array([0.0])
    size = 1
    for values, probs in variables:
        values = np.asarray(values, dtype=np.float64)
        probs = np.asarray(probs, dtype=np.float64)
        if abs(float(np.dot(values, probs))) > 1e-12 * (1 + float(np.max(np.abs(values)))):
            raise FiltrationError("variables must have zero mean")
        if abs(float(probs.sum()) - 1.0) > 1e-12 or np.any(probs <= 0):
            raise FiltrationError("probabilities must be positive and sum to 1")
        b = len(values)
        parents.append(np.repeat(np.arange(size), b))
        weights = (weights[:, None] * probs[None, :]).ravel()
        sums = (sums[:, None] + values[None, :]).ravel()
        size *= b
    tree = FiltrationTree(parents, weights)
    f = martingale_from_terminal(AdaptedFunction(tree, tree.depth, sums))

    def per_term(q: float):
        out = []
        for values, probs in variables:
            v = np.asarray(values, dtype=np.float64)
            pr = np.asarray(probs, dtype=np.float64)
            out.append((float(np.dot(pr, np.abs(v) ** q)), None))
        return out

    return f, per_term


# ---------------------------------------------------------------------------
# proof traces


class _TraceData:
    """Leaf-level arrays shared by both proof traces.

    First-difference convention inside traces: df_1 is f_1 itself and the
    k = 1 terms of the alpha/beta/gamma split are identically zero; the
    explicit proof constants are only theorems under this reading.
    """

    def __init__(self, f: Martingale):
        if not f.is_nonnegative():
            raise FiltrationError("proof traces need a nonnegative martingale")
        self.f = f
        self.tree = f.tree
        self.n = f.depth
        self.w = f.tree.leaf_weights
        leaves = f.tree.size(f.depth)
        self.f_leaf = np.zeros((self.n + 1, leaves))
        for k in range(1, self.n + 1):
            self.f_leaf[k] = f.at(k).on_leaves()
        self.star = np.zeros((self.n + 1, leaves))
        for k in range(1, self.n + 1):
            self.star[k] = np.maximum(self.star[k - 1], np.abs(self.f_leaf[k]))
        self.df = np.zeros((self.n + 1, leaves))
        self.df[1] = self.f_leaf[1]
        for k in range(2, self.n + 1):
            self.df[k] = self.f_leaf[k] - self.f_leaf[k - 1]
        self.jump = self.star[1:] >= 2.0 * self.star[:-1]  # jump[k-1] = level-k set
        self.l1 = martingale_l1(f)

    def mu(self, mask: np.ndarray) -> float:
        return float(self.w[mask].sum())

    def cond(self, leaf_vals: np.ndarray, level: int) -> np.ndarray:
        return conditional_on_leaves(self.tree, leaf_vals, level)

    def beta_gamma(self, lam: float):
        """Trace-convention threshold differences; the k = 1 entries are zero."""
        n, leaves = self.n, self.f_leaf.shape[1]
        dbeta = np.zeros((n + 1, leaves))
        dgamma = np.zeros((n + 1, leaves))
        for k in range(2, n + 1):
            chi_b = self.star[k] <= lam
            chi_c = (self.star[k - 1] <= lam) & (lam < self.star[k])
            tb = np.where(chi_b, self.df[k], 0.0)
            tc = np.where(chi_c, self.df[k], 0.0)
            dbeta[k] = tb - self.cond(tb, k - 1)
            dgamma[k] = tc - self.cond(tc, k - 1)
        return dbeta, dgamma


def _paper_entry(name, value, bound, slack_rel=PAPER_SLACK_REL):
    return TraceEntry(name, value, bound, "paper-constant", slack_rel * (1.0 + abs(bound)))


def proof_trace_theorem_a(f: Martingale, lam: float) -> ProofTrace:
    """Step 1-3 quantities of the two-term weak estimate at one threshold."""
    if lam <= 0:
        raise FiltrationError("threshold must be positive")
    t = _TraceData(f)
    n, w = t.n, t.w
    l1 = t.l1

    chi2 = t.star[1:] <= 2.0 * lam  # chi2[k-1] = {f_k^* <= 2 lam}
    # A: telescoped square sums; the k = 1 term has no predecessor.
    a_val = float(np.dot(w, (t.f_leaf[1] * chi2[0]) ** 2))
    for k in range(2, n + 1):
        diff = t.f_leaf[k] * chi2[k - 1] - t.f_leaf[k - 1] * chi2[k - 2]
        a_val += float(np.dot(w, diff * diff))
    a_val *= 4.0 / lam
    # B: crossing strips of the 2*lam level sets.
    b_val = 0.0
    for k in range(2, n + 1):
        strip = chi2[k - 2] & ~chi2[k - 1]
        b_val += float(np.dot(w, (t.f_leaf[k - 1] ** 2) * strip))
    b_val *= 4.0 / lam

    # Phi and its weak bound at lam^2 (constant unspecified -> no cap).
    phi = np.zeros_like(t.f_leaf[0])
    for k in range(2, n + 1):
        chi_g = t.star[k] < 2.0 * t.star[k - 1]
        phi += t.cond(np.where(chi_g, t.df[k] ** 2, 0.0), k - 1)
    phi_weak = lam * t.mu(phi > lam * lam)

    # C and D: the two halves of the h-part at this threshold.
    s_c = np.abs(t.df[1]).copy()
    s_d = np.zeros_like(s_c)
    for k in range(2, n + 1):
        jk = np.where(t.jump[k - 1], t.df[k], 0.0)
        s_c += np.abs(jk)
        s_d += np.abs(t.cond(jk, k - 1))
    c_val = 2.0 * lam * t.mu(s_c > lam)
    d_val = 2.0 * lam * t.mu(s_d > lam)

    # Gundy-split majorants of D.
    dbeta, dgamma = t.beta_gamma(lam)
    s_alpha = np.zeros_like(s_c)
    s_beta = np.zeros_like(s_c)
    s_gamma = np.zeros_like(s_c)
    for k in range(2, n + 1):
        pred = t.star[k - 1] > lam
        s_alpha += pred * t.cond(np.abs(t.df[k]) * t.jump[k - 1], k - 1)
        s_beta += t.cond(np.abs(dbeta[k]) * t.jump[k - 1], k - 1)
        s_gamma += t.cond(np.abs(dgamma[k]) * t.jump[k - 1], k - 1)
    d_alpha = lam * t.mu(s_alpha > lam / 3.0)
    d_beta = lam * t.mu(s_beta > lam / 3.0)
    d_gamma = lam * t.mu(s_gamma > lam / 3.0)
    doob = lam * t.mu(t.star[n] > lam)

    # Step 3: geometric sup bounds and the square-root split.
    sqrt_lam = math.sqrt(lam)
    e_sum = np.zeros_like(s_c)
    f_sum = np.zeros_like(s_c)
    lin_sum = np.zeros_like(s_c)
    for k in range(1, n + 1):
        jk = t.jump[k - 1]
        e_sum += np.sqrt(t.star[k]) * (t.star[k] <= lam) * jk
        f_sum += np.sqrt(t.star[k - 1]) * (t.star[k - 1] <= lam) * jk
        lin_sum += np.sqrt(np.abs(dbeta[k])) * jk
    e_val = float(e_sum.max())
    f_val = float(f_sum.max())
    lin_val = float(lin_sum.max())

    entries = (
        TraceEntry("lambda_mu_phi", phi_weak),
        _paper_entry("A", a_val, 24.0 * l1, PAPER_SLACK_REL),
        _paper_entry("B", b_val, 8.0 * l1, PAPER_SLACK_REL),
        _paper_entry("C", c_val, 8.0 * l1, PAPER_SLACK_REL),
        TraceEntry("D", d_val),
        _paper_entry("D_alpha", d_alpha, doob, EXACT_SLACK_REL),
        TraceEntry("D_beta", d_beta),
        TraceEntry("D_gamma", d_gamma),
        _paper_entry("doob", doob, l1, EXACT_SLACK_REL),
        _paper_entry("E", e_val, STEP3_CONSTANT * sqrt_lam, EXACT_SLACK_REL),
        _paper_entry("F", f_val, STEP3_CONSTANT * sqrt_lam, EXACT_SLACK_REL),
        _paper_entry(
            "linfty_lhs", lin_val, 2.0 * math.sqrt(2.0) * STEP3_CONSTANT * sqrt_lam, EXACT_SLACK_REL
        ),
    )
    return ProofTrace("theorem_a", lam, l1, entries)


def proof_trace_theorem_b(f: Martingale, lam: float) -> ProofTrace:
    """Step 1-3 quantities of the diagonal-term estimate at one threshold."""
    if lam <= 0:
        raise FiltrationError("threshold must be positive")
    t = _TraceData(f)
    n, w = t.n, t.w
    l1 = t.l1
    dbeta, _ = t.beta_gamma(lam)

    beta_sup = float(np.max(np.abs(dbeta))) if dbeta.size else 0.0
    beta_l2sq = float(sum(np.dot(w, dbeta[k] ** 2) for k in range(2, n + 1)))

    step2 = 0.0
    beta_count = 0.0
    alpha_count = 0.0
    for k in range(1, n + 1):
        hot = t.jump[k - 1] & (t.star[k - 1] > lam)
        step2 += t.mu(hot)
        beta_count += t.mu(np.abs(dbeta[k]) * t.jump[k - 1] > lam)
        alpha_count += t.mu(t.cond(np.abs(t.df[k]) * hot, k - 1) > lam)
    step2 *= lam
    beta_count *= lam
    alpha_count *= lam
    k_reg = regularity_constant(f.tree)

    entries = (
        _paper_entry("beta_sup", beta_sup, 4.0 * lam, EXACT_SLACK_REL),
        _paper_entry("step2_count", step2, 2.0 * l1, EXACT_SLACK_REL),
        _paper_entry("beta_count", beta_count, 4.0 * beta_l2sq / lam, EXACT_SLACK_REL),
        _paper_entry("alpha_count", alpha_count, 2.0 * k_reg * l1, EXACT_SLACK_REL),
        TraceEntry("beta_l2sq_over_lam", beta_l2sq / lam),
    )
    return ProofTrace("theorem_b", lam, l1, entries)


# ---------------------------------------------------------------------------
# counterexamples


def harmonic_number(m: int) -> float:
    return math.fsum(1.0 / k for k in range(1, m + 1))


@dataclass(frozen=True)
class CounterexampleReport:
    """The four weak quasinorms separating the two diagonal readings."""

    m: int
    phi_sum_weak: float
    phi_diag_weak: float
    xi_sum_weak: float
    xi_diag_weak: float

    def as_rows(self) -> list[tuple[str, float]]:
        return [
            ("phi_sum_weak", self.phi_sum_weak),
            ("phi_diag_weak", self.phi_diag_weak),
            ("xi_sum_weak", self.xi_sum_weak),
            ("xi_diag_weak", self.xi_diag_weak),
        ]


def counterexample_report(m: int) -> CounterexampleReport:
    """Evaluate both weak norms on the indicator and reciprocal families.

    The exact values are (1, H_m, H_m, 1): the two functionals swap which
    family they see as large.
    """
    from .space import phi_family, xi_family

    if m < 2:
        raise FiltrationError("need at least two terms")
    out = []
    for tree, seq in (phi_family(m), xi_family(m)):
        total = np.zeros(tree.size(1))
        for term in seq.terms:
            total = total + term.values
        out.append(_weak(to_multiset(AdaptedFunction(tree, 1, total))))
        out.append(_weak(diagonal_multiset(seq)))
    return CounterexampleReport(m, out[0], out[1], out[2], out[3])


@dataclass(frozen=True)
class CwikelReport:
    """Partial-sum growth separating the intersection space from L_p.

    lp_sums diverges in the truncation while a1_sums stays bounded; the
    first coordinate norm is exactly 1 at every truncation.
    """

    p: float
    alpha: float
    checkpoints: tuple[int, ...]
    f1_a0_norm: float
    lp_sums: tuple[float, ...]
    a1_sums: tuple[float, ...]
    lp_growth_ratio: float
    ratio_threshold: float

    @property
    def diverging(self) -> bool:
        return self.lp_growth_ratio > self.ratio_threshold


def cwikel_report(
    p: float,
    alpha: float,
    checkpoints: Sequence[int] = (10 ** 3, 10 ** 6),
    ratio_threshold: float = 1.1,
) -> CwikelReport:
    """Discretized hyperbola region: indicator norm and truncated sums.

    Requires p*alpha < 1 < 2*alpha so that the square sum converges while
    the p-th power sum diverges.  The growth ratio compares the p-sum at the
    last checkpoint with the one a factor of ten earlier.
    """
    if not (p * alpha < 1.0 < 2.0 * alpha):
        raise FiltrationError("parameters must satisfy p*alpha < 1 < 2*alpha")
    checkpoints = tuple(sorted(int(c) for c in checkpoints))
    if checkpoints[0] < 10:
        raise FiltrationError("truncations below 10 are meaningless here")
    big_k = checkpoints[-1]
    k = np.arange(1, big_k + 1, dtype=np.float64)
    log_term = 1.0 + np.log(k)
    lp_terms = 1.0 / (k * log_term ** (p * alpha))
    a1_terms = 1.0 / (k * log_term ** (2.0 * alpha))
    lp_cum = np.cumsum(lp_terms)
    a1_cum = np.cumsum(a1_terms)
    lp_sums = tuple(float(lp_cum[c - 1]) for c in checkpoints)
    a1_sums = tuple(float(a1_cum[c - 1]) for c in checkpoints)
    # row sums of the indicator over the strip heights follow the hyperbola
    js = np.arange(1, big_k, dtype=np.float64)
    weights = np.concatenate([1.0 / (js * (js + 1.0)), [1.0 / big_k]])
    values = np.arange(1, big_k + 1, dtype=np.float64)
    f1_norm = _weak(WeightedValueMultiset(values, weights))
    growth = float(lp_cum[-1] / lp_cum[big_k // 10 - 1])
    return CwikelReport(
        p, alpha, checkpoints, f1_norm, lp_sums, a1_sums, growth, ratio_threshold
    )


# ---------------------------------------------------------------------------
# corpus suite


@dataclass(frozen=True)
class SuiteRow:
    instance: str
    check: str
    lam: float | None
    lhs: float
    rhs: float
    ratio: float
    cap: float | None
    cap_kind: str | None
    passed: bool | None


@dataclass(frozen=True)
class SuiteSummary:
    check: str
    count: int
    max_ratio: float
    median_ratio: float
    worst_instance: str
    worst_lam: float | None
    cap: float | None
    cap_kind: str | None
    all_passed: bool


@dataclass(frozen=True)
class SuiteResult:
    rows: tuple[SuiteRow, ...]
    summaries: tuple[SuiteSummary, ...]

    @property
    def paper_caps_pass(self) -> bool:
        return all(r.passed for r in self.rows if r.cap_kind == "paper-constant")

    def summary(self, check: str) -> SuiteSummary:
        for s in self.summaries:
            if s.check == check:
                return s
        raise KeyError(check)


ACCEPTANCE_CORPUS: tuple[CorpusSpec, ...] = (
    CorpusSpec("dyadic", depth=6, value_dist="lognormal", count=40, base_seed=11060),
    CorpusSpec("dyadic", depth=6, value_dist="normal", count=40, base_seed=11061),
    CorpusSpec("random-tree", depth=5, max_branching=3, skew=0.35, value_dist="lognormal", count=30, base_seed=11062),
    CorpusSpec("random-tree", depth=4, max_branching=4, skew=0.7, value_dist="normal", count=25, base_seed=11063),
    CorpusSpec("rademacher", depth=7, value_dist="normal", count=25, base_seed=11064),
)

DOUBLING_CORPUS_SHALLOW: tuple[CorpusSpec, ...] = (
    CorpusSpec("dyadic", depth=6, value_dist="lognormal", count=120, base_seed=12060),
    CorpusSpec("dyadic", depth=6, value_dist="normal", count=120, base_seed=12061),
)

DOUBLING_CORPUS_DEEP: tuple[CorpusSpec, ...] = tuple(
    s.with_(depth=12) for s in DOUBLING_CORPUS_SHALLOW
)

LAMBDA_FREE_CHECKS = (
    "theorem_a",
    "theorem_b",
    "theorem_b_regular",
    "corollary_c",
    "burkholder_p2",
    "burkholder_p3",
    "burkholder_p4",
    "davis_p1",
    "davis_p2",
    "davis_p3",
    "dual_doob_p1",
    "dual_doob_p2",
    "dual_doob_p3",
    "khintchine_p2",
    "khintchine_p4",
)

LAMBDA_CHECKS = ("gundy", "trace_a", "trace_b")

DEFAULT_CHECKS = LAMBDA_FREE_CHECKS + LAMBDA_CHECKS


def instance_id(spec: CorpusSpec, index: int) -> str:
    tag = spec.kind if spec.kind != "random-tree" else f"rtree{spec.max_branching}"
    return f"{tag}-d{spec.depth}-{spec.value_dist}-s{spec.base_seed}-{index:03d}"


def _positive_targets(f: Martingale, ident: str):
    """Trace targets: f itself when nonnegative, else its two positive parts."""
    if f.is_nonnegative():
        return [(ident, f)]
    pos, neg = krickeberg(f)
    out = []
    if martingale_l1(pos) > 0:
        out.append((ident + "+", pos))
    if martingale_l1(neg) > 0:
        out.append((ident + "-", neg))
    return out


def _rows_from_report(ident: str, rep: RatioReport, lam: float | None = None) -> SuiteRow:
    return SuiteRow(
        ident, rep.check, lam, rep.lhs, rep.rhs, rep.ratio, rep.cap, rep.cap_kind, rep.passed
    )


def _trace_rows(ident: str, trace: ProofTrace) -> list[SuiteRow]:
    rows = []
    for e in trace.entries:
        ratio = _ratio(e.value, e.bound) if e.bound else (0.0 if e.value == 0 else math.inf)
        if e.bound is None:
            # record raw value against ||f||_1 so calibration has a scale
            denom = trace.f_l1
            ratio = _ratio(e.value, denom)
            rows.append(
                SuiteRow(ident, f"{trace.kind}:{e.name}", trace.lam, e.value, denom, ratio, None, None, None)
            )
        else:
            rows.append(
                SuiteRow(
                    ident, f"{trace.kind}:{e.name}", trace.lam, e.value, e.bound,
                    ratio, 1.0, e.bound_kind, e.passed,
                )
            )
    return rows


def _instance_rows(spec: CorpusSpec, index: int, checks, caps: dict) -> list[SuiteRow]:
    ident = instance_id(spec, index)
    tree, obj = generate(spec, index)
    if not isinstance(obj, Martingale):
        return []
    f = obj
    rows: list[SuiteRow] = []
    lam_grid = dyadic_lambda_grid(f)

    if "theorem_a" in checks:
        rows.append(_rows_from_report(ident, check_theorem_a(f, cap=caps.get("theorem_a"))))
    if "theorem_b" in checks:
        rows.append(_rows_from_report(ident, check_theorem_b(f, cap=caps.get("theorem_b"))))
    if "theorem_b_regular" in checks:
        rep = check_theorem_b(f, decomposition="regular", cap=caps.get("theorem_b_regular"))
        rows.append(SuiteRow(ident, "theorem_b_regular", None, rep.lhs, rep.rhs, rep.ratio, rep.cap, rep.cap_kind, rep.passed))
    if "corollary_c" in checks:
        rows.append(_rows_from_report(ident, check_corollary_c(f, cap=caps.get("corollary_c"))))
    for p in (2, 3, 4):
        if f"burkholder_p{p}" in checks:
            two = check_burkholder_p(
                f, p,
                caps=(caps.get(f"burkholder_p{p}_low"), caps.get(f"burkholder_p{p}_high"))
                if f"burkholder_p{p}_low" in caps or f"burkholder_p{p}_high" in caps
                else None,
            )
            rows.append(_rows_from_report(ident, two.low))
            rows.append(_rows_from_report(ident, two.high))
    for p in (1, 2, 3):
        if f"davis_p{p}" in checks:
            for rep in check_davis_properties(f, p):
                if rep.check == "davis_a" and p != 1:
                    continue  # the 8-bound is p-independent; emit once
                rows.append(_rows_from_report(ident, rep))
    for p in (1, 2, 3):
        if f"dual_doob_p{p}" in checks:
            phis = tuple(
                AdaptedFunction(tree, d.level, np.abs(d.values)) for d in differences(f)
            )
            rows.append(
                _rows_from_report(ident, check_dual_doob(phis, p, cap=caps.get(f"dual_doob_p{p}")))
            )
    if spec.kind == "rademacher":
        lambdas = np.array([float(d.values[0]) for d in differences(f)])
        for p in (2, 4):
            if f"khintchine_p{p}" in checks:
                rep = check_khintchine_rosenthal(lambdas, p)
                cap = 1.0 if p == 2 else caps.get("khintchine_p4")
                kind = "paper-constant" if p == 2 else ("calibrated" if cap else None)
                rows.append(
                    SuiteRow(ident, f"khintchine_p{p}", None, rep.lhs, rep.rhs, rep.ratio,
                             cap, kind,
                             (rep.ratio <= cap + PAPER_SLACK_REL * (1 + cap)) if cap else None)
                )

    if "gundy" in checks:
        for lam in lam_grid:
            for rep in check_gundy_properties(f, lam, caps=caps):
                rows.append(_rows_from_report(ident, rep, lam))
    if "trace_a" in checks or "trace_b" in checks:
        for pid, part in _positive_targets(f, ident):
            part_grid = dyadic_lambda_grid(part)
            for lam in part_grid:
                if "trace_a" in checks:
                    rows.extend(_trace_rows(pid, proof_trace_theorem_a(part, lam)))
                if "trace_b" in checks:
                    rows.extend(_trace_rows(pid, proof_trace_theorem_b(part, lam)))
    return rows


def run_suite(
    corpora: Sequence[CorpusSpec],
    checks: Sequence[str] = DEFAULT_CHECKS,
    caps: dict | None = None,
    jobs: int = 0,
) -> SuiteResult:
    """Evaluate the checks on every corpus instance, in parallel, deterministically.

    Rows are merged in (instance, check, lambda) order after the parallel
    map, so the output is independent of the worker count.
    """
    checks = tuple(checks)
    known = set(DEFAULT_CHECKS)
    for c in checks:
        if c not in known:
            raise FiltrationError(f"unknown check {c!r}")
    caps = dict(caps or {})
    tasks = [(spec, i) for spec in corpora for i in range(spec.count)]
    if not checks or not tasks:
        return SuiteResult((), ())
    workers = jobs if jobs > 0 else min(8, len(tasks)) or 1

    def work(task):
        spec, i = task
        return _instance_rows(spec, i, checks, caps)

    if workers == 1:
        chunks = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, tasks))
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.instance, r.check, r.lam if r.lam is not None else -1.0))

    by_check: dict[str, list[SuiteRow]] = {}
    for r in rows:
        by_check.setdefault(r.check, []).append(r)
    summaries = []
    for check in sorted(by_check):
        grp = by_check[check]
        worst = max(grp, key=lambda r: r.ratio)
        ratios = [r.ratio for r in grp]
        summaries.append(
            SuiteSummary(
                check, len(grp), worst.ratio, float(statistics.median(ratios)),
                worst.instance, worst.lam, worst.cap, worst.cap_kind,
                all(r.passed for r in grp if r.passed is not None),
            )
        )
    return SuiteResult(tuple(rows), tuple(summaries))


_CALIBRATED_CHECKS = (
    "theorem_a",
    "theorem_b",
    "theorem_b_regular",
    "corollary_c",
    "burkholder_p2_low", "burkholder_p2_high",
    "burkholder_p3_low", "burkholder_p3_high",
    "burkholder_p4_low", "burkholder_p4_high",
    "dual_doob_p2", "dual_doob_p3",
    "khintchine_p4",
    "gundy_ii_a", "gundy_ii_b", "gundy_iii",
    "theorem_a:lambda_mu_phi", "theorem_a:D", "theorem_a:D_beta", "theorem_a:D_gamma",
    "theorem_b:beta_l2sq_over_lam",
)


def calibrate(corpora: Sequence[CorpusSpec] = ACCEPTANCE_CORPUS, jobs: int = 0) -> dict:
    """Corpus maxima for every unspecified constant, with their witnesses."""
    result = run_suite(corpora, DEFAULT_CHECKS, caps=None, jobs=jobs)
    caps = {}
    for s in result.summaries:
        if s.check in _CALIBRATED_CHECKS:
            caps[s.check] = {
                "cap": s.max_ratio,
                "witness": s.worst_instance,
                "lam": s.worst_lam,
                "provenance": "calibrated",
            }
    return caps
