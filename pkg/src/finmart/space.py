"""Finite filtered probability spaces.

A filtration is stored as a rooted measure tree: the atoms of the level-d
partition are the depth-d nodes, leaves carry the probability weights, and
every coarser atom's measure is the sum of its descendants' leaf weights.
Level 0 is the trivial sigma-algebra (a single root atom of measure 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

__all__ = [
    "FiltrationError",
    "FiltrationTree",
    "AdaptedFunction",
    "Martingale",
    "AdaptedSequence",
    "CorpusSpec",
    "build_filtration",
    "dyadic_tree",
    "uniform_tree",
    "chain_tree",
    "indicator",
    "conditional_expectation",
    "conditional_on_leaves",
    "martingale_from_terminal",
    "martingale_from_differences",
    "differences",
    "maximal",
    "regularity_constant",
    "homogeneity_constant",
    "rademacher_martingale",
    "phi_family",
    "xi_family",
    "instance_rng",
    "generate",
]

WEIGHT_TOL = 1e-12
TOWER_RTOL = 1e-9


class FiltrationError(ValueError):
    """Structural problem in a tree, adapted function or martingale."""


def _frozen(a) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


class FiltrationTree:
    """Rooted measure tree encoding a finite filtration of depth N.

    ``parents[d-1]`` maps each level-d atom to the index of its parent at
    level d-1 (level-1 atoms all point at the root, index 0).  Leaf weights
    must be strictly positive and sum to 1 within 1e-12.  Atom measures for
    every level are precomputed bottom-up and cached.
    """

    def __init__(self, parents: Sequence[Sequence[int]], leaf_weights: Sequence[float]):
        if len(parents) == 0:
            raise FiltrationError("tree needs depth >= 1")
        self.parents = tuple(np.asarray(p, dtype=np.intp) for p in parents)
        for p in self.parents:
            p.setflags(write=False)
        weights = np.asarray(leaf_weights, dtype=np.float64)
        self.depth = len(self.parents)
        sizes = [1] + [len(p) for p in self.parents]
        if any(s == 0 for s in sizes):
            raise FiltrationError("empty level")
        if len(weights) != sizes[-1]:
            raise FiltrationError(
                f"{len(weights)} leaf weights for {sizes[-1]} leaves"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise FiltrationError("leaf weights must be finite and strictly positive")
        total = float(weights.sum())
        if abs(total - 1.0) > WEIGHT_TOL:
            raise FiltrationError(f"leaf weights sum to {total!r}, expected 1")
        for d, p in enumerate(self.parents, start=1):
            if p.size and (p.min() < 0 or p.max() >= sizes[d - 1]):
                raise FiltrationError(f"parent index out of range at level {d}")
            # every atom one level up must have at least one child
            if np.unique(p).size != sizes[d - 1]:
                raise FiltrationError(f"childless atom at level {d - 1}")
        self.level_sizes = tuple(sizes)
        measures = [None] * (self.depth + 1)
        measures[self.depth] = weights
        for d in range(self.depth, 0, -1):
            measures[d - 1] = np.bincount(
                self.parents[d - 1], weights=measures[d], minlength=sizes[d - 1]
            )
        self.measures = tuple(_frozen(m) for m in measures)
        self.leaf_weights = self.measures[self.depth]

    def size(self, level: int) -> int:
        return self.level_sizes[level]

    def measure(self, level: int) -> np.ndarray:
        return self.measures[level]

    def leaf_index(self, level: int) -> np.ndarray:
        """Index of the level-d atom containing each leaf."""
        self.check_level(level)
        try:
            cache = self._leaf_index_cache
        except AttributeError:
            cache = {}
            self._leaf_index_cache = cache
        if level not in cache:
            idx = np.arange(self.size(self.depth))
            for d in range(self.depth, level, -1):
                idx = self.parents[d - 1][idx]
            idx.setflags(write=False)
            cache[level] = idx
        return cache[level]

    def check_level(self, level: int) -> None:
        if not 0 <= level <= self.depth:
            raise FiltrationError(f"level {level} outside 0..{self.depth}")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiltrationTree)
            and self.level_sizes == other.level_sizes
            and all(np.array_equal(a, b) for a, b in zip(self.parents, other.parents))
            and np.array_equal(self.leaf_weights, other.leaf_weights)
        )

    def __repr__(self) -> str:
        return f"FiltrationTree(depth={self.depth}, leaves={self.level_sizes[-1]})"


@dataclass(frozen=True)
class AdaptedFunction:
    """One real value per atom of a single filtration level."""

    tree: FiltrationTree
    level: int
    values: np.ndarray

    def __post_init__(self):
        self.tree.check_level(self.level)
        vals = _frozen(self.values)
        if vals.ndim != 1 or len(vals) != self.tree.size(self.level):
            raise FiltrationError(
                f"expected {self.tree.size(self.level)} values at level {self.level}"
            )
        if not np.all(np.isfinite(vals)):
            raise FiltrationError("values must be finite")
        object.__setattr__(self, "values", vals)

    def refine(self, level: int) -> np.ndarray:
        """Values broadcast to the atoms of a finer level (>= own level)."""
        if level < self.level:
            raise FiltrationError("refine only goes to finer levels")
        vals = self.values
        for d in range(self.level, level):
            vals = vals[self.tree.parents[d]]
        return vals

    def on_leaves(self) -> np.ndarray:
        return self.refine(self.tree.depth)


def indicator(tree: FiltrationTree, level: int, atoms) -> AdaptedFunction:
    """Characteristic function of a union of level atoms."""
    vals = np.zeros(tree.size(level))
    vals[np.asarray(atoms, dtype=np.intp)] = 1.0
    return AdaptedFunction(tree, level, vals)


def conditional_on_leaves(tree: FiltrationTree, leaf_values: np.ndarray, level: int) -> np.ndarray:
    """E_level of a leaf-valued function, broadcast straight back to the leaves."""
    idx = tree.leaf_index(level)
    sums = np.bincount(idx, weights=tree.leaf_weights * leaf_values, minlength=tree.size(level))
    return (sums / tree.measure(level))[idx]


def conditional_expectation(g: AdaptedFunction, d: int) -> AdaptedFunction:
    """Project onto the level-d partition by measure-weighted averaging.

    The value on a level-d atom A is sum(mu(a) g(a)) / mu(A) over the level-m
    descendants a of A; d = 0 yields the global mean as a constant.
    """
    tree = g.tree
    tree.check_level(d)
    if d > g.level:
        raise FiltrationError(f"target level {d} above function level {g.level}")
    vals = g.values * tree.measure(g.level)
    for lvl in range(g.level, d, -1):
        vals = np.bincount(tree.parents[lvl - 1], weights=vals, minlength=tree.size(lvl - 1))
    return AdaptedFunction(tree, d, vals / tree.measure(d))


@dataclass(frozen=True)
class Martingale:
    """Adapted sequence f_1..f_N with the tower property, plus f_0 = E f_1."""

    tree: FiltrationTree
    f0: float
    levels: tuple[AdaptedFunction, ...]

    def __post_init__(self):
        if len(self.levels) != self.tree.depth:
            raise FiltrationError("need one adapted function per level 1..N")
        for k, fk in enumerate(self.levels, start=1):
            if fk.tree is not self.tree and fk.tree != self.tree:
                raise FiltrationError("level function on a different tree")
            if fk.level != k:
                raise FiltrationError(f"function at position {k} has level {fk.level}")
        scale = max(1.0, max(float(np.max(np.abs(f.values))) for f in self.levels))
        tol = TOWER_RTOL * scale
        mean1 = float(conditional_expectation(self.levels[0], 0).values[0])
        if abs(mean1 - self.f0) > tol:
            raise FiltrationError(f"f0={self.f0!r} but E f_1={mean1!r}")
        for k in range(2, self.tree.depth + 1):
            proj = conditional_expectation(self.levels[k - 1], k - 1).values
            if np.max(np.abs(proj - self.levels[k - 2].values)) > tol:
                raise FiltrationError(f"tower property fails between levels {k} and {k - 1}")

    @property
    def depth(self) -> int:
        return self.tree.depth

    def at(self, k: int) -> AdaptedFunction:
        """f_k for k in 1..N; k = 0 gives the constant f_0."""
        if k == 0:
            return AdaptedFunction(self.tree, 0, np.array([self.f0]))
        return self.levels[k - 1]

    @property
    def terminal(self) -> AdaptedFunction:
        return self.levels[-1]

    def scaled(self, c: float) -> "Martingale":
        return Martingale(
            self.tree,
            c * self.f0,
            tuple(AdaptedFunction(self.tree, f.level, c * f.values) for f in self.levels),
        )

    def is_nonnegative(self) -> bool:
        return all(np.all(f.values >= 0) for f in self.levels)


@dataclass(frozen=True)
class AdaptedSequence:
    """A plain adapted sequence of functions, explicitly not a martingale.

    Used by the indicator and reciprocal families; martingale-only
    operations must reject these.
    """

    tree: FiltrationTree
    terms: tuple[AdaptedFunction, ...]
    is_martingale: bool = False


def martingale_from_terminal(x: AdaptedFunction) -> Martingale:
    """Close a terminal function into a martingale via f_k = E_k x."""
    tree = x.tree
    if x.level != tree.depth:
        raise FiltrationError("terminal values must live on the leaves")
    levels = tuple(conditional_expectation(x, k) for k in range(1, tree.depth))
    levels = levels + (x,)
    f0 = float(conditional_expectation(x, 0).values[0])
    return Martingale(tree, f0, levels)


def martingale_from_differences(
    tree: FiltrationTree, f0: float, diffs: Sequence[AdaptedFunction]
) -> Martingale:
    """Rebuild f_k = f_0 + sum_{j<=k} d_j; the d_j must be centered."""
    if len(diffs) != tree.depth:
        raise FiltrationError("need one difference per level")
    levels = []
    acc = np.array([f0])
    for k, d in enumerate(diffs, start=1):
        if d.level != k:
            raise FiltrationError(f"difference {k} has level {d.level}")
        prev = AdaptedFunction(tree, k - 1, acc)
        acc = prev.refine(k) + d.values
        levels.append(AdaptedFunction(tree, k, acc))
    return Martingale(tree, f0, tuple(levels))


def differences(f: Martingale) -> tuple[AdaptedFunction, ...]:
    """df_k = f_k - f_{k-1} with the parent value broadcast; df_1 = f_1 - f_0."""
    out = []
    prev = np.array([f.f0])
    for k in range(1, f.depth + 1):
        cur = f.at(k).values
        prev_up = AdaptedFunction(f.tree, k - 1, prev).refine(k)
        out.append(AdaptedFunction(f.tree, k, cur - prev_up))
        prev = cur
    return tuple(out)


def maximal(f: Martingale, n: int) -> AdaptedFunction:
    """Truncated maximal function max_{1<=k<=n} |f_k| on the level-n atoms.

    The convention f_0^* = 0 is adopted throughout: the running maximum
    starts empty, so the k = 1 term is |f_1| itself.
    """
    if not 1 <= n <= f.depth:
        raise FiltrationError(f"level {n} outside 1..{f.depth}")
    acc = np.abs(f.at(1).values)
    for k in range(2, n + 1):
        acc = acc[f.tree.parents[k - 1]]
        acc = np.maximum(acc, np.abs(f.at(k).values))
    return AdaptedFunction(f.tree, n, acc)


def regularity_constant(tree: FiltrationTree) -> float:
    """Least k such that every nonnegative martingale satisfies f_n <= k f_{n-1}.

    On an atomic filtration this is the worst reciprocal conditional
    probability max mu(parent)/mu(atom) over all non-root atoms.
    """
    worst = 1.0
    for d in range(1, tree.depth + 1):
        ratio = tree.measure(d - 1)[tree.parents[d - 1]] / tree.measure(d)
        worst = max(worst, float(ratio.max()))
    return worst


def homogeneity_constant(tree: FiltrationTree) -> float:
    """Least k with mu(supp E_{n-1} chi_A) <= k mu(A) for every level-n atom set A.

    Evaluated from the definition: for each atom the conditional expectation
    of its indicator is computed and the measure of its support compared to
    the atom's own measure.  Unions of atoms never beat single atoms (the
    ratio of sums is dominated by the largest single-atom ratio), so scanning
    atoms suffices; the exhaustive-union equivalence is exercised in tests.
    """
    worst = 1.0
    for d in range(1, tree.depth + 1):
        mu_d = tree.measure(d)
        mu_up = tree.measure(d - 1)
        for a in range(tree.size(d)):
            e = conditional_expectation(indicator(tree, d, [a]), d - 1)
            supp = float(mu_up[e.values > 0].sum())
            worst = max(worst, supp / float(mu_d[a]))
    return worst


# ---------------------------------------------------------------------------
# instance generators


def dyadic_tree(depth: int) -> FiltrationTree:
    """Uniform binary tree: level d has 2^d atoms of measure 2^-d."""
    parents = [np.arange(2 ** d) // 2 for d in range(1, depth + 1)]
    return FiltrationTree(parents, np.full(2 ** depth, 2.0 ** -depth))


def uniform_tree(depth: int, branching: int) -> FiltrationTree:
    parents = [np.arange(branching ** d) // branching for d in range(1, depth + 1)]
    return FiltrationTree(parents, np.full(branching ** depth, float(branching) ** -depth))


def chain_tree(depth: int) -> FiltrationTree:
    """Single-atom levels; the only 1-regular filtration shape."""
    return FiltrationTree([[0]] * depth, [1.0])


def build_filtration(parents, leaf_weights) -> FiltrationTree:
    """Validate level-wise parent assignments plus leaf weights into a tree."""
    return FiltrationTree(parents, leaf_weights)


def rademacher_martingale(lambdas: Sequence[float]) -> Martingale:
    """f_k = sum_{j<=k} lambda_j eps_j on the uniform dyadic tree of depth m.

    eps_j is the j-th coordinate sign: +1 on the left branch, -1 on the right.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64)
    m = len(lambdas)
    tree = dyadic_tree(m)
    levels = []
    acc = np.zeros(1)
    for k in range(1, m + 1):
        signs = 1.0 - 2.0 * (np.arange(2 ** k) % 2)
        acc = acc[np.arange(2 ** k) // 2] + lambdas[k - 1] * signs
        levels.append(AdaptedFunction(tree, k, acc))
    return Martingale(tree, 0.0, tuple(levels))


def phi_family(m: int) -> tuple[FiltrationTree, AdaptedSequence]:
    """Indicators phi_k = chi_{(0,1/k]} on the interval partition of depth 1.

    The level-1 atoms are (1/(k+1), 1/k] for k = 1..m-1 plus the tail
    (0, 1/m]; atom j (0-based) therefore lies inside (0, 1/k] iff j >= k-1.
    """
    if m < 1:
        raise FiltrationError("family size must be >= 1")
    ks = np.arange(1, m, dtype=np.float64)
    weights = np.concatenate([1.0 / ks - 1.0 / (ks + 1.0), [1.0 / m]])
    tree = FiltrationTree([np.zeros(m, dtype=np.intp)], weights)
    terms = []
    for k in range(1, m + 1):
        vals = np.zeros(m)
        vals[k - 1:] = 1.0
        terms.append(AdaptedFunction(tree, 1, vals))
    return tree, AdaptedSequence(tree, tuple(terms))


def xi_family(m: int) -> tuple[FiltrationTree, AdaptedSequence]:
    """Constants xi_k = 1/k on the one-atom space."""
    if m < 1:
        raise FiltrationError("family size must be >= 1")
    tree = FiltrationTree([[0]], [1.0])
    terms = tuple(AdaptedFunction(tree, 1, np.array([1.0 / k])) for k in range(1, m + 1))
    return tree, AdaptedSequence(tree, terms)


_GENERATOR_KINDS = ("dyadic", "random-tree", "rademacher", "phi-family", "xi-family")
_VALUE_DISTS = ("normal", "lognormal", "uniform", "sign")


@dataclass(frozen=True)
class CorpusSpec:
    """Deterministic description of a family of generated instances."""

    kind: str
    depth: int = 4
    max_branching: int = 2
    skew: float = 0.0
    value_dist: str = "lognormal"
    count: int = 1
    base_seed: int = 0
    family_size: int | None = None  # phi/xi families: number of terms

    def __post_init__(self):
        if self.kind not in _GENERATOR_KINDS:
            raise FiltrationError(f"unsupported generator kind {self.kind!r}")
        if self.count < 1 or self.depth < 1:
            raise FiltrationError("count and depth must be >= 1")
        if self.kind in ("dyadic", "random-tree") and self.max_branching < 2:
            raise FiltrationError("branching must be >= 2")
        if not 0.0 <= self.skew < 1.0:
            raise FiltrationError("skew must lie in [0, 1)")
        if self.value_dist not in _VALUE_DISTS:
            raise FiltrationError(f"unsupported value distribution {self.value_dist!r}")

    def with_(self, **kw) -> "CorpusSpec":
        return replace(self, **kw)


def instance_rng(base_seed: int, index: int) -> np.random.Generator:
    """Splittable per-instance RNG: PCG64 seeded by SeedSequence(base, spawn_key=(index,)).

    The (base seed, index) pair fully determines the stream, so corpus
    instances may be generated in parallel in any order.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=base_seed, spawn_key=(index,)))


def _draw(rng: np.random.Generator, dist: str, n: int) -> np.ndarray:
    if dist == "normal":
        return rng.standard_normal(n)
    if dist == "lognormal":
        return rng.lognormal(0.0, 1.0, n)
    if dist == "uniform":
        return rng.uniform(0.0, 1.0, n)
    return rng.choice(np.array([-1.0, 1.0]), n)


def _random_tree(rng: np.random.Generator, depth: int, max_branching: int, skew: float) -> FiltrationTree:
    parents = []
    size = 1
    for _ in range(depth):
        counts = rng.integers(2, max_branching + 1, size)
        parents.append(np.repeat(np.arange(size), counts))
        size = int(counts.sum())
    draws = rng.exponential(1.0, size)
    # skew -> 1 concentrates mass on few leaves (heavier power of the draws)
    weights = draws ** (1.0 / (1.0 - skew))
    weights = np.maximum(weights, 1e-9)
    weights /= weights.sum()
    return FiltrationTree(parents, weights)


def generate(spec: CorpusSpec, index: int):
    """Instance #index of the corpus: a (tree, martingale-or-sequence) pair.

    Deterministic function of (spec.base_seed, index) via the documented
    seed-splitting contract.
    """
    rng = instance_rng(spec.base_seed, index)
    if spec.kind == "dyadic":
        tree = dyadic_tree(spec.depth)
        x = _draw(rng, spec.value_dist, tree.size(tree.depth))
        return tree, martingale_from_terminal(AdaptedFunction(tree, tree.depth, x))
    if spec.kind == "random-tree":
        tree = _random_tree(rng, spec.depth, spec.max_branching, spec.skew)
        x = _draw(rng, spec.value_dist, tree.size(tree.depth))
        return tree, martingale_from_terminal(AdaptedFunction(tree, tree.depth, x))
    if spec.kind == "rademacher":
        lambdas = _draw(rng, spec.value_dist, spec.depth)
        mart = rademacher_martingale(lambdas)
        return mart.tree, mart
    m = spec.family_size if spec.family_size is not None else spec.depth
    if spec.kind == "phi-family":
        return phi_family(m)
    return xi_family(m)
