"""Oscillation-sum functionals over admissible cube families.

The central object is the K_p functional: the supremum, over countable
families of pairwise-disjoint admissible cubes, of

    ( sum_i gamma(Q_i) * osc_q(f, Q_i)^p )^(1/p)

with the q-oscillation osc_q(f, Q) = (mean_Q |f - f_Q|^q)^(1/q).  Every
computed sum is a certified lower bound for the supremum, and because each
family's total Gauss mass is at most 1 (a subprobability power mean), the
optimized value is nondecreasing in p and bounded by the single-cube
oscillation supremum, which the p-scan makes visible.

Candidate families come from dyadic forests grown under covering cubes;
the optimizer is an exact maximum-weight-antichain dynamic program on the
forest (a selected node excludes its descendants and ancestors), plus a
greedy-with-swaps heuristic for unstructured cube pools.  The BMO
comparison uses the same cube pool: the single-cube supremum dominates
every family sum, so the two estimates are directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .covering import Covering
from .fields import QuadratureSpec, ScalarField, gauss_average, l1_gamma_norm, oscillation, tail_profile
from .geometry import Cube, cubes_disjoint, gaussian_measure, is_admissible


# ---------------------------------------------------------------------------
# families and oscillation sums
# ---------------------------------------------------------------------------


def validate_family(cubes: Sequence[Cube], a: float) -> None:
    """Raise unless the cubes are pairwise disjoint and admissible at scale a."""
    for i, q in enumerate(cubes):
        if not is_admissible(q, a):
            raise ValueError(f"cube {i} (center {q.center}, side {q.side}) is not admissible")
        for j in range(i):
            if not cubes_disjoint(q, cubes[j]):
                raise ValueError(f"cubes {j} and {i} overlap")


def _check_exponents(p: float, q: float) -> None:
    if not p > 1.0:
        raise ValueError("exponent p must exceed 1")
    if not 1.0 <= q < p:
        raise ValueError("oscillation exponent q must satisfy 1 <= q < p")


def jnp_sum(
    f: ScalarField,
    cubes: Sequence[Cube],
    p: float,
    q: float,
    spec: QuadratureSpec,
    *,
    a: float | None = None,
) -> float:
    """Oscillation sum (sum gamma(Q) osc_q(f,Q)^p)^(1/p) for one family.

    When ``a`` is given the family is validated (pairwise disjoint,
    admissible); the returned value is then a certified lower bound for the
    K_p functional of f.
    """
    _check_exponents(p, q)
    if a is not None:
        validate_family(cubes, a)
    total = math.fsum(
        gaussian_measure(c) * oscillation(f, c, q, spec) ** p for c in cubes
    )
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# dyadic forests of candidate cubes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForestNode:
    """One cube in a dyadic subdivision forest."""

    cube: Cube
    depth: int
    children: tuple["ForestNode", ...]

    def iter_nodes(self) -> Iterable["ForestNode"]:
        yield self
        for child in self.children:
            yield from child.iter_nodes()


def _grow(cube: Cube, depth: int, budget: int, a: float) -> ForestNode | None:
    if not is_admissible(cube, a):
        return None
    if budget == 0:
        return ForestNode(cube, depth, ())
    kids = []
    for child in cube.dyadic_children():
        node = _grow(child, depth + 1, budget - 1, a)
        if node is not None:
            kids.append(node)
    return ForestNode(cube, depth, tuple(kids))


@dataclass(frozen=True)
class CandidateSet:
    """Forest of admissible cubes closed under the antichain DP.

    Every node is admissible at scale ``a`` and children are the dyadic
    halves of their parent, so any antichain of the forest is a valid
    disjoint family.
    """

    roots: tuple[ForestNode, ...]
    a: float
    depth: int

    def iter_nodes(self) -> Iterable[ForestNode]:
        for r in self.roots:
            yield from r.iter_nodes()

    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def cubes(self) -> list[Cube]:
        return [n.cube for n in self.iter_nodes()]


def make_candidates(covering: Covering, depth: int) -> CandidateSet:
    """Dyadic forest rooted at a disjoint subfamily of the covering's cubes.

    Shell cubes from slabs of different axes cross each other in dimension
    two and higher, so the covering is first thinned (deterministic
    first-fit in covering order) to a pairwise-disjoint root set; every
    antichain of the resulting forest is then a valid family.  Roots are
    admissible at the covering scale 2 sqrt(d) by construction; inadmissible
    descendants (there are none in practice, but the contract is enforced,
    not assumed) are dropped together with their subtrees.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    a = covering.admissibility
    kept: list[Cube] = []
    for _layer, cube in covering.all_cubes():
        if all(cubes_disjoint(cube, other) for other in kept):
            kept.append(cube)
    roots = []
    for cube in kept:
        node = _grow(cube, 0, depth, a)
        if node is not None:
            roots.append(node)
    return CandidateSet(tuple(roots), a, depth)


# ---------------------------------------------------------------------------
# maximum-weight antichain
# ---------------------------------------------------------------------------


def max_weight_antichain(
    roots: Sequence[ForestNode], weight_of: Callable[[ForestNode], float]
) -> tuple[float, tuple[ForestNode, ...]]:
    """Exact maximum-weight antichain of a forest (weights must be >= 0).

    best(node) = max(weight(node), sum of best over children); ties prefer
    the node itself, which keeps selections shallow and deterministic.
    """

    def best(node: ForestNode) -> tuple[float, tuple[ForestNode, ...]]:
        w = float(weight_of(node))
        if w < 0.0:
            raise ValueError("antichain weights must be nonnegative")
        if not node.children:
            return w, (node,)
        totals = [best(c) for c in node.children]
        child_total = math.fsum(t for t, _ in totals)
        if w >= child_total:
            return w, (node,)
        chosen: list[ForestNode] = []
        for _, picks in totals:
            chosen.extend(picks)
        return child_total, tuple(chosen)

    results = [best(r) for r in roots]
    total = math.fsum(t for t, _ in results)
    family: list[ForestNode] = []
    for _, picks in results:
        family.extend(picks)
    return total, tuple(family)


@dataclass(frozen=True)
class JnpEstimate:
    """A certified lower bound for a JN-type oscillation functional."""

    value: float
    p: float
    q: float
    family: tuple[Cube, ...]
    contributions: tuple[float, ...]
    method: str
    candidates: int

    def to_obj(self) -> dict:
        return {
            "value": self.value,
            "p": self.p,
            "q": self.q,
            "method": self.method,
            "candidates": self.candidates,
            "family": [
                {"center": list(c.center), "side": c.side, "weight": w}
                for c, w in zip(self.family, self.contributions)
            ],
        }


class _OscCache:
    """Memoizes gamma(Q) and osc_q(f, Q) per cube across optimizer passes."""

    def __init__(self, f: ScalarField, q: float, spec: QuadratureSpec) -> None:
        self.f = f
        self.q = q
        self.spec = spec
        self._data: dict[tuple, tuple[float, float]] = {}

    def stats(self, cube: Cube) -> tuple[float, float]:
        key = (cube.center, cube.side)
        hit = self._data.get(key)
        if hit is None:
            hit = (gaussian_measure(cube), oscillation(self.f, cube, self.q, self.spec))
            self._data[key] = hit
        return hit

    def weight(self, cube: Cube, p: float) -> float:
        gamma, osc = self.stats(cube)
        return gamma * osc**p


def maximize_jnp(
    f: ScalarField,
    candidates: CandidateSet,
    p: float,
    q: float,
    spec: QuadratureSpec,
    *,
    cache: _OscCache | None = None,
) -> JnpEstimate:
    """Best oscillation sum over all antichains of the candidate forest."""
    _check_exponents(p, q)
    cache = cache or _OscCache(f, q, spec)
    total, picks = max_weight_antichain(
        candidates.roots, lambda node: cache.weight(node.cube, p)
    )
    family = tuple(n.cube for n in picks)
    validate_family(family, candidates.a)
    weights = tuple(cache.weight(c, p) for c in family)
    return JnpEstimate(
        value=total ** (1.0 / p),
        p=p,
        q=q,
        family=family,
        contributions=weights,
        method="antichain-dp",
        candidates=candidates.node_count(),
    )


def maximize_jnp_pool(
    f: ScalarField,
    cubes: Sequence[Cube],
    p: float,
    q: float,
    spec: QuadratureSpec,
    a: float,
    *,
    max_passes: int = 50,
) -> JnpEstimate:
    """Greedy-plus-swaps heuristic for an unstructured (overlapping) pool.

    Greedily admits cubes by decreasing weight, then repeatedly swaps in any
    cube whose weight exceeds the total weight of the chosen cubes it
    conflicts with.  The result is a valid family, hence still a certified
    lower bound, without any optimality claim.
    """
    _check_exponents(p, q)
    for cube in cubes:
        if not is_admissible(cube, a):
            raise ValueError(f"pool cube (center {cube.center}) is not admissible")
    cache = _OscCache(f, q, spec)
    order = sorted(range(len(cubes)), key=lambda i: -cache.weight(cubes[i], p))
    chosen: list[int] = []
    for i in order:
        if all(cubes_disjoint(cubes[i], cubes[j]) for j in chosen):
            chosen.append(i)
    for _ in range(max_passes):
        improved = False
        for i in order:
            if i in chosen:
                continue
            conflicts = [j for j in chosen if not cubes_disjoint(cubes[i], cubes[j])]
            gain = cache.weight(cubes[i], p) - math.fsum(
                cache.weight(cubes[j], p) for j in conflicts
            )
            if gain > 0.0:
                chosen = [j for j in chosen if j not in conflicts]
                chosen.append(i)
                improved = True
        if not improved:
            break
    family = tuple(cubes[i] for i in sorted(chosen))
    validate_family(family, a)
    weights = tuple(cache.weight(c, p) for c in family)
    return JnpEstimate(
        value=math.fsum(weights) ** (1.0 / p),
        p=p,
        q=q,
        family=family,
        contributions=weights,
        method="greedy-swap",
        candidates=len(cubes),
    )


# ---------------------------------------------------------------------------
# BMO comparison and the p -> infinity scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BmoEstimate:
    """L^1 norm plus single-cube oscillation supremum over a cube pool."""

    value: float
    l1_term: float
    l1_tail_slack: float
    sup_term: float
    argmax_cube: Cube
    pool_size: int

    def to_obj(self) -> dict:
        return {
            "value": self.value,
            "l1_term": self.l1_term,
            "l1_tail_slack": self.l1_tail_slack,
            "sup_term": self.sup_term,
            "argmax_cube": {"center": list(self.argmax_cube.center), "side": self.argmax_cube.side},
            "pool_size": self.pool_size,
        }


def bmo_norm_estimate(
    f: ScalarField,
    candidates: CandidateSet,
    d: int,
    radius: float,
    spec: QuadratureSpec,
    *,
    q: float = 1.0,
) -> BmoEstimate:
    """Lower estimate of the BMO-type norm ||f||_L1 + sup_Q osc_q(f, Q).

    The supremum runs over the candidate pool (a lower bound for the true
    supremum over all admissible cubes); the L^1 term integrates over the
    box (-R, R)^d and logs the analytic tail bound as slack.
    """
    l1_est, slack = l1_gamma_norm(f, d, radius, spec)
    best = -math.inf
    best_cube: Cube | None = None
    for node in candidates.iter_nodes():
        osc = oscillation(f, node.cube, q, spec)
        if osc > best:
            best = osc
            best_cube = node.cube
    if best_cube is None:
        raise ValueError("candidate set is empty")
    return BmoEstimate(
        value=l1_est + best,
        l1_term=l1_est,
        l1_tail_slack=slack,
        sup_term=best,
        argmax_cube=best_cube,
        pool_size=candidates.node_count(),
    )


def p_limit_scan(
    f: ScalarField,
    candidates: CandidateSet,
    ps: Sequence[float],
    q: float,
    spec: QuadratureSpec,
) -> list[tuple[float, JnpEstimate]]:
    """Optimized oscillation sums along an increasing grid of exponents p.

    Oscillations are cached once (they depend on q only), so the scan costs
    one quadrature pass plus a cheap DP per exponent.  Because every family
    has total Gauss mass at most 1, the optimal value is nondecreasing in p
    and approaches the single-cube supremum as p grows.
    """
    ps_sorted = sorted(float(p) for p in ps)
    if ps_sorted != [float(p) for p in ps]:
        raise ValueError("exponent grid must be sorted increasing")
    cache = _OscCache(f, q, spec)
    return [(p, maximize_jnp(f, candidates, p, q, spec, cache=cache)) for p in ps_sorted]


# ---------------------------------------------------------------------------
# distribution tail exponent fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailFitReport:
    """Log-log fit of a centered distribution tail on one cube.

    ``c_estimate`` is the smallest constant C for which the sampled tails
    satisfy gamma({|f - f_Q| > s}) <= C (khat / s)^p across the fit window.
    Degenerate profiles (no tail mass inside the window) are reported, not
    raised.
    """

    field_id: str
    cube: Cube
    p: float
    khat: float
    sigmas: tuple[float, ...]
    tails: tuple[float, ...]
    window: tuple[int, int]
    slope: float | None
    c_estimate: float | None
    degenerate: bool

    def to_obj(self) -> dict:
        return {
            "field_id": self.field_id,
            "cube": {"center": list(self.cube.center), "side": self.cube.side},
            "p": self.p,
            "khat": self.khat,
            "sigmas": list(self.sigmas),
            "tails": list(self.tails),
            "window": list(self.window),
            "slope": self.slope,
            "c_estimate": self.c_estimate,
            "degenerate": self.degenerate,
        }


def jn_tail_fit(
    f: ScalarField,
    cube: Cube,
    p: float,
    spec: QuadratureSpec,
    sigmas: Sequence[float],
    khat: float,
    *,
    tail_floor: float = 1e-6,
) -> TailFitReport:
    """Fit the decay exponent of gamma({|f - f_Q| > sigma}) on one cube.

    The fit window keeps grid points whose tails lie strictly between
    ``tail_floor`` and gamma(Q)/2, discarding the saturated head and the
    noise-dominated extreme tail.  ``khat`` is a caller-supplied oscillation
    functional estimate used only to normalize c_estimate.
    """
    if not khat > 0.0:
        raise ValueError("khat must be positive")
    profile = tail_profile(f, cube, sigmas, spec)
    gq = gaussian_measure(cube)
    sig = np.asarray(profile.sigmas)
    tails = np.asarray(profile.tails)
    mask = (tails > tail_floor) & (tails < 0.5 * gq)
    idx = np.nonzero(mask)[0]
    if idx.size < 2:
        return TailFitReport(
            field_id=f.id,
            cube=cube,
            p=p,
            khat=khat,
            sigmas=profile.sigmas,
            tails=profile.tails,
            window=(0, 0),
            slope=None,
            c_estimate=None,
            degenerate=True,
        )
    lo, hi = int(idx[0]), int(idx[-1]) + 1
    xs = np.log(sig[lo:hi])
    ys = np.log(tails[lo:hi])
    slope = float(np.polyfit(xs, ys, 1)[0])
    c_est = float(np.max(sig[lo:hi] ** p * tails[lo:hi]) / khat**p)
    return TailFitReport(
        field_id=f.id,
        cube=cube,
        p=p,
        khat=khat,
        sigmas=profile.sigmas,
        tails=profile.tails,
        window=(lo, hi),
        slope=slope,
        c_estimate=c_est,
        degenerate=False,
    )


def tail_fit_sweep(
    f: ScalarField,
    cubes: Sequence[Cube],
    p: float,
    spec: QuadratureSpec,
    sigmas: Sequence[float],
    khat: float,
    **kwargs,
) -> list[TailFitReport]:
    """Tail fits across a family of cubes; degenerate cubes are kept in the
    report (flagged) so sweeps never hide them."""
    return [jn_tail_fit(f, c, p, spec, sigmas, khat, **kwargs) for c in cubes]
