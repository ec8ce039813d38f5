"""Brute-force numeric ground truth for small discrete models.

Expressions get random positive tables; the joint is the explicit product
over every configuration (guarded at 2^20).  Conditional independence is
then a direct check of p(A,B|S) = p(A|S) p(B|S), which lets every
graph-level answer be confirmed or refuted numerically:

* `check_global_markov` sweeps all singleton-pair queries over all
  conditioning sets and fails hard if a graph-implied independence does
  not hold numerically (soundness); implied dependencies that never show
  up numerically are only warned about, since random tables need not be
  faithful.
* `check_equivalence` instantiates two expressions with shared tables for
  designated terms and compares the conditional (or a marginal) they
  represent.

Normalizer terms are not random: they are computed as the actual
normalizing constants of their block's potentials, so the instantiated
product is a genuine chain-graph distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import ChainGraph
from .factorize import (
    FactorExpression,
    FactorTerm,
    PlateProduct,
    factorize_chain,
)
from .markov import CiQuery, implies_ci

MAX_JOINT_CONFIGS = 1 << 20
MAX_MARKOV_NODES = 8
DEFAULT_TOL = 1e-9
DEPENDENCE_THRESHOLD = 1e-6


class OracleError(ValueError):
    """Malformed request: missing tables, unknown variables, ratio input."""


class StateSpaceError(RuntimeError):
    """The requested enumeration exceeds the brute-force guards."""


@dataclass(frozen=True)
class TermTable:
    """A numeric table for one term; axes follow ``vars`` (given + head)."""

    vars: tuple[str, ...]
    table: np.ndarray


PotentialAssignment = dict[str, TermTable]


@dataclass(frozen=True)
class JointTable:
    vars: tuple[str, ...]
    table: np.ndarray

    def marginal(self, keep: Iterable[str]) -> "JointTable":
        keep_set = set(keep)
        unknown = keep_set - set(self.vars)
        if unknown:
            raise OracleError(f"unknown variables {sorted(unknown)} in marginal")
        drop = tuple(i for i, v in enumerate(self.vars) if v not in keep_set)
        return JointTable(
            tuple(v for v in self.vars if v in keep_set),
            self.table.sum(axis=drop) if drop else self.table,
        )

    def aligned(self, order: Sequence[str]) -> np.ndarray:
        if set(order) != set(self.vars) or len(order) != len(self.vars):
            raise OracleError("variable order does not match table")
        perm = [self.vars.index(v) for v in order]
        return np.transpose(self.table, perm)


def _domains_of(e: FactorExpression) -> dict[str, int]:
    if e.domains is None:
        raise OracleError("expression carries no domain sizes")
    return e.domains


def _require_ground(e: FactorExpression) -> None:
    if any(isinstance(it, PlateProduct) for it in e.items):
        raise OracleError("expression has unbound plate products; bind the plates first")
    if e.is_ratio or e.sum_out:
        raise OracleError("expression is a conditional ratio, not a plain product")


def _positive(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return rng.uniform(0.1, 1.0, size=shape)


def _term_shape(t: FactorTerm, domains: Mapping[str, int]) -> tuple[int, ...]:
    try:
        return tuple(domains[v] for v in t.vars)
    except KeyError as exc:
        raise OracleError(f"no domain size for variable {exc.args[0]!r}") from None


def assignment_from_rng(e: FactorExpression, rng: np.random.Generator) -> PotentialAssignment:
    """Tables for every term, keyed by the term's rendered name.

    Conditionals: positive rows normalized over the head.  Deltas: a random
    deterministic function (one-hot rows).  Potentials: uniform in
    [0.1, 1.0].  Normalizers: computed exactly from their group's
    potentials so each block's conditional sums to one.
    """
    _require_ground(e)
    domains = _domains_of(e)
    pa: PotentialAssignment = {}
    terms = e.terms

    for t in terms:
        shape = _term_shape(t, domains)
        if t.kind == "conditional":
            raw = _positive(rng, shape)
            table = raw / raw.sum(axis=tuple(range(len(t.given), len(shape))), keepdims=True)
        elif t.kind == "delta":
            given_shape = shape[: len(t.given)]
            head_sizes = shape[len(t.given) :]
            if len(head_sizes) != 1:
                raise OracleError("delta terms carry exactly one head variable")
            choice = rng.integers(0, head_sizes[0], size=given_shape)
            table = (np.arange(head_sizes[0]) == choice[..., None]).astype(float)
        elif t.kind == "potential":
            table = _positive(rng, shape)
        elif t.kind == "normalizer":
            continue  # computed below from the group's potentials
        else:
            raise OracleError(f"unknown term kind {t.kind!r}")
        pa[t.name()] = TermTable(t.vars, table)

    _compute_normalizers(e, pa, skip=frozenset())
    return pa


def _compute_normalizers(e: FactorExpression, pa: PotentialAssignment, skip: frozenset[str]) -> None:
    """(Re)derive each normalizer table as 1 / sum of its group's potential product."""
    domains = _domains_of(e)
    terms = e.terms
    for t in terms:
        if t.kind != "normalizer" or t.name() in skip:
            continue
        group = [u for u in terms if u.kind == "potential" and u.group == t.group]
        union = [v for v in e.order if any(v in u.vars for u in group) or v in t.vars]
        arr = np.ones(tuple(domains[v] for v in union))
        for u in group:
            arr = arr * _broadcast(pa[u.name()], union, domains)
        summed = arr.sum(axis=tuple(i for i, v in enumerate(union) if v not in t.vars))
        kept = [v for v in union if v in t.vars]
        inv = 1.0 / summed
        perm = [kept.index(v) for v in t.vars]
        pa[t.name()] = TermTable(t.vars, np.transpose(inv, perm) if perm else inv)


def random_assignment(e: FactorExpression, seed: int) -> PotentialAssignment:
    return assignment_from_rng(e, np.random.default_rng(seed))


def _broadcast(tt: TermTable, order: Sequence[str], domains: Mapping[str, int]) -> np.ndarray:
    """View a term table over the full variable order, ready to multiply."""
    missing = [v for v in tt.vars if v not in order]
    if missing:
        raise OracleError(f"term variable {missing[0]!r} missing from joint order")
    perm = sorted(range(len(tt.vars)), key=lambda i: order.index(tt.vars[i]))
    arr = np.transpose(tt.table, perm)
    shape = [domains[v] if v in tt.vars else 1 for v in order]
    return arr.reshape(shape)


def build_joint(e: FactorExpression, pa: PotentialAssignment) -> JointTable:
    """Explicit normalized joint over every variable the expression mentions."""
    _require_ground(e)
    domains = _domains_of(e)
    used: set[str] = set()
    for t in e.terms:
        used.update(t.vars)
    order = tuple(v for v in e.order if v in used)
    total = 1
    for v in order:
        total *= domains[v]
        if total > MAX_JOINT_CONFIGS:
            raise StateSpaceError(
                f"state space exceeds {MAX_JOINT_CONFIGS} configurations"
            )

    arr = np.ones(tuple(domains[v] for v in order))
    for t in e.terms:
        tt = pa.get(t.name())
        if tt is None:
            raise OracleError(f"no table assigned to term {t.name()}")
        if tuple(tt.vars) != t.vars:
            raise OracleError(f"table for {t.name()} has variables {tt.vars}, expected {t.vars}")
        expected = _term_shape(t, domains)
        if tuple(tt.table.shape) != expected:
            raise OracleError(f"table for {t.name()} has shape {tt.table.shape}, expected {expected}")
        arr = arr * _broadcast(tt, order, domains)
    s = float(arr.sum())
    if not np.isfinite(s) or s <= 0.0:
        raise OracleError("assignment yields a zero or non-finite joint")
    return JointTable(order, arr / s)


def ci_deviation(j: JointTable, q: CiQuery) -> float:
    """max over S-configs with p(S)>0 of max |p(A,B|S) - p(A|S) p(B|S)|."""
    a = tuple(sorted(q.a, key=j.vars.index))
    b = tuple(sorted(q.b, key=j.vars.index))
    s = tuple(sorted(q.s, key=j.vars.index))
    missing = (set(q.a) | set(q.b) | set(q.s)) - set(j.vars)
    if missing:
        raise OracleError(f"query variables {sorted(missing)} not in joint")
    m = j.marginal(a + b + s)
    arr = m.aligned(a + b + s)
    na = math.prod(arr.shape[: len(a)])
    nb = math.prod(arr.shape[len(a) : len(a) + len(b)])
    ns = math.prod(arr.shape[len(a) + len(b) :])
    p = arr.reshape(na, nb, ns)
    ps = p.sum(axis=(0, 1))
    pas = p.sum(axis=1)
    pbs = p.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.abs(p / ps - (pas[:, None, :] / ps) * (pbs[None, :, :] / ps))
    dev[:, :, ps <= 0.0] = 0.0
    return float(dev.max(initial=0.0))


def numeric_ci(j: JointTable, q: CiQuery, tol: float = DEFAULT_TOL) -> bool:
    return ci_deviation(j, q) <= tol


def conditional_deviation(
    j1: JointTable, j2: JointTable, head: Iterable[str], given: Iterable[str]
) -> float:
    """max |p1(head|given) - p2(head|given)| over configs both sides support."""
    head_t = tuple(head)
    given_t = tuple(given)
    order = head_t + given_t

    def cond(j: JointTable) -> tuple[np.ndarray, np.ndarray]:
        arr = j.marginal(order).aligned(order)
        nh = math.prod(arr.shape[: len(head_t)])
        p = arr.reshape(nh, -1)
        pg = p.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = p / pg
        return c, pg

    c1, g1 = cond(j1)
    c2, g2 = cond(j2)
    ok = (g1 > 0.0) & (g2 > 0.0)
    if not ok.any():
        return 0.0
    return float(np.abs(c1[:, ok] - c2[:, ok]).max(initial=0.0))


def marginal_deviation(j1: JointTable, j2: JointTable, on: Iterable[str]) -> float:
    order = tuple(on)
    m1 = j1.marginal(order).aligned(order)
    m2 = j2.marginal(order).aligned(order)
    return float(np.abs(m1 - m2).max(initial=0.0))


# -- global Markov sweep ------------------------------------------------------


@dataclass(frozen=True)
class QueryRecord:
    query: CiQuery
    implied: bool
    max_deviation: float
    sound: bool  # implied queries: deviation stayed within tol on every trial
    dependence_seen: bool  # non-implied queries: some trial deviated > threshold


@dataclass(frozen=True)
class MarkovReport:
    node_count: int
    trials: int
    seed: int
    tol: float
    dependence_threshold: float
    records: tuple[QueryRecord, ...]

    @property
    def violations(self) -> tuple[QueryRecord, ...]:
        return tuple(r for r in self.records if r.implied and not r.sound)

    @property
    def unconfirmed(self) -> tuple[QueryRecord, ...]:
        return tuple(r for r in self.records if not r.implied and not r.dependence_seen)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        implied = sum(1 for r in self.records if r.implied)
        lines = [
            f"global Markov check: {self.node_count} nodes, {len(self.records)} queries"
            f" ({implied} implied independent), {self.trials} trials, tol={self.tol:g}",
            f"soundness: {'ok' if self.ok else 'VIOLATED'} ({len(self.violations)} violations)",
        ]
        for r in self.violations:
            lines.append(f"  VIOLATION {r.query.text()} deviated {r.max_deviation:.3e}")
        n_unconf = len(self.unconfirmed)
        lines.append(
            f"completeness: {n_unconf} non-implied queries without observed dependence"
            f" > {self.dependence_threshold:g} (warning only)"
        )
        return "\n".join(lines)


def all_singleton_queries(g: ChainGraph) -> list[CiQuery]:
    """Every (a _||_ b | S) with singleton a, b and S over the remaining nodes."""
    names = g.node_names
    out: list[CiQuery] = []
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            rest = [v for v in names if v not in (a, b)]
            for mask in range(1 << len(rest)):
                s = frozenset(rest[k] for k in range(len(rest)) if mask >> k & 1)
                out.append(CiQuery(frozenset((a,)), frozenset((b,)), s))
    return out


def check_global_markov(
    g: ChainGraph,
    trials: int = 20,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    dependence_threshold: float = DEPENDENCE_THRESHOLD,
) -> MarkovReport:
    """Verify every implied independence numerically on random instantiations."""
    if len(g.node_names) > MAX_MARKOV_NODES:
        raise StateSpaceError(
            f"global Markov sweep is limited to {MAX_MARKOV_NODES} nodes, got {len(g.node_names)}"
        )
    if trials < 1:
        raise OracleError("trials must be positive")
    e = factorize_chain(g)
    queries = all_singleton_queries(g)
    implied = [implies_ci(g, q) for q in queries]
    max_dev = np.zeros(len(queries))

    for seq in np.random.SeedSequence(seed).spawn(trials):
        pa = assignment_from_rng(e, np.random.default_rng(seq))
        j = build_joint(e, pa)
        for k, q in enumerate(queries):
            d = ci_deviation(j, q)
            if d > max_dev[k]:
                max_dev[k] = d

    records = tuple(
        QueryRecord(
            query=q,
            implied=imp,
            max_deviation=float(max_dev[k]),
            sound=bool((not imp) or max_dev[k] <= tol),
            dependence_seen=bool(imp or max_dev[k] > dependence_threshold),
        )
        for k, (q, imp) in enumerate(zip(queries, implied))
    )
    return MarkovReport(len(g.node_names), trials, seed, tol, dependence_threshold, records)


# -- expression equivalence ---------------------------------------------------


@dataclass(frozen=True)
class EquivalenceReport:
    trials: int
    mode: str
    tol: float
    deviations: tuple[float, ...]

    @property
    def max_deviation(self) -> float:
        return max(self.deviations, default=0.0)

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tol

    def summary(self) -> str:
        return (
            f"equivalence ({self.mode}): {'ok' if self.ok else 'FAILED'} over"
            f" {self.trials} trials, max deviation {self.max_deviation:.3e} (tol {self.tol:g})"
        )


def check_equivalence(
    e1: FactorExpression,
    e2: FactorExpression,
    shared: Mapping[str, str] | None = None,
    trials: int = 20,
    seed: int = 0,
    mode: str = "conditional",
    tol: float = 1e-12,
) -> EquivalenceReport:
    """Compare what two expressions represent, sharing designated tables.

    ``shared`` maps term names of e1 to term names of e2; those terms are
    instantiated identically (they must range over the same variables).
    ``mode="conditional"`` compares p(free | given), requiring equal
    free/given sets; ``mode="marginal"`` compares the marginal over the
    variables both expressions mention.
    """
    _require_ground(e1)
    _require_ground(e2)
    shared = dict(shared or {})
    names1 = {t.name(): t for t in e1.terms}
    names2 = {t.name(): t for t in e2.terms}
    for k, v in shared.items():
        if k not in names1:
            raise OracleError(f"shared term {k!r} not in first expression")
        if v not in names2:
            raise OracleError(f"shared term {v!r} not in second expression")
        if names1[k].vars != names2[v].vars or names1[k].kind != names2[v].kind:
            raise OracleError(f"shared terms {k!r} and {v!r} have different signatures")

    if mode == "conditional":
        if e1.free_vars != e2.free_vars or e1.given_vars != e2.given_vars:
            raise OracleError("conditional comparison needs matching free/given variables")
        head = tuple(sorted(e1.free_vars, key=e1.sort_key))
        given = tuple(sorted(e1.given_vars, key=e1.sort_key))
    elif mode == "marginal":
        common = {v for t in e1.terms for v in t.vars} & {v for t in e2.terms for v in t.vars}
        head = tuple(v for v in e1.order if v in common)
        given = ()
    else:
        raise OracleError(f"unknown comparison mode {mode!r}")

    inverse = {v: k for k, v in shared.items()}
    devs: list[float] = []
    for seq in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(seq)
        pa1 = assignment_from_rng(e1, rng)
        pa2 = assignment_from_rng(e2, rng)
        for name2, name1 in inverse.items():
            pa2[name2] = pa1[name1]
        # a copied potential invalidates its group's computed normalizer
        _compute_normalizers(e2, pa2, skip=frozenset(inverse))
        j1 = build_joint(e1, pa1)
        j2 = build_joint(e2, pa2)
        if mode == "conditional":
            devs.append(conditional_deviation(j1, j2, head, given))
        else:
            devs.append(marginal_deviation(j1, j2, head))
    return EquivalenceReport(trials, mode, tol, tuple(devs))


# -- deterministic-node elimination, numerically ------------------------------


def _delta_value(tt: TermTable, given_values: tuple[int, ...]) -> int:
    row = tt.table[given_values]
    return int(np.argmax(row))


def eliminated_assignment(
    g: ChainGraph, g2: ChainGraph, pa: PotentialAssignment
) -> PotentialAssignment:
    """Tables for factorize_chain(g2), where g2 = eliminate_deterministic(g)
    and g is purely directed: each surviving node's table composes the
    original one with the deterministic functions it absorbed.  The result
    represents exactly the original marginal on the surviving nodes.
    """
    if not g.is_directed:
        raise OracleError("eliminated_assignment requires a purely directed graph")
    dets = set(g.deterministic_nodes())

    def value_of(x: str, env: dict[str, int]) -> int:
        if x in env:
            return env[x]
        if x not in dets:
            raise OracleError(f"value of non-deterministic node {x!r} is not determined")
        parents = g.sorted_nodes(g.parents(x))
        vals = tuple(value_of(p, env) for p in parents)
        name = f"delta({x}|{','.join(parents)})"
        env[x] = _delta_value(pa[name], vals)
        return env[x]

    out: PotentialAssignment = {}
    for y in g2.node_names:
        new_parents = g2.sorted_nodes(g2.parents(y))
        old_parents = g.sorted_nodes(g.parents(y))
        old_name = f"p({y}|{','.join(old_parents)})" if old_parents else f"p({y})"
        old = pa[old_name]
        dsize = g.attr(y).domain_size
        shape = tuple(g2.attr(p).domain_size for p in new_parents) + (dsize,)
        table = np.empty(shape)
        for idx in np.ndindex(shape[:-1]):
            env = dict(zip(new_parents, (int(i) for i in idx)))
            old_vals = tuple(value_of(p, env) for p in old_parents)
            table[idx] = old.table[old_vals]
        new_name = f"p({y}|{','.join(new_parents)})" if new_parents else f"p({y})"
        out[new_name] = TermTable(tuple(new_parents) + (y,), table)
    return out
