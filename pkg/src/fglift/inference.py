"""Exact marginal inference and distribution comparison.

Variable elimination works on the factor tables directly: evidence is
indexed out, every non-query variable is summed out of the product of the
factors touching it, and the final vector over the query is normalised.
Two elimination orders are available, the greedy min-degree heuristic
(default) and reverse lexicographic id order; both must agree, which the
tests exploit.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import log
from typing import Mapping

import numpy as np

from .errors import (
    DomainMismatch,
    InconsistentEvidence,
    InfiniteDivergence,
    UnknownFactorPresent,
)
from .model import FactorGraph
from .colours import Grouping

_ORDERS = ("min_degree", "reverse_id")


@dataclass(frozen=True)
class Marginal:
    """A distribution over one RV, probabilities aligned with its range."""

    rv: str
    values: tuple[str, ...]
    probabilities: tuple[float, ...]


def _reduced_factors(
    fg: FactorGraph, evidence: dict[str, str]
) -> list[tuple[tuple[str, ...], np.ndarray]]:
    work: list[tuple[tuple[str, ...], np.ndarray]] = []
    for f in fg.factors:
        assert f.table is not None
        idx: list[object] = []
        keep: list[str] = []
        for arg in f.args:
            if arg in evidence:
                idx.append(fg.rv(arg).range.index(evidence[arg]))
            else:
                idx.append(slice(None))
                keep.append(arg)
        arr = np.asarray(f.table.array[tuple(idx)], dtype=np.float64)
        if keep:
            work.append((tuple(keep), arr))
        elif float(arr) == 0.0:
            raise InconsistentEvidence(
                f"evidence zeroes out factor {f.id!r} entirely"
            )
    return work


def _product(
    a: tuple[tuple[str, ...], np.ndarray],
    b: tuple[tuple[str, ...], np.ndarray],
    sizes: Mapping[str, int],
) -> tuple[tuple[str, ...], np.ndarray]:
    a_vars, a_arr = a
    b_vars, b_arr = b
    union = list(a_vars) + [v for v in b_vars if v not in a_vars]
    axis = {v: i for i, v in enumerate(union)}

    def expand(vars_: tuple[str, ...], arr: np.ndarray) -> np.ndarray:
        order = sorted(range(len(vars_)), key=lambda i: axis[vars_[i]])
        arr = np.transpose(arr, order)
        shape = [1] * len(union)
        for i in order:
            shape[axis[vars_[i]]] = sizes[vars_[i]]
        return arr.reshape(shape)

    return tuple(union), expand(a_vars, a_arr) * expand(b_vars, b_arr)


def variable_elimination(
    fg: FactorGraph,
    query: str,
    evidence: Mapping[str, str] | None = None,
    order: str = "min_degree",
) -> Marginal:
    """Exact posterior marginal of ``query`` given evidence.

    Evidence stored on RVs and passed here are merged; a conflict between
    the two raises InconsistentEvidence, as does a distribution that is
    identically zero under the evidence. Querying an observed RV yields a
    point mass on its observed value.
    """
    if order not in _ORDERS:
        raise ValueError(f"order must be one of {_ORDERS}, got {order!r}")
    unknown = fg.unknown_factor_ids
    if unknown:
        raise UnknownFactorPresent(f"unknown factors present: {', '.join(unknown)}")
    rv = fg.rv(query)

    ev: dict[str, str] = {r.id: r.evidence for r in fg.rvs if r.evidence is not None}
    for k, v in (evidence or {}).items():
        target = fg.rv(k)
        if v not in target.range:
            raise ValueError(f"evidence {v!r} not in range of {k!r}")
        if k in ev and ev[k] != v:
            raise InconsistentEvidence(f"conflicting evidence for {k!r}: {ev[k]!r} vs {v!r}")
        ev[k] = v
    if query in ev:
        probs = tuple(1.0 if val == ev[query] else 0.0 for val in rv.range.values)
        return Marginal(query, rv.range.values, probs)

    sizes = {r.id: len(r.range) for r in fg.rvs}
    store: dict[int, tuple[tuple[str, ...], np.ndarray]] = dict(
        enumerate(_reduced_factors(fg, ev))
    )
    next_id = len(store)
    var_facs: dict[str, set[int]] = {}
    for fid, (vars_, _) in store.items():
        for v in vars_:
            var_facs.setdefault(v, set()).add(fid)

    remaining = {r.id for r in fg.rvs if r.id != query and r.id not in ev}
    static_order = sorted(remaining, reverse=True)

    def neighbour_count(v: str) -> int:
        seen: set[str] = set()
        for fid in var_facs.get(v, ()):
            seen.update(store[fid][0])
        seen.discard(v)
        return len(seen)

    while remaining:
        if order == "min_degree":
            v = min(remaining, key=lambda u: (neighbour_count(u), u))
        else:
            v = next(u for u in static_order if u in remaining)
        remaining.discard(v)
        touched = sorted(var_facs.pop(v, ()))
        if not touched:
            continue
        acc = store.pop(touched[0])
        for fid in touched[1:]:
            acc = _product(acc, store.pop(fid), sizes)
        for fid in touched:
            for u in set(acc[0]) | {v}:
                var_facs.get(u, set()).discard(fid)
        vars_, arr = acc
        axis = vars_.index(v)
        summed = arr.sum(axis=axis)
        new_vars = tuple(u for u in vars_ if u != v)
        if new_vars:
            store[next_id] = (new_vars, summed)
            for u in new_vars:
                var_facs.setdefault(u, set()).add(next_id)
            next_id += 1
        elif float(summed) == 0.0:
            raise InconsistentEvidence("distribution is identically zero under evidence")

    result = np.ones(sizes[query], dtype=np.float64)
    for vars_, arr in store.values():
        if vars_ == (query,):
            result = result * arr
        elif vars_:  # pragma: no cover - cannot happen once all others are eliminated
            raise RuntimeError(f"factor over {vars_} survived elimination")
    z = float(result.sum())
    if z <= 0.0 or not np.isfinite(z):
        raise InconsistentEvidence("distribution is identically zero under evidence")
    probs = tuple(float(x) for x in result / z)
    return Marginal(query, rv.range.values, probs)


def kld(p: Marginal, q: Marginal) -> float:
    """Kullback-Leibler divergence sum(p * ln(p/q)) in nats.

    Terms with p == 0 contribute nothing; p > 0 where q == 0 raises
    InfiniteDivergence; differing RVs or ranges raise DomainMismatch.
    """
    if p.rv != q.rv or p.values != q.values:
        raise DomainMismatch(
            f"marginals over {p.rv!r}/{p.values} and {q.rv!r}/{q.values} do not share a domain"
        )
    total = 0.0
    for pi, qi in zip(p.probabilities, q.probabilities):
        if pi == 0.0:
            continue
        if qi == 0.0:
            raise InfiniteDivergence(f"p has mass at a value where q has none ({p.rv!r})")
        total += pi * log(pi / qi)
    if -1e-12 < total < 0.0:
        return 0.0
    return total


def compression_ratio(grouping: Grouping, fg: FactorGraph) -> tuple[float, float]:
    """(RV classes / RVs, factor classes / factors); lower is more lifted."""
    return (
        len(grouping.rv_classes) / len(fg.rvs),
        len(grouping.factor_classes) / len(fg.factors),
    )
