"""Factor graph model: random variables, factors, validation, exact joint.

A factor graph here is a bipartite structure of random variables and
factors. Every factor names the variables it touches in a fixed argument
order; a factor either carries a potential table or is *unknown* (arguments
known, potentials missing). The joint semantics over the known-only case is
the normalised product of all potential tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import prod
from typing import Iterable, Mapping

import numpy as np

from .errors import StateSpaceTooLarge, UnknownFactorPresent, UnknownNode
from .tables import PotentialTable

DEFAULT_STATE_CAP = 1 << 20


@dataclass(frozen=True, order=True)
class RangeSpec:
    """Ordered finite range of a random variable.

    Two ranges compare equal iff their ordered value lists are identical;
    the same labels in a different order are a different range.
    """

    values: tuple[str, ...]

    def __init__(self, values: Iterable[str]) -> None:
        vals = tuple(str(v) for v in values)
        if len(vals) < 2:
            raise ValueError("a range needs at least two values")
        if len(set(vals)) != len(vals):
            raise ValueError(f"range values must be distinct, got {vals}")
        if any(v == "" for v in vals):
            raise ValueError("range values must be non-empty strings")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def index(self, value: str) -> int:
        return self.values.index(value)

    def __contains__(self, value: object) -> bool:
        return value in self.values


BOOL_RANGE = RangeSpec(("false", "true"))


@dataclass(frozen=True)
class RandomVariable:
    id: str
    range: RangeSpec
    evidence: str | None = None


@dataclass(frozen=True)
class Factor:
    """A factor over an ordered argument list.

    ``table is None`` marks an unknown factor: its arguments are part of the
    graph structure but its potentials are missing.
    """

    id: str
    args: tuple[str, ...]
    table: PotentialTable | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def is_unknown(self) -> bool:
        return self.table is None


@dataclass(frozen=True)
class FactorGraph:
    rvs: tuple[RandomVariable, ...]
    factors: tuple[Factor, ...]
    _rv_by_id: dict = field(init=False, repr=False, compare=False)
    _factor_by_id: dict = field(init=False, repr=False, compare=False)
    _rv_factors: dict = field(init=False, repr=False, compare=False)

    def __init__(self, rvs: Iterable[RandomVariable], factors: Iterable[Factor]) -> None:
        object.__setattr__(self, "rvs", tuple(rvs))
        object.__setattr__(self, "factors", tuple(factors))
        rv_by_id: dict[str, RandomVariable] = {}
        for rv in self.rvs:
            rv_by_id.setdefault(rv.id, rv)
        factor_by_id: dict[str, Factor] = {}
        for f in self.factors:
            factor_by_id.setdefault(f.id, f)
        rv_factors: dict[str, list[str]] = {rv.id: [] for rv in self.rvs}
        for f in self.factors:
            for arg in dict.fromkeys(f.args):
                if arg in rv_factors:
                    rv_factors[arg].append(f.id)
        object.__setattr__(self, "_rv_by_id", rv_by_id)
        object.__setattr__(self, "_factor_by_id", factor_by_id)
        object.__setattr__(self, "_rv_factors", {k: tuple(v) for k, v in rv_factors.items()})

    # -- lookups ---------------------------------------------------------

    @property
    def rv_ids(self) -> tuple[str, ...]:
        return tuple(rv.id for rv in self.rvs)

    @property
    def factor_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.factors)

    def has_rv(self, rv_id: str) -> bool:
        return rv_id in self._rv_by_id

    def has_factor(self, factor_id: str) -> bool:
        return factor_id in self._factor_by_id

    def rv(self, rv_id: str) -> RandomVariable:
        try:
            return self._rv_by_id[rv_id]
        except KeyError:
            raise UnknownNode(f"no random variable {rv_id!r}") from None

    def factor(self, factor_id: str) -> Factor:
        try:
            return self._factor_by_id[factor_id]
        except KeyError:
            raise UnknownNode(f"no factor {factor_id!r}") from None

    def factors_of(self, rv_id: str) -> tuple[str, ...]:
        if rv_id not in self._rv_factors:
            raise UnknownNode(f"no random variable {rv_id!r}")
        return self._rv_factors[rv_id]

    def degree(self, rv_id: str) -> int:
        return len(self.factors_of(rv_id))

    @property
    def unknown_factor_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.factors if f.is_unknown)

    @property
    def is_complete(self) -> bool:
        return not self.unknown_factor_ids

    # -- derived graphs --------------------------------------------------

    def with_tables(self, tables: Mapping[str, PotentialTable]) -> "FactorGraph":
        """Copy of the graph with the given factors' tables replaced."""
        factors = tuple(
            replace(f, table=tables[f.id]) if f.id in tables else f for f in self.factors
        )
        return FactorGraph(self.rvs, factors)

    def with_evidence(self, evidence: Mapping[str, str | None]) -> "FactorGraph":
        """Copy of the graph with evidence set (or cleared via None) per RV."""
        for rv_id in evidence:
            if rv_id not in self._rv_by_id:
                raise UnknownNode(f"no random variable {rv_id!r}")
        rvs = []
        for rv in self.rvs:
            if rv.id in evidence:
                value = evidence[rv.id]
                if value is not None and value not in rv.range:
                    raise ValueError(
                        f"evidence {value!r} not in range of {rv.id!r}"
                    )
                rvs.append(replace(rv, evidence=value))
            else:
                rvs.append(rv)
        return FactorGraph(rvs, self.factors)


@dataclass(frozen=True)
class Violation:
    """One structural invariant violation found by validate()."""

    kind: str
    subject: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} [{self.subject}]: {self.detail}"


def validate(fg: FactorGraph) -> list[Violation]:
    """Check every structural invariant; returns all violations found.

    Covered: duplicate node ids, empty or repeating argument lists, dangling
    argument references, table shape mismatches, non-positive or non-finite
    entries, evidence outside the variable's range.
    """
    out: list[Violation] = []
    seen: set[str] = set()
    for rv in fg.rvs:
        if rv.id in seen:
            out.append(Violation("duplicate-id", rv.id, "node id used more than once"))
        seen.add(rv.id)
    for f in fg.factors:
        if f.id in seen:
            out.append(Violation("duplicate-id", f.id, "node id used more than once"))
        seen.add(f.id)

    rv_ids = {rv.id for rv in fg.rvs}
    for rv in fg.rvs:
        if rv.evidence is not None and rv.evidence not in rv.range:
            out.append(
                Violation(
                    "bad-evidence",
                    rv.id,
                    f"evidence {rv.evidence!r} not in range {rv.range.values}",
                )
            )

    for f in fg.factors:
        if not f.args:
            out.append(Violation("empty-args", f.id, "factor has no arguments"))
            continue
        if len(set(f.args)) != len(f.args):
            out.append(Violation("repeated-arg", f.id, f"arguments repeat: {f.args}"))
        dangling = [a for a in f.args if a not in rv_ids]
        for a in dangling:
            out.append(Violation("dangling-arg", f.id, f"argument {a!r} is not an RV"))
        if f.table is None:
            continue
        if dangling or len(set(f.args)) != len(f.args):
            continue
        expected = tuple(len(fg.rv(a).range) for a in f.args)
        if f.table.shape != expected:
            out.append(
                Violation(
                    "shape-mismatch",
                    f.id,
                    f"table shape {f.table.shape} != arg ranges {expected}",
                )
            )
            continue
        arr = f.table.array
        if not np.all(np.isfinite(arr)) or not np.all(arr > 0.0):
            bad = int(np.sum(~(np.isfinite(arr) & (arr > 0.0))))
            out.append(
                Violation(
                    "non-positive-potential",
                    f.id,
                    f"{bad} entr{'y' if bad == 1 else 'ies'} not strictly positive and finite",
                )
            )
    return out


@dataclass(frozen=True)
class BackgroundKnowledge:
    """Disjoint factor-id sets, one per named individual."""

    groups: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def from_dict(cls, groups: Mapping[str, Iterable[str]]) -> "BackgroundKnowledge":
        return cls(tuple((str(k), tuple(sorted(set(v)))) for k, v in groups.items()))

    @property
    def individual_ids(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.groups)

    def factors_of(self, individual: str) -> tuple[str, ...]:
        for k, v in self.groups:
            if k == individual:
                return v
        raise UnknownNode(f"no individual {individual!r}")

    def individual_of(self, factor_id: str) -> str | None:
        for k, v in self.groups:
            if factor_id in v:
                return k
        return None


def validate_background(fg: FactorGraph, bk: BackgroundKnowledge) -> list[Violation]:
    out: list[Violation] = []
    seen: dict[str, str] = {}
    for individual, fids in bk.groups:
        for fid in fids:
            if not fg.has_factor(fid):
                out.append(
                    Violation("bk-unknown-factor", individual, f"factor {fid!r} not in graph")
                )
            if fid in seen and seen[fid] != individual:
                out.append(
                    Violation(
                        "bk-overlap",
                        fid,
                        f"assigned to both {seen[fid]!r} and {individual!r}",
                    )
                )
            seen.setdefault(fid, individual)
    return out


def state_space_size(fg: FactorGraph) -> int:
    return prod(len(rv.range) for rv in fg.rvs)


def joint_distribution(fg: FactorGraph, cap: int = DEFAULT_STATE_CAP) -> np.ndarray:
    """Exact normalised joint over all RVs, axes in ``fg.rvs`` order.

    The joint is the normalised product of all factor tables; evidence
    stored on RVs does not restrict it (restriction is an inference-time
    concern). Raises UnknownFactorPresent if any factor lacks a table and
    StateSpaceTooLarge when the assignment count exceeds ``cap``.
    """
    unknown = fg.unknown_factor_ids
    if unknown:
        raise UnknownFactorPresent(f"unknown factors present: {', '.join(unknown)}")
    size = state_space_size(fg)
    if size > cap:
        raise StateSpaceTooLarge(f"{size} joint states exceed cap {cap}")
    axis_of = {rv.id: i for i, rv in enumerate(fg.rvs)}
    sizes = tuple(len(rv.range) for rv in fg.rvs)
    acc = np.ones(sizes, dtype=np.float64)
    for f in fg.factors:
        if len(set(f.args)) != len(f.args):
            raise ValueError(f"factor {f.id!r} repeats arguments")
        try:
            axes = [axis_of[a] for a in f.args]
        except KeyError as e:
            raise UnknownNode(f"factor {f.id!r} references missing RV {e.args[0]!r}") from None
        assert f.table is not None
        order = sorted(range(len(axes)), key=lambda i: axes[i])
        arr = np.transpose(f.table.array, order)
        shape = [1] * len(sizes)
        for i in order:
            shape[axes[i]] = f.table.shape[i]
        acc = acc * arr.reshape(shape)
    z = float(acc.sum())
    if not np.isfinite(z) or z <= 0.0:
        raise ValueError("partition function is not positive and finite")
    return acc / z
