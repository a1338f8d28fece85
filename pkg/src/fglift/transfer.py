"""Completing unknown factors by transferring structurally matching potentials.

An unknown factor's potentials are recovered from known factors that the
graph structure cannot tell apart from it: identical argument count and the
same multiset of (evidence, range, degree) profiles over their neighbour
variables. Candidates split into classes of factors that are also mutually
identical in their potentials; the largest class wins, optionally filtered
by background knowledge about which factors describe the same individual,
and its table is copied onto the unknown factor whenever the class covers
at least a ``theta`` fraction of all candidates. The completed graph is
then grouped by colour passing, with still-unresolved unknown factors
pre-coloured (uniquely, except that mutually indistinguishable unknowns
share a colour).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .colours import Grouping, run_colour_passing
from .model import BackgroundKnowledge, FactorGraph
from .tables import PotentialTable, canonical_info, canonical_table, tables_equal


def two_step_neighbourhood(fg: FactorGraph, factor_id: str) -> frozenset[str]:
    """The factor itself, its argument RVs, and every factor sharing an RV."""
    f = fg.factor(factor_id)
    out: set[str] = {factor_id}
    for arg in f.args:
        out.add(arg)
        out.update(fg.factors_of(arg))
    return frozenset(out)


def _neighbour_profile(fg: FactorGraph, factor_id: str) -> tuple:
    """Sorted multiset of (evidence, range, degree) triples over the factor's RVs."""
    f = fg.factor(factor_id)
    triples = []
    for arg in f.args:
        rv = fg.rv(arg)
        triples.append(
            (rv.evidence is not None, rv.evidence or "", rv.range.values, fg.degree(arg))
        )
    return tuple(sorted(triples))


def indistinguishable(fg: FactorGraph, a: str, b: str) -> bool:
    """True iff the two factors' neighbourhoods cannot be told apart.

    Requires equally many arguments and a degree-, range- and
    evidence-preserving correspondence between the neighbour RVs, i.e.
    equal profile multisets. This is an equivalence relation.
    """
    fa, fb = fg.factor(a), fg.factor(b)
    if len(fa.args) != len(fb.args):
        return False
    return _neighbour_profile(fg, a) == _neighbour_profile(fg, b)


def possibly_identical(fg: FactorGraph, a: str, b: str, rtol: float = 0.0) -> bool:
    """Indistinguishable, and the potentials do not contradict each other.

    Potentials cannot contradict when either factor is unknown; for two
    known factors the tables must agree under canonical argument alignment
    (within ``rtol``).
    """
    if not indistinguishable(fg, a, b):
        return False
    fa, fb = fg.factor(a), fg.factor(b)
    if fa.is_unknown or fb.is_unknown:
        return True
    assert fa.table is not None and fb.table is not None
    return tables_equal(canonical_table(fa.table), canonical_table(fb.table), rtol)


@dataclass(frozen=True)
class Selection:
    """Outcome of choosing a donor class for one unknown factor.

    ``alignment`` holds the transpose axes that map the donor's table onto
    the recipient's argument order; None while the selection is rejected.
    """

    members: tuple[str, ...]
    ratio: float
    accepted: bool
    bk_state: str  # "yes" | "no" | "n/a"
    alignment: tuple[int, ...] | None = None

    @property
    def donor(self) -> str:
        return self.members[0]


@dataclass(frozen=True)
class CandidateSet:
    """Known factors that could plausibly share an unknown factor's potentials.

    ``classes`` partitions the candidates into maximal sets whose members
    are also pairwise possibly identical to each other, largest class first
    (ties broken by smallest member id).
    """

    unknown_factor: str
    candidates: tuple[str, ...]
    classes: tuple[tuple[str, ...], ...]
    chosen: Selection | None = None


def _candidate_classes(
    fg: FactorGraph, candidates: list[str], rtol: float
) -> tuple[tuple[str, ...], ...]:
    # Candidates are mutually indistinguishable already, so the maximal
    # pairwise possibly-identical subsets are exactly the classes of equal
    # canonical tables.
    groups: list[tuple[PotentialTable, list[str]]] = []
    for fid in sorted(candidates):
        table = fg.factor(fid).table
        assert table is not None
        canon = canonical_table(table)
        for rep, members in groups:
            if tables_equal(rep, canon, rtol):
                members.append(fid)
                break
        else:
            groups.append((canon, [fid]))
    classes = [tuple(members) for _, members in groups]
    classes.sort(key=lambda c: (-len(c), c))
    return tuple(classes)


def candidate_sets(fg: FactorGraph, rtol: float = 0.0) -> list[CandidateSet]:
    """One CandidateSet per unknown factor, in sorted id order."""
    known = [f.id for f in fg.factors if not f.is_unknown]
    out = []
    for uid in sorted(fg.unknown_factor_ids):
        cands = [kid for kid in known if indistinguishable(fg, uid, kid)]
        out.append(
            CandidateSet(uid, tuple(sorted(cands)), _candidate_classes(fg, cands, rtol))
        )
    return out


def _supporting_individual(
    fg: FactorGraph, unknown_factor: str, bk: BackgroundKnowledge, rtol: float
) -> frozenset[str] | None:
    """Factor ids of the unique individual that mirrors the unknown factor's own.

    Returns None when the unknown factor belongs to no individual (no
    constraint applies) and an empty set when no unique mirror exists.
    A mirror individual must hold, for every known factor of the unknown
    factor's individual, a known factor with the same canonical table.
    """
    own = bk.individual_of(unknown_factor)
    if own is None:
        return None
    own_known = [
        fid
        for fid in bk.factors_of(own)
        if fg.has_factor(fid) and not fg.factor(fid).is_unknown
    ]
    mirrors = []
    for other, fids in bk.groups:
        if other == own:
            continue
        others_known = [
            g for g in fids if fg.has_factor(g) and not fg.factor(g).is_unknown
        ]
        ok = True
        for fl in own_known:
            tl = canonical_table(fg.factor(fl).table)  # type: ignore[arg-type]
            if not any(
                tables_equal(tl, canonical_table(fg.factor(g).table), rtol)  # type: ignore[arg-type]
                for g in others_known
            ):
                ok = False
                break
        if ok:
            mirrors.append(frozenset(fids))
    if len(mirrors) != 1:
        return frozenset()
    return mirrors[0]


def select_transfer_class(
    fg: FactorGraph,
    cs: CandidateSet,
    theta: float,
    bk: BackgroundKnowledge | None = None,
    rtol: float = 0.0,
) -> Selection | None:
    """Pick the donor class for one candidate set.

    Without background knowledge the largest class wins (ties by smallest
    member id). With it, classes containing a factor of the unknown
    factor's unique mirror individual are preferred; if none qualifies the
    choice falls back to the largest class. The selection is accepted only
    when the chosen class covers at least ``theta`` of all candidates.
    ``bk_state`` records whether the mirror preference decided ("yes"),
    failed ("no"), or never applied ("n/a").
    """
    if not cs.candidates:
        return None
    pool = cs.classes
    bk_state = "n/a"
    if bk is not None:
        mirror = _supporting_individual(fg, cs.unknown_factor, bk, rtol)
        if mirror is not None:
            supported = tuple(c for c in cs.classes if set(c) & mirror)
            if supported:
                pool = supported
                bk_state = "yes"
            else:
                bk_state = "no"
    chosen = pool[0]
    ratio = len(chosen) / len(cs.candidates)
    accepted = ratio >= theta
    alignment = (
        _transfer_alignment(fg, chosen[0], cs.unknown_factor) if accepted else None
    )
    return Selection(chosen, ratio, accepted, bk_state, alignment)


def _transfer_alignment(fg: FactorGraph, donor: str, recipient: str) -> tuple[int, ...]:
    """Axes mapping the donor's table onto the recipient's argument order.

    Positions are matched by their (evidence, range, degree) triples;
    positionally matching factors get the identity. Interchangeable
    positions (equal triples) are matched in position order.
    """

    def triples(fid: str) -> list[tuple]:
        f = fg.factor(fid)
        out = []
        for arg in f.args:
            rv = fg.rv(arg)
            out.append(
                (rv.evidence is not None, rv.evidence or "", rv.range.values, fg.degree(arg))
            )
        return out

    dt, rt = triples(donor), triples(recipient)
    if dt == rt:
        return tuple(range(len(dt)))
    donor_order = sorted(range(len(dt)), key=lambda i: (dt[i], i))
    recip_order = sorted(range(len(rt)), key=lambda i: (rt[i], i))
    axes = [0] * len(rt)
    for d_pos, r_pos in zip(donor_order, recip_order):
        axes[r_pos] = d_pos
    return tuple(axes)


@dataclass(frozen=True)
class TransferReport:
    """Per-unknown-factor transfer decisions plus the leftovers."""

    rows: tuple[CandidateSet, ...]
    unresolved: tuple[str, ...]
    theta: float


@dataclass(frozen=True)
class CompletionResult:
    completed: FactorGraph
    grouping: Grouping
    report: TransferReport


def complete_and_lift(
    fg: FactorGraph,
    theta: float,
    bk: BackgroundKnowledge | None = None,
    rtol: float = 0.0,
) -> CompletionResult:
    """Transfer potentials onto unknown factors, then group by colour passing.

    Every unknown factor with an accepted donor class receives the donor's
    table (the class's smallest id), aligned to its own argument order.
    Unresolved unknown factors enter colour passing with pre-set colours:
    unique, except that mutually indistinguishable unknowns share one.
    """
    unknowns = sorted(fg.unknown_factor_ids)

    # Shared colours for indistinguishable unknowns.
    profile_groups: dict[tuple, list[str]] = {}
    for uid in unknowns:
        key = (len(fg.factor(uid).args), _neighbour_profile(fg, uid))
        profile_groups.setdefault(key, []).append(uid)
    tags: dict[str, int] = {}
    for tag, (_, members) in enumerate(sorted(profile_groups.items(), key=lambda kv: kv[1][0])):
        for uid in members:
            tags[uid] = tag

    rows: list[CandidateSet] = []
    transfers: dict[str, PotentialTable] = {}
    for cs in candidate_sets(fg, rtol):
        sel = select_transfer_class(fg, cs, theta, bk, rtol)
        rows.append(replace(cs, chosen=sel))
        if sel is not None and sel.accepted:
            donor_table = fg.factor(sel.donor).table
            assert donor_table is not None and sel.alignment is not None
            transfers[cs.unknown_factor] = PotentialTable.from_array(
                np.transpose(donor_table.array, sel.alignment)
            )
    completed = fg.with_tables(transfers)
    unresolved = tuple(uid for uid in unknowns if uid not in transfers)
    remaining_tags = {uid: tags[uid] for uid in unresolved}
    grouping = run_colour_passing(completed, rtol, unknown_tags=remaining_tags)
    report = TransferReport(tuple(rows), unresolved, theta)
    return CompletionResult(completed, grouping, report)


def transfer_report_text(report: TransferReport) -> str:
    """Stable one-line-per-unknown-factor report."""
    lines = []
    for cs in report.rows:
        sizes = ",".join(str(len(c)) for c in cs.classes) if cs.classes else "-"
        sel = cs.chosen
        if sel is None:
            chosen, ratio, bk_state = "none", 0.0, "n/a"
        else:
            chosen = sel.donor if sel.accepted else "none"
            ratio, bk_state = sel.ratio, sel.bk_state
        lines.append(
            f"unknown {cs.unknown_factor} candidates={len(cs.candidates)} "
            f"classes={sizes} chosen={chosen} ratio={format(ratio, '.6g')} bk={bk_state}"
        )
    return "\n".join(lines) + ("\n" if lines else "")
