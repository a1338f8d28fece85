"""Colour passing: initial colours, refinement, groupings, grounded checks.

The chain and epidemic fixtures have hand-derived partitions; the random
graphs are checked against invariants instead (soundness of classes,
insertion-order and relabelling invariance, grounded reconstruction).
"""
import numpy as np
import pytest

from fglift import (
    BOOL_RANGE,
    Factor,
    FactorGraph,
    PotentialTable,
    RandomVariable,
    UnknownFactorPresent,
    colour_passing_step,
    compression_ratio,
    grounded_equivalence_check,
    grouping_from_colouring,
    grouping_report,
    initial_colouring,
    refine_to_fixpoint,
    run_colour_passing,
)
from fglift.colours import FactorClass, Grouping
from conftest import ASYMMETRIC_2x2, SYMMETRIC_2x2, chain_graph, epidemic_base, random_graph


def parts(colouring):
    return colouring.rv_partition(), colouring.factor_partition()


def as_sets(partition):
    return {frozenset(c) for c in partition}


def test_chain_initial_colours_are_structural():
    g = chain_graph()
    c = initial_colouring(g)
    assert c.rv_partition() == frozenset({frozenset({"A", "B", "C"})})
    assert c.factor_partition() == frozenset({frozenset({"f1", "f2"})})


def test_chain_one_step_splits_middle_variable():
    g = chain_graph()
    c = colour_passing_step(g, initial_colouring(g))
    assert c.rv_partition() == frozenset({frozenset({"A", "C"}), frozenset({"B"})})
    assert c.factor_partition() == frozenset({frozenset({"f1", "f2"})})


def test_chain_fixpoint_keeps_ends_together():
    # the symmetric table makes both argument slots interchangeable, so the
    # ends A and C receive identical messages and stay one class
    g = chain_graph()
    grouping = run_colour_passing(g)
    assert grouping.rv_partition() == frozenset(
        {frozenset({"A", "C"}), frozenset({"B"})}
    )
    assert grouping.factor_partition() == frozenset({frozenset({"f1", "f2"})})
    assert grounded_equivalence_check(g, grouping)


def test_chain_asymmetric_tables_split_everything():
    g = chain_graph(t1=ASYMMETRIC_2x2, t2=ASYMMETRIC_2x2)
    grouping = run_colour_passing(g)
    assert grouping.rv_partition() == frozenset(
        {frozenset({"A"}), frozenset({"B"}), frozenset({"C"})}
    )
    assert grouping.factor_partition() == frozenset(
        {frozenset({"f1"}), frozenset({"f2"})}
    )
    assert grounded_equivalence_check(g, grouping)


def test_evidence_splits_initial_colours():
    g = chain_graph(evidence={"A": "true"})
    c = initial_colouring(g)
    assert c.rv_partition() == frozenset({frozenset({"A"}), frozenset({"B", "C"})})
    # different observed values split too
    g2 = chain_graph(evidence={"A": "true", "C": "false"})
    assert len(initial_colouring(g2).rv_partition()) == 3


def test_reversed_arguments_group_when_tables_agree_canonically():
    t = PotentialTable((2, 2), ASYMMETRIC_2x2)
    flipped = PotentialTable.from_array(t.array.T)
    g = FactorGraph(
        (RandomVariable("A", BOOL_RANGE), RandomVariable("B", BOOL_RANGE)),
        (Factor("fa", ("A", "B"), t), Factor("fb", ("B", "A"), flipped)),
    )
    grouping = run_colour_passing(g)
    assert grouping.factor_partition() == frozenset({frozenset({"fa", "fb"})})
    cls = grouping.factor_classes[0]
    assert cls.members == ("fa", "fb")
    assert cls.member_table(0) == t
    assert cls.member_table(1) == flipped
    assert grounded_equivalence_check(g, grouping)


def test_epidemic_initial_and_final_partitions():
    g = epidemic_base()
    init = initial_colouring(g)
    assert as_sets(init.factor_partition()) == {
        frozenset({"f0"}),
        frozenset({"f1_alice", "f1_bob"}),
        frozenset({"f2_alice_m1", "f2_alice_m2", "f2_bob_m1", "f2_bob_m2"}),
        frozenset({"f3_alice", "f3_bob"}),
    }
    assert len(init.rv_partition()) == 1

    grouping = run_colour_passing(g)
    assert as_sets(grouping.rv_partition()) == {
        frozenset({"Epid"}),
        frozenset({"Sick.alice", "Sick.bob"}),
        frozenset({"Travel.alice", "Travel.bob"}),
        frozenset({"Treat.alice.m1", "Treat.alice.m2", "Treat.bob.m1", "Treat.bob.m2"}),
    }
    assert as_sets(grouping.factor_partition()) == as_sets(init.factor_partition())
    assert compression_ratio(grouping, g) == (4 / 9, 4 / 9)
    assert grounded_equivalence_check(g, grouping)


def test_identical_satellites_collapse_to_one_class():
    t = PotentialTable((2,), (1.0, 3.0))
    rvs = tuple(RandomVariable(f"x{i}", BOOL_RANGE) for i in range(5))
    fs = tuple(Factor(f"u{i}", (f"x{i}",), t) for i in range(5))
    odd = Factor("u_odd", ("x0",), PotentialTable((2,), (3.0, 1.0)))
    g = FactorGraph(rvs, fs)
    grouping = run_colour_passing(g)
    assert len(grouping.rv_classes) == 1 and len(grouping.factor_classes) == 1

    g2 = FactorGraph(rvs, fs + (odd,))
    grouping2 = run_colour_passing(g2)
    assert frozenset({"u_odd"}) in grouping2.factor_partition()
    assert frozenset({"x0"}) in grouping2.rv_partition()


def test_insertion_order_invariance():
    rng = np.random.default_rng(13)
    for _ in range(8):
        g = random_graph(rng)
        grouping = run_colour_passing(g)
        shuffled = FactorGraph(tuple(reversed(g.rvs)), tuple(reversed(g.factors)))
        assert run_colour_passing(shuffled) == grouping


def test_relabelling_equivariance():
    rng = np.random.default_rng(29)
    for _ in range(8):
        g = random_graph(rng)
        ren = {rid: f"zz_{rid}" for rid in g.rv_ids}
        ren.update({fid: f"qq_{fid}" for fid in g.factor_ids})
        mapped = FactorGraph(
            tuple(RandomVariable(ren[rv.id], rv.range, rv.evidence) for rv in g.rvs),
            tuple(
                Factor(ren[f.id], tuple(ren[a] for a in f.args), f.table)
                for f in g.factors
            ),
        )
        a = run_colour_passing(g)
        b = run_colour_passing(mapped)
        relabel = lambda part: {frozenset(ren[x] for x in c) for c in part}
        assert as_sets(b.rv_partition()) == relabel(a.rv_partition())
        assert as_sets(b.factor_partition()) == relabel(a.factor_partition())


def test_fixpoint_is_stable():
    rng = np.random.default_rng(37)
    for _ in range(5):
        g = random_graph(rng)
        fix = refine_to_fixpoint(g, initial_colouring(g))
        again = colour_passing_step(g, fix)
        assert parts(again) == parts(fix)


def test_classes_are_sound():
    # same class implies same range/degree for RVs, same canonical table and
    # argument count for factors
    from fglift import canonical_table

    rng = np.random.default_rng(43)
    for _ in range(10):
        g = random_graph(rng, n_rvs=7, n_factors=8)
        grouping = run_colour_passing(g)
        for members in grouping.rv_classes:
            ranges = {g.rv(m).range.values for m in members}
            degrees = {g.degree(m) for m in members}
            assert len(ranges) == 1 and len(degrees) == 1
        for cls in grouping.factor_classes:
            tables = {canonical_table(g.factor(m).table) for m in cls.members}
            arities = {len(g.factor(m).args) for m in cls.members}
            assert len(tables) == 1 and len(arities) == 1
        assert grounded_equivalence_check(g, grouping)


def test_grounded_check_rejects_wrong_merges():
    g = chain_graph(t2=ASYMMETRIC_2x2)  # f1 and f2 genuinely differ
    good = run_colour_passing(g)
    assert grounded_equivalence_check(g, good)

    ident = ((0, 1), (0, 1))
    merged = Grouping(
        good.rv_classes,
        (FactorClass(("f1", "f2"), g.factor("f1").table, ident),),
    )
    assert not grounded_equivalence_check(g, merged)


def test_grounded_check_rejects_structural_mangles():
    g = chain_graph()
    good = run_colour_passing(g)
    # missing RV
    assert not grounded_equivalence_check(
        g, Grouping(good.rv_classes[:-1], good.factor_classes)
    )
    # doubly grouped RV
    assert not grounded_equivalence_check(
        g, Grouping(good.rv_classes + (good.rv_classes[0],), good.factor_classes)
    )
    # missing factor class
    assert not grounded_equivalence_check(g, Grouping(good.rv_classes, ()))
    cls = good.factor_classes[0]
    # table withheld
    assert not grounded_equivalence_check(
        g, Grouping(good.rv_classes, (FactorClass(cls.members, None, None),))
    )
    # alignment count mismatch
    assert not grounded_equivalence_check(
        g,
        Grouping(
            good.rv_classes,
            (FactorClass(cls.members, cls.table, cls.alignments[:1]),),
        ),
    )


def test_initial_colouring_rejects_bad_unknown_tags():
    g = FactorGraph(
        (RandomVariable("A", BOOL_RANGE),),
        (Factor("f", ("A",)), Factor("k", ("A",), PotentialTable((2,), (1.0, 2.0)))),
    )
    with pytest.raises(UnknownFactorPresent):
        initial_colouring(g)
    with pytest.raises(ValueError):
        initial_colouring(g, unknown_tags={"f": 0, "k": 1})
    with pytest.raises(ValueError):
        initial_colouring(g, unknown_tags={"f": 0, "ghost": 1})


def test_unknown_tags_control_grouping():
    rvs = (RandomVariable("A", BOOL_RANGE), RandomVariable("B", BOOL_RANGE))
    fs = (Factor("u1", ("A",)), Factor("u2", ("B",)))
    g = FactorGraph(rvs, fs)
    shared = refine_to_fixpoint(g, initial_colouring(g, unknown_tags={"u1": 7, "u2": 7}))
    assert shared.factor_partition() == frozenset({frozenset({"u1", "u2"})})
    split = refine_to_fixpoint(g, initial_colouring(g, unknown_tags={"u1": 0, "u2": 1}))
    assert split.factor_partition() == frozenset({frozenset({"u1"}), frozenset({"u2"})})
    grouping = grouping_from_colouring(g, shared)
    with pytest.raises(UnknownFactorPresent):
        grouping.factor_classes[0].member_table(0)


def test_rtol_groups_nearly_equal_tables():
    base = (2.0, 3.0, 3.0, 5.0)
    jittered = tuple(x * (1.0 + 1e-9) for x in base)
    g = chain_graph(t1=base, t2=jittered)
    exact = run_colour_passing(g)
    assert frozenset({"f1"}) in exact.factor_partition()
    loose = run_colour_passing(g, rtol=1e-6)
    assert loose.factor_partition() == frozenset({frozenset({"f1", "f2"})})


def test_grouping_report_golden():
    report = grouping_report(run_colour_passing(epidemic_base()))
    assert report == (
        "class 0 kind=rv size=1 members=Epid\n"
        "class 1 kind=rv size=2 members=Sick.alice,Sick.bob\n"
        "class 2 kind=rv size=2 members=Travel.alice,Travel.bob\n"
        "class 3 kind=rv size=4 members=Treat.alice.m1,Treat.alice.m2,Treat.bob.m1,Treat.bob.m2\n"
        "class 4 kind=factor size=1 members=f0\n"
        "class 5 kind=factor size=2 members=f1_alice,f1_bob\n"
        "class 6 kind=factor size=4 members=f2_alice_m1,f2_alice_m2,f2_bob_m1,f2_bob_m2\n"
        "class 7 kind=factor size=2 members=f3_alice,f3_bob\n"
    )
