import numpy as np
import pytest

from cokernel_lab.errors import GroupTooLarge, NotASubgroup, NotInSp
from cokernel_lab.groups import (
    AbGroupType,
    Partition,
    PGroupType,
    aut_order,
    conjugate,
    count_symmetric_perfect_pairings,
    enumerate_subgroups,
    ext_square_order,
    is_perfect_alternating,
    moebius,
    partitions,
    pgroup,
    sp_order,
    standard_alternating_form,
    sym_square_order,
)


@pytest.mark.parametrize(
    "lam, expected",
    [((), ()), ((3, 1), (2, 1, 1)), ((2, 1), (2, 1)), ((1, 1, 1), (3,))],
)
def test_conjugate_examples(lam, expected):
    assert conjugate(Partition(lam)) == Partition(expected)


def test_partition_rejects_bad_parts():
    with pytest.raises(ValueError):
        Partition((1, 2))
    with pytest.raises(ValueError):
        Partition((2, 0))
    assert Partition.of([1, 3, 2]) == Partition((3, 2, 1))


def test_partition_counts():
    assert [sum(1 for _ in partitions(n)) for n in range(8)] == [1, 1, 2, 3, 5, 7, 11, 15]


def test_pgroup_basics():
    G = pgroup(2, 2, 1)
    assert G.order == 8 and G.exponent == 4 and G.rank == 2
    assert G.moduli == (4, 2)
    assert G.torsion_order(1) == 4
    assert PGroupType(3).order == 1 and PGroupType(3).exponent == 1
    assert PGroupType.from_json(G.to_json()) == G
    assert G.to_json() == {"p": 2, "lambda": [2, 1]}
    with pytest.raises(ValueError):
        PGroupType(4, (1,))


def test_square_membership():
    assert pgroup(2, 1, 1).is_square()
    assert pgroup(2, 2, 2, 1, 1).is_square()
    assert not pgroup(3, 1).is_square()
    assert pgroup(2, 2, 2, 1, 1).half() == pgroup(2, 2, 1)
    with pytest.raises(NotInSp):
        pgroup(2, 2, 1).half()


def test_abgroup_type_splits_primes():
    H = AbGroupType.from_cyclic_orders([6, 4])
    assert H.primes == (2, 3)
    assert H.component(2) == pgroup(2, 2, 1)
    assert H.component(3) == pgroup(3, 1)
    assert H.component(5) == PGroupType(5)
    assert H.order == 24
    assert H.to_json() == {"2": [2, 1], "3": [1]}
    assert AbGroupType.from_json(H.to_json()) == H


@pytest.mark.parametrize(
    "G, expected",
    [(pgroup(3, 1), 1), (pgroup(2, 1, 1), 2), (pgroup(2, 2, 1), 2), (PGroupType(2), 1)],
)
def test_ext_square_examples(G, expected):
    assert ext_square_order(G) == expected


@pytest.mark.parametrize(
    "G, expected",
    [(PGroupType(2), 1), (pgroup(2, 1), 2), (pgroup(3, 1, 1), 27)],
)
def test_sym_square_examples(G, expected):
    assert sym_square_order(G) == expected


@pytest.mark.parametrize(
    "G, expected",
    [(pgroup(5, 1), 4), (pgroup(2, 1, 1), 6), (pgroup(2, 2, 1), 8), (PGroupType(2), 1), (pgroup(2, 1, 1, 1), 168)],
)
def test_aut_order_examples(G, expected):
    assert aut_order(G) == expected


@pytest.mark.parametrize(
    "H, expected",
    [
        (PGroupType(2), 1),
        (pgroup(2, 1), 1),
        (pgroup(2, 1, 1), 4),
        (pgroup(3, 1), 2),
        (pgroup(3, 1, 1), 18),
        (pgroup(2, 2, 1), 4),
    ],
)
def test_symmetric_pairing_examples(H, expected):
    assert count_symmetric_perfect_pairings(H) == expected


@pytest.mark.parametrize(
    "H, expected",
    [
        (PGroupType(2), 1),
        (pgroup(2, 1, 1), 6),
        (pgroup(3, 1, 1), 24),
        (pgroup(2, 1, 1, 1, 1), 720),
        (pgroup(2, 2, 2), 48),
        (pgroup(3, 1, 1, 1, 1), 51840),
    ],
)
def test_sp_order_examples(H, expected):
    assert sp_order(H) == expected


def test_sp_order_rejects_non_square():
    with pytest.raises(NotInSp):
        sp_order(pgroup(2, 1))
    with pytest.raises(NotInSp):
        sp_order(pgroup(2, 2, 1))


def test_sp_order_independent_of_form():
    # second form: the hyperbolic Gram matrix scaled by a unit, or transported by a base change
    cases = [
        (pgroup(3, 1, 1), 2, np.eye(2, dtype=np.int64)),
        (pgroup(2, 2, 2), 3, np.eye(2, dtype=np.int64)),
        (pgroup(2, 1, 1, 1, 1), 1, np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [0, 0, 0, 1]])),
        (pgroup(3, 1, 1, 1, 1), 1, np.array([[1, 2, 0, 1], [0, 1, 0, 0], [1, 0, 1, 0], [0, 0, 0, 1]])),
    ]
    for H, unit, P in cases:
        omega = standard_alternating_form(H)
        q = H.exponent
        other = (unit * P.T @ omega @ P) % q
        assert not np.array_equal(other, omega)
        assert is_perfect_alternating(H, other)
        assert sp_order(H, other) == sp_order(H)


def test_sp_order_guard():
    with pytest.raises(GroupTooLarge):
        sp_order(pgroup(3, 2, 2, 1, 1, 1, 1))


def test_pairing_guard():
    with pytest.raises(GroupTooLarge):
        count_symmetric_perfect_pairings(pgroup(2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1))


@pytest.mark.parametrize("G, count", [(pgroup(2, 1), 2), (pgroup(2, 1, 1), 5), (pgroup(3, 2), 3), (pgroup(2, 2, 1), 8)])
def test_subgroup_counts(G, count):
    subs = enumerate_subgroups(G)
    assert len(subs) == count
    assert len({s.codes for s in subs}) == count
    for s in subs:
        assert s.is_closed()
        assert G.order % s.order == 0
        assert (0,) * G.rank in s.elements


def test_subgroup_guard():
    with pytest.raises(GroupTooLarge):
        enumerate_subgroups(pgroup(2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1))


def test_moebius_examples():
    G = pgroup(2, 1, 1)
    subs = enumerate_subgroups(G)
    by_order = {}
    for s in subs:
        by_order.setdefault(s.order, []).append(s)
    assert moebius(by_order[4][0], G) == 1
    assert all(moebius(s, G) == -1 for s in by_order[2])
    assert moebius(by_order[1][0], G) == 2


def test_moebius_rejects_foreign_subgroup():
    small = enumerate_subgroups(pgroup(2, 1))[0]
    with pytest.raises(NotASubgroup):
        moebius(small, pgroup(3, 1))


def test_moebius_sums_vanish():
    for G in (pgroup(2, 1), pgroup(2, 1, 1), pgroup(2, 2, 1), pgroup(3, 1, 1), pgroup(2, 3)):
        assert sum(moebius(K, G) for K in enumerate_subgroups(G)) == 0
    T = PGroupType(2)
    assert sum(moebius(K, T) for K in enumerate_subgroups(T)) == 1


def test_subgroup_types():
    types = sorted(str(s.group_type()) for s in enumerate_subgroups(pgroup(2, 2, 1)))
    assert types.count("Z/4") == 2
    assert types.count("Z/2 x Z/2") == 1
    assert types.count("Z/4 x Z/2") == 1
