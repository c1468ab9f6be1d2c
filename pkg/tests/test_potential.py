import numpy as np
import pytest

import sparsewalk as sw
from sparsewalk.errors import AnchorBelowV0, InsufficientSupport, NotFoundInBox


def test_geometric_construction():
    spec = sw.build_geometric_sparse(1, v=1.0, base=3, box_radius=100)
    assert set(spec.sites) == {(s,) for s in (1, -1, 3, -3, 9, -9, 27, -27, 81, -81)}
    assert spec.v0 == 1.0
    assert spec.value((9,)) == 1.0
    assert spec.value((2,)) == 0.0


def test_geometric_anchor():
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=100, anchor=((0,), 2.0))
    assert spec.value((0,)) == 2.0
    assert spec.v0 == 1.0  # anchor is a single site, not an essential value
    with pytest.raises(AnchorBelowV0):
        sw.build_geometric_sparse(1, 1.0, 3, box_radius=100, anchor=((0,), 0.5))


def test_decaying_constraint():
    with pytest.raises(ValueError):
        sw.make_potential(1, {(0,): 1.0}, tail="decaying", essential_values=(0.0, 1.0))
    spec = sw.make_potential(1, {(x,): 2.0 ** (-abs(x)) for x in range(-20, 21)})
    assert spec.v0 == 0.0


def test_v0_of_examples():
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=100)
    declared, empirical = sw.v0_of(spec, [5, 20, 50, 81])
    assert declared == 1.0
    assert empirical == [1.0, 1.0, 1.0, 1.0]

    decaying = sw.make_potential(1, {(x,): 2.0 ** (-abs(x)) for x in range(-30, 31)},
                                 box_radius=64)
    declared, empirical = sw.v0_of(decaying, [5, 15, 30])
    assert declared == 0.0
    assert empirical[0] > empirical[1] > empirical[2]
    assert empirical[-1] <= 2.0**-30


def test_v0_alternating_values():
    # values alternating 1, 1/2 on sparse sites: v0 = 1, both levels essential
    vals = {}
    for j, site in enumerate([2**k for k in range(1, 10)]):
        vals[(site,)] = 1.0 if j % 2 == 0 else 0.5
        vals[(-site,)] = vals[(site,)]
    spec = sw.make_potential(
        1, vals, tail="sparse", essential_values=(0.0, 0.5, 1.0), box_radius=1024
    )
    declared, empirical = sw.v0_of(spec, [2, 100, 256])
    assert declared == 1.0
    assert all(e == 1.0 for e in empirical)


def test_sparseness_profile_single_site():
    spec = sw.single_delta(1, 2.0, box_radius=64)
    prof = sw.sparseness_profile(spec, 1.0)
    assert dict(prof.samples)[(0,)] == 0.0
    assert prof.sup_tail[-1][1] == 0.0


def test_sparseness_profile_base2_strictly_decreasing():
    # base 2 places one site per octave, so each tail radius drops the sup
    spec = sw.build_geometric_sparse(1, 1.0, 2, box_radius=2048)
    for eps in (0.25, 0.5, 1.0):
        sups = [s for _, s in sw.sparseness_profile(spec, eps).sup_tail]
        assert sups[0] > sups[1] > sups[2]


def test_sparseness_profile_base3_collapses():
    # base-3 gaps triple while tail radii double, so consecutive sups can tie;
    # the profile still collapses from first to last radius
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=2048)
    for eps in (0.25, 0.5, 1.0):
        sups = [s for _, s in sw.sparseness_profile(spec, eps).sup_tail]
        assert sups[0] >= sups[1] >= sups[2]
        assert sups[2] < 1e-6 * max(sups[0], 1e-300)


def test_sparseness_dense_control():
    spec = sw.dense_level(1, 1.0, box_radius=128)
    prof = sw.sparseness_profile(spec, 0.5)
    sups = [s for _, s in prof.sup_tail]
    assert min(sups) > 1.0  # bounded away from zero: condition fails


def test_pair_separation_examples():
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=100)
    assert sw.pair_separation(spec, 2) == 6.0
    assert sw.pair_separation(spec, 9) == 18.0
    assert sw.pair_separation(spec, 20) == 54.0
    two = sw.make_potential(1, {(1,): 1.0, (-1,): 1.0}, tail="sparse",
                            essential_values=(0.0, 1.0), box_radius=8)
    with pytest.raises(InsufficientSupport):
        sw.pair_separation(two, 5)


def test_concentration_cube_examples():
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=100)
    assert sw.find_concentration_cube(spec, 10, 2, 0.5) == (27,)
    assert sw.find_concentration_cube(spec, 1, 1, 0.9) == (3,)
    decaying = sw.make_potential(1, {(x,): 2.0 ** (-abs(x)) for x in range(-20, 21)})
    with pytest.raises(ValueError):
        sw.find_concentration_cube(decaying, 1, 1, 0.5)
    with pytest.raises(NotFoundInBox):
        sw.find_concentration_cube(spec, 90, 5, 0.5)


def test_concentration_cube_conditions_hold():
    spec = sw.build_geometric_sparse(1, 1.0, 2, box_radius=2048)
    for L, ell, eps in ((5, 2, 0.5), (40, 3, 0.25), (100, 4, 0.1)):
        c = sw.find_concentration_cube(spec, L, ell, eps)
        assert max(abs(x) for x in c) > L + ell
        assert spec.value(c) > (1 - eps) * spec.v0
        total = sum(
            spec.value((c[0] + o,)) for o in range(-ell, ell + 1) if o != 0
        )
        assert total < eps


def test_essential_value_counts_grow():
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=2048)
    for eps in (0.1, 0.01):
        counts = sw.essential_value_counts(spec, eps, [64, 512, 2048])
        for v, seq in counts.items():
            assert seq[0] < seq[1] < seq[2], (v, seq)


def test_sup_norm_bound():
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=100, anchor=((0,), 2.5))
    assert spec.sup_norm == 2.5
    _, empirical = sw.v0_of(spec, [1, 50])
    assert max(empirical) <= spec.sup_norm
